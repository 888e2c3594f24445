#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace roth {

// Closed cyclic curve of degree n with J = 2n+1 control points.
// Control points are stored in a stacked vector
//   (c_1x, c_1y, c_2x, c_2y, ..., c_Jx, c_Jy)
// Indices j are 1-based in the API and map to storage slots 2(j-1), 2(j-1)+1.
class ControlPolygon {
public:
    ControlPolygon(int degree, Eigen::VectorXd coords);

    int degree() const { return degree_; }
    int num_points() const { return 2 * degree_ + 1; }
    const Eigen::VectorXd& coords() const { return coords_; }
    Eigen::VectorXd& coords() { return coords_; }

    Eigen::Vector2d point(int j) const;        // j in 1..J
    void set_point(int j, const Eigen::Vector2d& p);

    std::string to_json() const;
    static ControlPolygon from_json(const std::string& text);

private:
    int degree_;
    Eigen::VectorXd coords_;
};

// Parameter location where control point j has the strongest influence.
double influence_param(int degree, int j);

// Normalizing amplitude h_n / 2^n, computed by recurrence (no factorial overflow).
double basis_amplitude(int degree);

// B_j^n(t); j in 1..2n+1, t in [-pi, pi]. Nonnegative, sums to 1 over j.
double basis_weight(int degree, int j, double t);

// d/dt B_j^n(t).
double basis_weight_deriv(int degree, int j, double t);

Eigen::Vector2d curve_point(const ControlPolygon& c, double t);
Eigen::Vector2d hodograph_point(const ControlPolygon& c, double t);

// 2 x 2J design matrix X(t) with C(t) = X(t) c.
Eigen::MatrixXd design_rows(int degree, double t);
// 2 x 2J derivative rows with H(t) = Xdot(t) c.
Eigen::MatrixXd design_rows_deriv(int degree, double t);
// Scalar coordinate rows Xdot_x, Xdot_y as length-2J vectors.
Eigen::RowVectorXd deriv_row_x(int degree, double t);
Eigen::RowVectorXd deriv_row_y(int degree, double t);

// Stacked design matrix (2N x 2J) for a vector of parameter values.
Eigen::MatrixXd stacked_design(int degree, const Eigen::VectorXd& t);
Eigen::MatrixXd stacked_design_serial(int degree, const Eigen::VectorXd& t);

} // namespace roth
