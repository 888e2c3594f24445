#pragma once

#include <Eigen/Dense>

#include "roth/polygon.hpp"

namespace roth {

// Cumulative arc length of a closed curve over [-pi, pi], built once from a
// composite-trapezoid table on a uniform parameter grid.
class ArcLengthMap {
public:
    explicit ArcLengthMap(ControlPolygon polygon, int resolution = 2048);

    const ControlPolygon& polygon() const { return polygon_; }
    int resolution() const { return resolution_; }
    double total_length() const { return table_(resolution_); }

    // A(u) = integral of ||H|| from -pi to u.
    double length_at(double u) const;
    // A^{-1}(l) for l in [0, L], monotone bracket + bisection to 1e-9 * L.
    double param_at(double l) const;

private:
    double speed(double t) const;

    ControlPolygon polygon_;
    int resolution_;
    Eigen::VectorXd speeds_; // resolution_+1 nodes
    Eigen::VectorXd table_;  // cumulative trapezoid
};

} // namespace roth
