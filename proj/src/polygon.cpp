#include "roth/polygon.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;
}

ControlPolygon::ControlPolygon(int degree, Eigen::VectorXd coords)
    : degree_(degree), coords_(std::move(coords)) {
    if (degree_ < 1)
        throw std::invalid_argument("ControlPolygon: degree must be >= 1");
    const int expect = 2 * (2 * degree_ + 1);
    if (coords_.size() != expect)
        throw std::invalid_argument("ControlPolygon: expected " + std::to_string(expect) +
                                    " coords, got " + std::to_string(coords_.size()));
    if (!coords_.allFinite())
        throw std::invalid_argument("ControlPolygon: non-finite coordinate");
}

Eigen::Vector2d ControlPolygon::point(int j) const {
    if (j < 1 || j > num_points())
        throw std::out_of_range("ControlPolygon::point: index out of range");
    return coords_.segment<2>(2 * (j - 1));
}

void ControlPolygon::set_point(int j, const Eigen::Vector2d& p) {
    if (j < 1 || j > num_points())
        throw std::out_of_range("ControlPolygon::set_point: index out of range");
    coords_.segment<2>(2 * (j - 1)) = p;
}

std::string ControlPolygon::to_json() const {
    nlohmann::json out;
    out["degree"] = degree_;
    out["coords"] = std::vector<double>(coords_.data(), coords_.data() + coords_.size());
    return out.dump();
}

ControlPolygon ControlPolygon::from_json(const std::string& text) {
    const auto in = nlohmann::json::parse(text);
    const int degree = in.at("degree").get<int>();
    const auto vals = in.at("coords").get<std::vector<double>>();
    Eigen::VectorXd coords = Eigen::Map<const Eigen::VectorXd>(vals.data(), (long)vals.size());
    return ControlPolygon(degree, std::move(coords));
}

double influence_param(int degree, int j) {
    const int J = 2 * degree + 1;
    return -2.0 * kPi * (j - 1) / J;
}

double basis_amplitude(int degree) {
    if (degree < 1)
        throw std::invalid_argument("basis_amplitude: degree must be >= 1");
    // a_n = 2^n (n!)^2 / (2n+1)!  via  a_m = a_{m-1} * m / (2m+1)
    double a = 1.0;
    for (int m = 1; m <= degree; ++m)
        a *= static_cast<double>(m) / (2 * m + 1);
    return a;
}

static void check_basis_args(int degree, int j) {
    if (degree < 1)
        throw std::invalid_argument("basis_weight: degree must be >= 1");
    if (j < 1 || j > 2 * degree + 1)
        throw std::out_of_range("basis_weight: basis index out of range");
}

double basis_weight(int degree, int j, double t) {
    check_basis_args(degree, j);
    const double u = t + 2.0 * kPi * (j - 1) / (2 * degree + 1);
    const double base = 1.0 + std::cos(u);
    return basis_amplitude(degree) * std::pow(base, degree);
}

double basis_weight_deriv(int degree, int j, double t) {
    check_basis_args(degree, j);
    const double u = t + 2.0 * kPi * (j - 1) / (2 * degree + 1);
    const double base = 1.0 + std::cos(u);
    const double p = (degree == 1) ? 1.0 : std::pow(base, degree - 1);
    return -basis_amplitude(degree) * degree * p * std::sin(u);
}

Eigen::Vector2d curve_point(const ControlPolygon& c, double t) {
    const int J = c.num_points();
    const double a = basis_amplitude(c.degree());
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (int j = 1; j <= J; ++j) {
        const double u = t + 2.0 * kPi * (j - 1) / J;
        const double w = a * std::pow(1.0 + std::cos(u), c.degree());
        out += w * c.coords().segment<2>(2 * (j - 1));
    }
    return out;
}

Eigen::Vector2d hodograph_point(const ControlPolygon& c, double t) {
    const int J = c.num_points();
    const int n = c.degree();
    const double a = basis_amplitude(n);
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (int j = 1; j <= J; ++j) {
        const double u = t + 2.0 * kPi * (j - 1) / J;
        const double base = 1.0 + std::cos(u);
        const double p = (n == 1) ? 1.0 : std::pow(base, n - 1);
        const double w = -a * n * p * std::sin(u);
        out += w * c.coords().segment<2>(2 * (j - 1));
    }
    return out;
}

Eigen::MatrixXd design_rows(int degree, double t) {
    const int J = 2 * degree + 1;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 2 * J);
    for (int j = 1; j <= J; ++j) {
        const double w = basis_weight(degree, j, t);
        X(0, 2 * (j - 1)) = w;
        X(1, 2 * (j - 1) + 1) = w;
    }
    return X;
}

Eigen::MatrixXd design_rows_deriv(int degree, double t) {
    const int J = 2 * degree + 1;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, 2 * J);
    for (int j = 1; j <= J; ++j) {
        const double w = basis_weight_deriv(degree, j, t);
        X(0, 2 * (j - 1)) = w;
        X(1, 2 * (j - 1) + 1) = w;
    }
    return X;
}

Eigen::RowVectorXd deriv_row_x(int degree, double t) {
    const int J = 2 * degree + 1;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * J);
    for (int j = 1; j <= J; ++j)
        row(2 * (j - 1)) = basis_weight_deriv(degree, j, t);
    return row;
}

Eigen::RowVectorXd deriv_row_y(int degree, double t) {
    const int J = 2 * degree + 1;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(2 * J);
    for (int j = 1; j <= J; ++j)
        row(2 * (j - 1) + 1) = basis_weight_deriv(degree, j, t);
    return row;
}

Eigen::MatrixXd stacked_design_serial(int degree, const Eigen::VectorXd& t) {
    const int J = 2 * degree + 1;
    const long N = t.size();
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2 * N, 2 * J);
    const double a = basis_amplitude(degree);
    for (long i = 0; i < N; ++i) {
        for (int j = 1; j <= J; ++j) {
            const double u = t(i) + 2.0 * kPi * (j - 1) / J;
            const double w = a * std::pow(1.0 + std::cos(u), degree);
            X(2 * i, 2 * (j - 1)) = w;
            X(2 * i + 1, 2 * (j - 1) + 1) = w;
        }
    }
    return X;
}

Eigen::MatrixXd stacked_design(int degree, const Eigen::VectorXd& t) {
    const int J = 2 * degree + 1;
    const long N = t.size();
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2 * N, 2 * J);
    const double a = basis_amplitude(degree);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < N; ++i) {
        for (int j = 1; j <= J; ++j) {
            const double u = t(i) + 2.0 * kPi * (j - 1) / J;
            const double w = a * std::pow(1.0 + std::cos(u), degree);
            X(2 * i, 2 * (j - 1)) = w;
            X(2 * i + 1, 2 * (j - 1) + 1) = w;
        }
    }
    return X;
}

} // namespace roth
