#include "roth/likelihood.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kLog2Pi = 1.8378770664093454836;
}

void ObservationSet::validate() const {
    const int n = count();
    if (points.size() != 2 * n)
        throw std::invalid_argument("ObservationSet: points/params length mismatch");
    if (theta.size() != 0 && theta.size() != n)
        throw std::invalid_argument("ObservationSet: theta length mismatch");
    for (int i = 0; i < n; ++i)
        if (params(i) < -kPi - 1e-9 || params(i) > kPi + 1e-9)
            throw std::invalid_argument("ObservationSet: parameter outside [-pi, pi]");
}

ObservationSet ObservationSet::from_cloud(const OrientedPointCloud& cloud) {
    ObservationSet obs;
    obs.points = cloud.stacked();
    obs.params = Eigen::VectorXd::Zero(cloud.size());
    if (cloud.has_angles())
        obs.theta = Eigen::Map<const Eigen::VectorXd>(cloud.theta.data(), cloud.size());
    return obs;
}

double loglik_points(const ControlPolygon& c, const ObservationSet& obs, double tau_p) {
    if (!(tau_p > 0.0))
        throw std::domain_error("loglik_points: tau_p must be positive");
    const int n = obs.count();
    double rss = 0.0;
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d pred = curve_point(c, obs.params(i));
        rss += (obs.points.segment<2>(2 * i) - pred).squaredNorm();
    }
    const double sigma_sq = 1.0 / tau_p;
    return -n * (kLog2Pi + std::log(sigma_sq)) - 0.5 * tau_p * rss;
}

double orientation_logpdf(double hx, double hy, double theta, double tau_sq) {
    if (!(tau_sq > 0.0))
        throw std::domain_error("orientation_logpdf: tau_sq must be positive");
    const double s = std::sin(theta), co = std::cos(theta);
    const double resid = hy * co - hx * s;
    return -0.5 * std::log(2.0 * kPi * tau_sq) + std::log(std::abs(co)) -
           0.5 * resid * resid / tau_sq;
}

double loglik_orientations(const ControlPolygon& c, const ObservationSet& obs, double tau_sq) {
    if (!obs.has_angles())
        throw std::invalid_argument("loglik_orientations: no orientation data");
    double out = 0.0;
    for (int i = 0; i < obs.count(); ++i) {
        const Eigen::Vector2d h = hodograph_point(c, obs.params(i));
        out += orientation_logpdf(h.x(), h.y(), obs.theta(i), tau_sq);
    }
    return out;
}

Eigen::MatrixXd orientation_quadratic(int degree, const ObservationSet& obs) {
    if (!obs.has_angles())
        throw std::invalid_argument("orientation_quadratic: no orientation data");
    const int dim = 2 * (2 * degree + 1);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < obs.count(); ++i) {
        const double s = std::sin(obs.theta(i)), co = std::cos(obs.theta(i));
        // row vector of the scalar residual hy cos - hx sin as a function of c
        const Eigen::RowVectorXd row = co * deriv_row_y(degree, obs.params(i)) -
                                       s * deriv_row_x(degree, obs.params(i));
        w.noalias() += row.transpose() * row;
    }
    return w;
}

double orientation_residual(const ControlPolygon& c, const ObservationSet& obs) {
    if (!obs.has_angles())
        throw std::invalid_argument("orientation_residual: no orientation data");
    double out = 0.0;
    for (int i = 0; i < obs.count(); ++i) {
        const Eigen::Vector2d h = hodograph_point(c, obs.params(i));
        const double s = std::sin(obs.theta(i)), co = std::cos(obs.theta(i));
        const double resid = h.y() * co - h.x() * s;
        out += resid * resid;
    }
    return out;
}

} // namespace roth
