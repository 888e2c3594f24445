#include "roth/elevation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}
} // namespace

Eigen::MatrixXd elevation_matrix_scalar(int degree, int v) {
    if (degree < 1)
        throw std::invalid_argument("elevation_matrix: degree must be >= 1");
    if (v < 0)
        throw std::invalid_argument("elevation_matrix: v must be >= 0");
    const int n = degree;
    const int J_old = 2 * n + 1;
    if (v == 0)
        return Eigen::MatrixXd::Identity(J_old, J_old);

    const int N = n + v;
    const int J_new = 2 * N + 1;

    // coefficient of the cos term for each harmonic order n-k
    Eigen::VectorXd g(n);
    const double lcNN = log_choose(2 * N, N);
    const double lcnn = log_choose(2 * n, n);
    for (int k = 0; k < n; ++k)
        g(k) = 2.0 / J_old *
               std::exp(lcNN + log_choose(2 * n, k) - lcnn - log_choose(2 * N, v + k));

    Eigen::MatrixXd E(J_new, J_old);
    for (int i = 0; i < J_new; ++i) {
        for (int j = 0; j < J_old; ++j) {
            double s = 1.0 / J_old;
            for (int k = 0; k < n; ++k) {
                const int h = n - k;
                const double arg = h * (-2.0 * i * kPi / J_new) + 2.0 * h * j * kPi / J_old;
                s += g(k) * std::cos(arg);
            }
            E(i, j) = s;
        }
    }
    return E;
}

Eigen::MatrixXd elevation_matrix(int degree, int v) {
    const Eigen::MatrixXd S = elevation_matrix_scalar(degree, v);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2 * S.rows(), 2 * S.cols());
    for (long i = 0; i < S.rows(); ++i)
        for (long j = 0; j < S.cols(); ++j) {
            E(2 * i, 2 * j) = S(i, j);
            E(2 * i + 1, 2 * j + 1) = S(i, j);
        }
    return E;
}

ControlPolygon elevate(const ControlPolygon& c, int v) {
    if (v == 0)
        return c;
    const Eigen::MatrixXd E = elevation_matrix(c.degree(), v);
    return ControlPolygon(c.degree() + v, E * c.coords());
}

} // namespace roth
