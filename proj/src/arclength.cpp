#include "roth/arclength.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;
}

ArcLengthMap::ArcLengthMap(ControlPolygon polygon, int resolution)
    : polygon_(std::move(polygon)), resolution_(resolution) {
    if (resolution_ < 2)
        throw std::invalid_argument("ArcLengthMap: resolution must be >= 2");
    speeds_.resize(resolution_ + 1);
    table_.resize(resolution_ + 1);
    const double h = 2.0 * kPi / resolution_;
    for (int q = 0; q <= resolution_; ++q)
        speeds_(q) = speed(-kPi + h * q);
    table_(0) = 0.0;
    for (int q = 1; q <= resolution_; ++q)
        table_(q) = table_(q - 1) + 0.5 * h * (speeds_(q - 1) + speeds_(q));
}

double ArcLengthMap::speed(double t) const {
    return hodograph_point(polygon_, t).norm();
}

double ArcLengthMap::length_at(double u) const {
    if (u < -kPi - 1e-12 || u > kPi + 1e-12)
        throw std::out_of_range("ArcLengthMap::length_at: parameter outside [-pi, pi]");
    u = std::clamp(u, -kPi, kPi);
    const double h = 2.0 * kPi / resolution_;
    const double pos = (u + kPi) / h;
    int q = std::min(static_cast<int>(pos), resolution_ - 1);
    const double t_q = -kPi + h * q;
    // partial trapezoid from the last full node to u
    return table_(q) + 0.5 * (u - t_q) * (speeds_(q) + speed(u));
}

double ArcLengthMap::param_at(double l) const {
    const double L = total_length();
    const double tol = 1e-9 * std::max(L, 1e-300);
    if (l < -tol || l > L + tol)
        throw std::out_of_range("ArcLengthMap::param_at: length outside [0, L]");
    if (l <= 0.0)
        return -kPi;
    if (l >= L)
        return kPi;
    // bracket by the cumulative table, then bisect length_at
    int lo = 0, hi = resolution_;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (table_(mid) < l)
            lo = mid;
        else
            hi = mid;
    }
    const double h = 2.0 * kPi / resolution_;
    double a = -kPi + h * lo, b = -kPi + h * hi;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double m = 0.5 * (a + b);
        const double f = length_at(m) - l;
        if (std::abs(f) <= tol)
            return m;
        if (f < 0.0)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

} // namespace roth
