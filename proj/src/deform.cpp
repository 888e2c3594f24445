#include "roth/deform.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDegenerateSpeed = 1e-12;

Eigen::Matrix2d rotation(double theta) {
    Eigen::Matrix2d r;
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}
} // namespace

Eigen::VectorXd OrientingBlock::apply(const Eigen::VectorXd& d) const {
    const int J = num_points();
    if (d.size() != 2 * J)
        throw std::invalid_argument("OrientingBlock::apply: dimension mismatch");
    Eigen::VectorXd out(2 * J);
    for (int j = 0; j < J; ++j)
        out.segment<2>(2 * j) = blocks[j] * d.segment<2>(2 * j);
    return out;
}

Eigen::MatrixXd OrientingBlock::dense() const {
    const int J = num_points();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * J, 2 * J);
    for (int j = 0; j < J; ++j)
        T.block<2, 2>(2 * j, 2 * j) = blocks[j];
    return T;
}

double tangent_angle(const ControlPolygon& c, int j) {
    if (j < 1 || j > c.num_points())
        throw std::out_of_range("tangent_angle: index out of range");
    const Eigen::Vector2d h = hodograph_point(c, influence_param(c.degree(), j));
    if (h.norm() < kDegenerateSpeed)
        throw std::domain_error("tangent_angle: degenerate tangent at control point " +
                                std::to_string(j));
    return std::atan2(h.y(), h.x());
}

OrientingBlock orienting_block_exact(const ControlPolygon& c) {
    const int J = c.num_points();
    OrientingBlock out;
    out.kind = OrientingBlock::Kind::Exact;
    out.blocks.resize(J);
    for (int j = 1; j <= J; ++j) {
        double theta;
        try {
            theta = tangent_angle(c, j);
        } catch (const std::domain_error&) {
            // nearly point-collapsed curve: take the angle from the nearest
            // non-degenerate location on a fine grid
            const int grid = 512;
            double best = 0.0;
            bool found = false;
            const double q = influence_param(c.degree(), j);
            for (int s = 1; s <= grid / 2 && !found; ++s) {
                for (const double dt : {s * 2.0 * kPi / grid, -s * 2.0 * kPi / grid}) {
                    const Eigen::Vector2d h = hodograph_point(c, q + dt);
                    if (h.norm() >= kDegenerateSpeed) {
                        best = std::atan2(h.y(), h.x());
                        found = true;
                        break;
                    }
                }
            }
            if (!found)
                throw;
            std::cerr << "roth: degenerate tangent at control point " << j
                      << ", substituting nearest grid angle\n";
            theta = best;
        }
        out.blocks[j - 1] = rotation(theta);
    }
    return out;
}

OrientingBlock orienting_block_approx(const ControlPolygon& c, double length_scale) {
    if (!(length_scale > 0.0))
        throw std::domain_error("orienting_block_approx: length scale must be positive");
    const int J = c.num_points();
    OrientingBlock out;
    out.kind = OrientingBlock::Kind::Approx;
    out.length_scale = length_scale;
    out.blocks.resize(J);
    const double scale = 2.0 * kPi / length_scale;
    for (int j = 1; j <= J; ++j) {
        const Eigen::Vector2d h = hodograph_point(c, influence_param(c.degree(), j));
        Eigen::Matrix2d b;
        b << h.x(), -h.y(), h.y(), h.x();
        out.blocks[j - 1] = scale * b;
    }
    return out;
}

ControlPolygon apply_deformation(const ControlPolygon& c, const Eigen::VectorXd& d,
                                 const OrientingBlock& block) {
    if (d.size() != c.coords().size() || block.num_points() != c.num_points())
        throw std::invalid_argument("apply_deformation: dimension mismatch");
    return ControlPolygon(c.degree(), c.coords() + block.apply(d));
}

} // namespace roth
