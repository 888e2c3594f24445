#pragma once

#include <Eigen/Dense>
#include <vector>

#include "roth/polygon.hpp"

namespace roth {

// Block-diagonal stack of per-control-point 2x2 rotation (or rotation-like)
// matrices. Exact blocks are orthonormal; approximate blocks are the
// linear-in-c scaled form built from the hodograph and a fixed length L_A.
struct OrientingBlock {
    enum class Kind { Exact, Approx };

    Kind kind = Kind::Exact;
    double length_scale = 0.0; // L_A, only meaningful for Approx
    std::vector<Eigen::Matrix2d> blocks;

    int num_points() const { return static_cast<int>(blocks.size()); }

    // Apply T to a stacked 2J vector.
    Eigen::VectorXd apply(const Eigen::VectorXd& d) const;
    // Dense 2J x 2J representation.
    Eigen::MatrixXd dense() const;
};

// Angle of the curve tangent at the influence point q_j of control point j.
// Throws std::domain_error when the hodograph there is degenerate.
double tangent_angle(const ControlPolygon& c, int j);

OrientingBlock orienting_block_exact(const ControlPolygon& c);
OrientingBlock orienting_block_approx(const ControlPolygon& c, double length_scale);

ControlPolygon apply_deformation(const ControlPolygon& c, const Eigen::VectorXd& d,
                                 const OrientingBlock& block);

} // namespace roth
