#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "roth/deform.hpp"
#include "roth/polygon.hpp"

namespace roth {

// Deformation covariance at one level. Paired covariances keep their factor
// representation so that draws satisfy the equality constraints exactly.
class LevelCovariance {
public:
    static LevelCovariance dense(Eigen::MatrixXd sigma);
    static LevelCovariance diagonal(int dim, const Eigen::VectorXd& variances);
    static LevelCovariance isotropic(int dim, double variance);
    // pairs are 1-based control-point indices whose deformation vectors are
    // forced equal; unpaired points stay independent with base_variance.
    static LevelCovariance paired(int num_points, const std::vector<std::pair<int, int>>& pairs,
                                  double base_variance);

    int dim() const { return dim_; }
    const Eigen::MatrixXd& matrix() const { return sigma_; }
    // factor F with Sigma = F F'; draws are mu + F z, z ~ N(0, I)
    const Eigen::MatrixXd& factor() const { return factor_; }

    Eigen::VectorXd sample(const Eigen::VectorXd& mean, std::mt19937_64& rng) const;

private:
    LevelCovariance() = default;
    void factor_from_matrix(); // spectral factor, eigenvalues below 1e-12*max clamped to 0

    int dim_ = 0;
    Eigen::MatrixXd sigma_;
    Eigen::MatrixXd factor_;
};

// Convenience for symmetry priors: covariance whose draws satisfy the paired
// equality constraints almost surely.
LevelCovariance reflection_symmetry_cov(int degree, const std::vector<std::pair<int, int>>& pairs,
                                        double base_variance);

struct ShapeProcessSpec {
    int num_levels = 0;                 // R
    std::vector<int> degrees;           // n_0 = 1, ..., n_R, strictly increasing
    std::vector<Eigen::VectorXd> mu;    // levels 0..R, length 2(2 n_r + 1)
    std::vector<LevelCovariance> sigma; // levels 0..R
    Eigen::Vector2d mu_m = Eigen::Vector2d::Zero();
    Eigen::Matrix2d sigma_m = Eigen::Matrix2d::Zero();

    int degree_at(int r) const { return degrees.at(r); }
    int points_at(int r) const { return 2 * degrees.at(r) + 1; }

    void validate() const; // throws std::invalid_argument naming the bad field

    std::string to_json() const;
    static ShapeProcessSpec from_json(const std::string& text);
    static ShapeProcessSpec load(const std::string& path);
};

struct ShapeTrajectory {
    Eigen::Vector2d center;
    std::vector<Eigen::VectorXd> deformations; // levels 0..R
    std::vector<ControlPolygon> curves;        // levels 0..R

    std::string to_json() const;
};

// Fixed rotation stack used for the initial degree-1 curve (angles 2 pi j / 3).
OrientingBlock initial_orienting_block();

// c^(0) = broadcast(m) + T_0 d0
ControlPolygon initial_polygon(const Eigen::Vector2d& center, const Eigen::VectorXd& d0);

// One refinement step: elevate to degree n_r, then deform with the exact
// orienting block evaluated at the elevated polygon.
ControlPolygon process_step(const ControlPolygon& c_prev, int r, const ShapeProcessSpec& spec,
                            const Eigen::VectorXd& d);

ShapeTrajectory central_shape_trajectory(const ShapeProcessSpec& spec);
ControlPolygon central_shape(const ShapeProcessSpec& spec);

ShapeTrajectory sample_shape(const ShapeProcessSpec& spec, std::uint64_t seed);

// Independent per-shape stream derived from a root seed by a fixed offset.
std::uint64_t derived_seed(std::uint64_t root, int index);

} // namespace roth
