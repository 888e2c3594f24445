#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "roth/deform.hpp"
#include "roth/likelihood.hpp"
#include "roth/polygon.hpp"
#include "roth/shape_process.hpp"

namespace roth {

struct PriorConfig {
    ShapeProcessSpec process;
    double alpha = 1.0, beta = 1.0;   // Gamma(shape, rate) on the point precision tau_p
    double a_tau = 2.0, b_tau = 0.5;  // inverse-Gamma on the orientation variance tau^2
    bool population = false;
    // Normal hyperpriors on mu_r, one per level 0..R (population mode).
    // Covariance is hyper_var * I; empty means defaults (mean = spec mu_r,
    // variance 1e4).
    std::vector<Eigen::VectorXd> mu_hyper_mean;
    std::vector<double> mu_hyper_var;

    void validate() const;
};

struct McmcConfig {
    int iterations = 2000;
    int burnin = 500;
    int thin = 1;
    std::uint64_t seed = 0;
    int grid_size = 256;             // griddy Gibbs resolution
    bool update_params = true;       // griddy t updates on/off
    bool griddy_orientation = true;  // include orientation factor in the t update
    bool use_orientations = true;    // use angle data at all (when present)
    int threads = 0;                 // 0 = library default

    void validate() const;
};

struct ShapeRecord {
    Eigen::Vector2d m;
    std::vector<Eigen::VectorXd> d; // levels 0..R
    double loglik = 0.0;
};

struct ChainRecord {
    int iteration = 0;
    double tau_p = 0.0;
    double tau_sq = 0.0;
    std::vector<Eigen::VectorXd> mu; // levels 0..R
    std::vector<ShapeRecord> shapes;
};

struct ChainOutput {
    std::vector<ChainRecord> records;
    // acceptance rates indexed [shape][level]; level 0 is the m update,
    // level l >= 1 is the d^(l-1) update
    std::vector<std::vector<double>> acceptance;
    std::vector<ControlPolygon> posterior_mean_curves; // final-level control means
    std::vector<Eigen::VectorXd> posterior_mean_mu;
    double posterior_mean_tau_p = 0.0;
    double posterior_mean_tau_sq = 0.0;
    bool used_orientations = false;
    int num_shapes = 0;
    std::vector<int> point_counts;

    void save_jsonl(const std::string& path) const;
    std::string summary_json() const;
};

// Per-shape latent state under the exact recursion plus the per-sweep linear
// approximation caches.
struct ShapeState {
    ObservationSet obs;
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    std::vector<Eigen::VectorXd> d;      // levels 0..R
    std::vector<ControlPolygon> curves;  // exact c^(0..R)

    // per-sweep caches
    std::vector<double> length_scale;             // level 1..R at index r
    std::vector<OrientingBlock> approx_blocks;    // at the elevated polygon, level r
    std::vector<Eigen::MatrixXd> omega_factor;    // F_r = (I + M_r(d_r)) E_r
    Eigen::MatrixXd design;                       // 2N x 2J_R at current t
    Eigen::MatrixXd deriv_x, deriv_y;             // N x 2J_R derivative rows
    Eigen::MatrixXd orient_quad;                  // W, when angles in use

    std::vector<long> proposals, accepts;         // per update block
    std::mt19937_64 rng;
};

class GibbsSampler {
public:
    GibbsSampler(std::vector<ObservationSet> observations, PriorConfig prior, McmcConfig config);

    ChainOutput run();

    // Exposed for testing: one full sweep, individual conditional kernels.
    void refresh_sweep_caches(int k);
    void rebuild_exact_curves(int k, int from_level);
    void griddy_update_params(int k);
    bool update_center(int k);             // MH-corrected; returns accepted
    bool update_deformation(int k, int r); // level r in 0..R
    void update_tau_p();
    void update_tau_sq();
    void update_mu(int r);
    void sweep(int iteration);

    // Composite operator Omega_a^b mapping c^(a-1) to the approximate c^(b)
    // (identity when a > b). Caches must be fresh.
    Eigen::MatrixXd composite_omega(int k, int a, int b) const;

    ShapeState& shape(int k) { return shapes_[k]; }
    const PriorConfig& prior() const { return prior_; }
    double tau_p() const { return tau_p_; }
    double tau_sq() const { return tau_sq_; }
    void set_tau_p(double v) { tau_p_ = v; }
    void set_tau_sq(double v) { tau_sq_ = v; }
    const std::vector<Eigen::VectorXd>& mu() const { return mu_; }
    void set_mu(int r, const Eigen::VectorXd& v) { mu_[r] = v; }
    int num_shapes() const { return static_cast<int>(shapes_.size()); }
    bool orientations_active() const { return use_orient_; }
    double current_loglik(int k) const;

private:
    struct BlockModel {
        Eigen::MatrixXd curve_map;   // Q_c with c^(R) ~ curve_offset + Q_c x
        Eigen::VectorXd curve_offset;
        Eigen::VectorXd prior_mean;
        Eigen::MatrixXd prior_factor;      // x = mean + F z
        Eigen::MatrixXd prior_factor_pinv; // z = F^+ (x - mean)
        int rebuild_from = 0;              // exact-chain rebuild start level
    };

    BlockModel block_model(int k, int level); // level -1 = m, 0..R = d^(level)
    bool metropolis_block(int k, int level);
    void init_state(std::vector<ObservationSet> observations);
    void rebuild_design(int k);

    PriorConfig prior_;
    McmcConfig config_;
    std::vector<ShapeState> shapes_;
    std::vector<Eigen::MatrixXd> elevation_;   // E_r, level 1..R at index r
    std::vector<Eigen::VectorXd> mu_;          // shared deformation means
    double tau_p_ = 1.0;
    double tau_sq_ = 0.1;
    bool use_orient_ = false;
    std::mt19937_64 root_rng_;
};

// Draw from N(mean, precision^{-1}) in information form: precision * mean_out
// = info; SPD solve with a 1e-10 diagonal jitter retry.
Eigen::VectorXd sample_gaussian_information(const Eigen::MatrixXd& precision,
                                            const Eigen::VectorXd& info, std::mt19937_64& rng,
                                            Eigen::VectorXd* mean_out = nullptr,
                                            Eigen::MatrixXd* chol_out = nullptr);

// Griddy Gibbs categorical weights for one point against precomputed grid
// samples; exposed (with a serial twin of the batched kernel) for testing.
Eigen::VectorXd griddy_log_weights(const Eigen::Vector2d& point, const Eigen::MatrixXd& grid_xy,
                                   const Eigen::MatrixXd& grid_hodo, double tau_p,
                                   std::optional<double> theta, double tau_sq,
                                   bool with_orientation);

} // namespace roth
