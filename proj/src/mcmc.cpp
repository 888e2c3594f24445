#include "roth/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "roth/arclength.hpp"
#include "roth/elevation.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m) {
    if (m.size() == 0)
        return Eigen::MatrixXd(m.cols(), m.rows());
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
    return cod.pseudoInverse();
}

// 6x2 stack of I2: broadcasts the center to the three initial control points.
Eigen::MatrixXd center_broadcast() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 2);
    for (int j = 0; j < 3; ++j)
        b.block<2, 2>(2 * j, 0) = Eigen::Matrix2d::Identity();
    return b;
}

Eigen::MatrixXd spectral_factor(const Eigen::MatrixXd& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    Eigen::VectorXd ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (long i = 0; i < ev.size(); ++i)
        ev(i) = ev(i) < cutoff ? 0.0 : ev(i);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

std::vector<double> gather_std_normals(std::mt19937_64& rng, long n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out)
        v = gauss(rng);
    return out;
}
} // namespace

void PriorConfig::validate() const {
    process.validate();
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw std::invalid_argument("prior: Gamma hyperparameters must be positive");
    if (!(a_tau > 0.0) || !(b_tau > 0.0))
        throw std::invalid_argument("prior: inverse-Gamma hyperparameters must be positive");
    for (const double v : mu_hyper_var)
        if (!(v > 0.0))
            throw std::invalid_argument("prior: mu hyperprior variance must be positive");
}

void McmcConfig::validate() const {
    if (iterations < 1 || burnin < 0 || burnin >= iterations || thin < 1)
        throw std::invalid_argument("mcmc: bad iteration/burnin/thin settings");
    if (grid_size < 2)
        throw std::invalid_argument("mcmc: griddy grid size must be >= 2");
    if (threads < 0)
        throw std::invalid_argument("mcmc: threads must be >= 0");
}

Eigen::VectorXd sample_gaussian_information(const Eigen::MatrixXd& precision,
                                            const Eigen::VectorXd& info, std::mt19937_64& rng,
                                            Eigen::VectorXd* mean_out,
                                            Eigen::MatrixXd* chol_out) {
    const long dim = info.size();
    Eigen::MatrixXd prec = precision;
    Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success) {
        prec.diagonal().array() += 1e-10 * std::max(1.0, prec.trace() / dim);
        llt.compute(prec);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("sample_gaussian_information: precision not SPD");
    }
    const Eigen::VectorXd mean = llt.solve(info);
    const auto z = gather_std_normals(rng, dim);
    const Eigen::VectorXd zv = Eigen::Map<const Eigen::VectorXd>(z.data(), dim);
    // x = mean + L^{-T} z
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::VectorXd x = mean + l.transpose().triangularView<Eigen::Upper>().solve(zv);
    if (mean_out)
        *mean_out = mean;
    if (chol_out)
        *chol_out = l;
    return x;
}

Eigen::VectorXd griddy_log_weights(const Eigen::Vector2d& point, const Eigen::MatrixXd& grid_xy,
                                   const Eigen::MatrixXd& grid_hodo, double tau_p,
                                   std::optional<double> theta, double tau_sq,
                                   bool with_orientation) {
    const long g = grid_xy.rows();
    Eigen::VectorXd logw(g);
    for (long q = 0; q < g; ++q) {
        const double dx = point.x() - grid_xy(q, 0);
        const double dy = point.y() - grid_xy(q, 1);
        const double speed = std::hypot(grid_hodo(q, 0), grid_hodo(q, 1));
        double lw = -0.5 * tau_p * (dx * dx + dy * dy) + std::log(speed);
        if (with_orientation && theta)
            lw += orientation_logpdf(grid_hodo(q, 0), grid_hodo(q, 1), *theta, tau_sq);
        logw(q) = lw;
    }
    return logw;
}

GibbsSampler::GibbsSampler(std::vector<ObservationSet> observations, PriorConfig prior,
                           McmcConfig config)
    : prior_(std::move(prior)), config_(std::move(config)) {
    prior_.validate();
    config_.validate();
    if (observations.empty())
        throw std::invalid_argument("GibbsSampler: no observations");
    for (auto& o : observations)
        o.validate();
    const int levels = prior_.process.num_levels;
    elevation_.resize(levels + 1);
    for (int r = 1; r <= levels; ++r)
        elevation_[r] = elevation_matrix(prior_.process.degree_at(r - 1),
                                         prior_.process.degree_at(r) -
                                             prior_.process.degree_at(r - 1));
    mu_ = prior_.process.mu;
    if (prior_.population) {
        if (prior_.mu_hyper_mean.empty())
            prior_.mu_hyper_mean = prior_.process.mu;
        if (prior_.mu_hyper_var.empty())
            prior_.mu_hyper_var.assign(levels + 1, 1e4);
        if (static_cast<int>(prior_.mu_hyper_mean.size()) != levels + 1 ||
            static_cast<int>(prior_.mu_hyper_var.size()) != levels + 1)
            throw std::invalid_argument("prior: mu hyperprior needs one entry per level");
    }
    use_orient_ = config_.use_orientations;
    bool any_angles = false;
    for (const auto& o : observations)
        any_angles = any_angles || o.has_angles();
    use_orient_ = use_orient_ && any_angles;
    root_rng_.seed(config_.seed);
    init_state(std::move(observations));
}

void GibbsSampler::init_state(std::vector<ObservationSet> observations) {
    const int levels = prior_.process.num_levels;
    shapes_.resize(observations.size());
    for (size_t k = 0; k < observations.size(); ++k) {
        ShapeState& s = shapes_[k];
        s.obs = std::move(observations[k]);
        s.rng.seed(derived_seed(config_.seed, static_cast<int>(k)));

        const int n = s.obs.count();
        Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
        for (int i = 0; i < n; ++i)
            centroid += s.obs.points.segment<2>(2 * i);
        centroid /= std::max(n, 1);
        double radius = 0.0;
        for (int i = 0; i < n; ++i)
            radius += (s.obs.points.segment<2>(2 * i) - centroid).norm();
        radius = std::max(radius / std::max(n, 1), 1e-3);

        s.m = centroid;
        s.d.resize(levels + 1);
        Eigen::VectorXd d0(6);
        for (int j = 0; j < 3; ++j) {
            d0(2 * j) = 0.0;
            d0(2 * j + 1) = 2.0 * radius; // control radius 2r traces a circle of radius r
        }
        s.d[0] = d0;
        for (int r = 1; r <= levels; ++r)
            s.d[r] = mu_[r];

        s.curves.clear();
        s.curves.push_back(initial_polygon(s.m, s.d[0]));
        for (int r = 1; r <= levels; ++r)
            s.curves.push_back(process_step(s.curves.back(), r, prior_.process, s.d[r]));

        // initial parameterizations: nearest point on a curve grid; with the
        // parameterization updates disabled the supplied values are treated as
        // known correspondences and kept as-is
        if (config_.update_params) {
            const int grid = 512;
            std::vector<Eigen::Vector2d> samples(grid);
            std::vector<double> ts(grid);
            for (int g = 0; g < grid; ++g) {
                ts[g] = -kPi + 2.0 * kPi * (g + 0.5) / grid;
                samples[g] = curve_point(s.curves.back(), ts[g]);
            }
            for (int i = 0; i < n; ++i) {
                const Eigen::Vector2d p = s.obs.points.segment<2>(2 * i);
                int best = 0;
                double best_d = (p - samples[0]).squaredNorm();
                for (int g = 1; g < grid; ++g) {
                    const double dd = (p - samples[g]).squaredNorm();
                    if (dd < best_d) {
                        best_d = dd;
                        best = g;
                    }
                }
                s.obs.params(i) = ts[best];
            }
        }

        s.proposals.assign(levels + 2, 0);
        s.accepts.assign(levels + 2, 0);
        rebuild_design(static_cast<int>(k));
    }

    // moment-based starting noise level
    double rss = 0.0;
    long n_tot = 0;
    for (int k = 0; k < num_shapes(); ++k) {
        const ShapeState& s = shapes_[k];
        rss += (s.obs.points - s.design * s.curves.back().coords()).squaredNorm();
        n_tot += s.obs.count();
    }
    const double sigma_sq = std::max(rss / std::max<long>(2 * n_tot, 1), 1e-8);
    tau_p_ = 1.0 / sigma_sq;
    tau_sq_ = 0.1;
}

void GibbsSampler::rebuild_design(int k) {
    ShapeState& s = shapes_[k];
    const int degree = prior_.process.degrees.back();
    s.design = stacked_design(degree, s.obs.params);
    if (use_orient_ && s.obs.has_angles()) {
        const int n = s.obs.count();
        s.deriv_x.resize(n, 2 * (2 * degree + 1));
        s.deriv_y.resize(n, 2 * (2 * degree + 1));
        for (int i = 0; i < n; ++i) {
            s.deriv_x.row(i) = deriv_row_x(degree, s.obs.params(i));
            s.deriv_y.row(i) = deriv_row_y(degree, s.obs.params(i));
        }
        s.orient_quad = orientation_quadratic(degree, s.obs);
    }
}

void GibbsSampler::rebuild_exact_curves(int k, int from_level) {
    ShapeState& s = shapes_[k];
    const int levels = prior_.process.num_levels;
    if (from_level <= 0)
        s.curves[0] = initial_polygon(s.m, s.d[0]);
    for (int r = std::max(from_level, 1); r <= levels; ++r)
        s.curves[r] = process_step(s.curves[r - 1], r, prior_.process, s.d[r]);
}

void GibbsSampler::refresh_sweep_caches(int k) {
    ShapeState& s = shapes_[k];
    const int levels = prior_.process.num_levels;
    s.length_scale.assign(levels + 1, 0.0);
    s.approx_blocks.assign(levels + 1, OrientingBlock{});
    s.omega_factor.assign(levels + 1, Eigen::MatrixXd());
    for (int r = 1; r <= levels; ++r) {
        const double length = ArcLengthMap(s.curves[r - 1], 512).total_length();
        s.length_scale[r] = std::max(length, 1e-8);
        const ControlPolygon elevated(
            prior_.process.degree_at(r), elevation_[r] * s.curves[r - 1].coords());
        s.approx_blocks[r] = orienting_block_approx(elevated, s.length_scale[r]);

        // M(d) with M(d) * c_elevated == T_approx(c_elevated) * d
        const int degree = prior_.process.degree_at(r);
        const int points = prior_.process.points_at(r);
        const double scale = 2.0 * kPi / s.length_scale[r];
        Eigen::MatrixXd m_of_d(2 * points, 2 * points);
        for (int j = 1; j <= points; ++j) {
            const double q = influence_param(degree, j);
            const Eigen::RowVectorXd rx = deriv_row_x(degree, q);
            const Eigen::RowVectorXd ry = deriv_row_y(degree, q);
            const double dx = s.d[r](2 * (j - 1));
            const double dy = s.d[r](2 * (j - 1) + 1);
            m_of_d.row(2 * (j - 1)) = scale * (dx * rx - dy * ry);
            m_of_d.row(2 * (j - 1) + 1) = scale * (dx * ry + dy * rx);
        }
        s.omega_factor[r] =
            (Eigen::MatrixXd::Identity(2 * points, 2 * points) + m_of_d) * elevation_[r];
    }
}

Eigen::MatrixXd GibbsSampler::composite_omega(int k, int a, int b) const {
    const ShapeState& s = shapes_[k];
    if (a > b) {
        const int dim = 2 * prior_.process.points_at(b < 0 ? prior_.process.num_levels : b);
        return Eigen::MatrixXd::Identity(dim, dim);
    }
    Eigen::MatrixXd out = s.omega_factor.at(a);
    for (int r = a + 1; r <= b; ++r)
        out = s.omega_factor.at(r) * out;
    return out;
}

GibbsSampler::BlockModel GibbsSampler::block_model(int k, int level) {
    ShapeState& s = shapes_[k];
    const int levels = prior_.process.num_levels;
    BlockModel bm;
    if (level < 0) { // center m
        const Eigen::MatrixXd omega = composite_omega(k, 1, levels);
        bm.curve_map = omega * center_broadcast();
        bm.curve_offset = omega * initial_orienting_block().apply(s.d[0]);
        bm.prior_mean = prior_.process.mu_m;
        bm.prior_factor = spectral_factor(prior_.process.sigma_m);
        bm.rebuild_from = 0;
    } else if (level == 0) {
        const Eigen::MatrixXd omega = composite_omega(k, 1, levels);
        bm.curve_map = omega * initial_orienting_block().dense();
        bm.curve_offset = omega * (center_broadcast() * s.m);
        bm.prior_mean = mu_[0];
        bm.prior_factor = prior_.process.sigma[0].factor();
        bm.rebuild_from = 0;
    } else {
        const Eigen::MatrixXd omega = composite_omega(k, level + 1, levels);
        const Eigen::VectorXd elevated = elevation_[level] * s.curves[level - 1].coords();
        bm.curve_map = omega * s.approx_blocks[level].dense();
        bm.curve_offset = omega * elevated;
        bm.prior_mean = mu_[level];
        bm.prior_factor = prior_.process.sigma[level].factor();
        bm.rebuild_from = level;
    }
    bm.prior_factor_pinv = pseudo_inverse(bm.prior_factor);
    return bm;
}

double GibbsSampler::current_loglik(int k) const {
    const ShapeState& s = shapes_[k];
    double ll = -s.obs.count() * (std::log(2.0 * kPi) - std::log(tau_p_)) -
                0.5 * tau_p_ *
                    (s.obs.points - s.design * s.curves.back().coords()).squaredNorm();
    if (use_orient_ && s.obs.has_angles())
        ll += loglik_orientations(s.curves.back(), s.obs, tau_sq_);
    return ll;
}

bool GibbsSampler::metropolis_block(int k, int level) {
    ShapeState& s = shapes_[k];
    const int levels = prior_.process.num_levels;
    const BlockModel bm = block_model(k, level);
    const Eigen::VectorXd cur = (level < 0) ? Eigen::VectorXd(s.m) : s.d[level];
    const int slot = level + 1; // accept-rate bookkeeping
    ++s.proposals[slot];

    const long q = bm.prior_factor.cols();
    if (q == 0 || bm.prior_factor.norm() == 0.0) {
        // degenerate prior: the block is pinned at its prior mean
        if ((cur - bm.prior_mean).norm() > 0.0) {
            if (level < 0)
                s.m = bm.prior_mean;
            else
                s.d[level] = bm.prior_mean;
            rebuild_exact_curves(k, bm.rebuild_from);
        }
        ++s.accepts[slot];
        return true;
    }

    const Eigen::VectorXd z_cur = bm.prior_factor_pinv * (cur - bm.prior_mean);
    const Eigen::MatrixXd qz = s.design * (bm.curve_map * bm.prior_factor);
    const Eigen::VectorXd y0 =
        s.obs.points - s.design * (bm.curve_offset + bm.curve_map * bm.prior_mean);

    Eigen::MatrixXd prec = Eigen::MatrixXd::Identity(q, q) + tau_p_ * qz.transpose() * qz;
    Eigen::VectorXd info = tau_p_ * qz.transpose() * y0;
    if (use_orient_ && s.obs.has_angles()) {
        const Eigen::MatrixXd g = bm.curve_map * bm.prior_factor;
        const Eigen::VectorXd o2 = bm.curve_offset + bm.curve_map * bm.prior_mean;
        const Eigen::MatrixXd wg = s.orient_quad * g;
        prec.noalias() += (1.0 / tau_sq_) * g.transpose() * wg;
        info.noalias() -= (1.0 / tau_sq_) * g.transpose() * (s.orient_quad * o2);
    }

    Eigen::VectorXd prop_mean;
    const Eigen::VectorXd z_star = sample_gaussian_information(prec, info, s.rng, &prop_mean);

    auto log_q = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd r = z - prop_mean;
        return -0.5 * r.dot(prec * r);
    };
    auto log_target = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = bm.prior_mean + bm.prior_factor * z;
        // exact downstream chain under the candidate value
        Eigen::Vector2d m_val = s.m;
        std::vector<Eigen::VectorXd> d_val = s.d;
        if (level < 0)
            m_val = x.head<2>();
        else
            d_val[level] = x;
        ControlPolygon c = (bm.rebuild_from == 0)
                               ? initial_polygon(m_val, d_val[0])
                               : s.curves[bm.rebuild_from - 1];
        for (int r = std::max(bm.rebuild_from, 1); r <= levels; ++r)
            c = process_step(c, r, prior_.process, d_val[r]);
        double lp = -0.5 * z.squaredNorm();
        lp += -0.5 * tau_p_ * (s.obs.points - s.design * c.coords()).squaredNorm();
        if (use_orient_ && s.obs.has_angles()) {
            const Eigen::VectorXd hx = s.deriv_x * c.coords();
            const Eigen::VectorXd hy = s.deriv_y * c.coords();
            for (int i = 0; i < s.obs.count(); ++i) {
                const double sn = std::sin(s.obs.theta(i)), cs = std::cos(s.obs.theta(i));
                const double resid = hy(i) * cs - hx(i) * sn;
                lp += -0.5 * resid * resid / tau_sq_;
            }
        }
        return lp;
    };

    const double lt_star = log_target(z_star);
    if (!std::isfinite(lt_star)) {
        std::cerr << "roth: non-finite proposal target, auto-rejecting\n";
        return false;
    }
    const double log_ratio = (lt_star - log_q(z_star)) - (log_target(z_cur) - log_q(z_cur));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (std::log(unif(s.rng)) < log_ratio) {
        const Eigen::VectorXd x_new = bm.prior_mean + bm.prior_factor * z_star;
        if (level < 0)
            s.m = x_new.head<2>();
        else
            s.d[level] = x_new;
        rebuild_exact_curves(k, bm.rebuild_from);
        ++s.accepts[slot];
        return true;
    }
    return false;
}

bool GibbsSampler::update_center(int k) { return metropolis_block(k, -1); }
bool GibbsSampler::update_deformation(int k, int r) { return metropolis_block(k, r); }

void GibbsSampler::griddy_update_params(int k) {
    ShapeState& s = shapes_[k];
    const int g = config_.grid_size;
    const double h = 2.0 * kPi / g;
    const ControlPolygon& curve = s.curves.back();
    Eigen::MatrixXd grid_xy(g, 2), grid_hodo(g, 2);
    Eigen::VectorXd grid_t(g);
    for (int q = 0; q < g; ++q) {
        grid_t(q) = -kPi + h * (q + 0.5);
        grid_xy.row(q) = curve_point(curve, grid_t(q)).transpose();
        grid_hodo.row(q) = hodograph_point(curve, grid_t(q)).transpose();
    }
    const int n = s.obs.count();
    // draw all randomness up front so the weight loop can run in parallel
    std::vector<double> u1(n), u2(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        u1[i] = unif(s.rng);
        u2[i] = unif(s.rng);
    }
    const bool with_orient =
        config_.griddy_orientation && use_orient_ && s.obs.has_angles();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d p = s.obs.points.segment<2>(2 * i);
        const std::optional<double> theta =
            s.obs.has_angles() ? std::optional<double>(s.obs.theta(i)) : std::nullopt;
        const Eigen::VectorXd logw =
            griddy_log_weights(p, grid_xy, grid_hodo, tau_p_, theta, tau_sq_, with_orient);
        const double m = logw.maxCoeff();
        double total = 0.0;
        Eigen::VectorXd w(g);
        for (int q = 0; q < g; ++q) {
            w(q) = std::isfinite(logw(q)) ? std::exp(logw(q) - m) : 0.0;
            total += w(q);
        }
        int pick = 0;
        if (!(total > 0.0) || !std::isfinite(total)) {
            pick = static_cast<int>(u1[i] * g); // degenerate weights: uniform fallback
            pick = std::min(pick, g - 1);
        } else {
            double acc = 0.0;
            const double target = u1[i] * total;
            for (int q = 0; q < g; ++q) {
                acc += w(q);
                if (acc >= target) {
                    pick = q;
                    break;
                }
            }
        }
        s.obs.params(i) = grid_t(pick) + (u2[i] - 0.5) * h;
    }
    rebuild_design(k);
}

void GibbsSampler::update_tau_p() {
    double rss = 0.0;
    long n_tot = 0;
    for (const ShapeState& s : shapes_) {
        rss += (s.obs.points - s.design * s.curves.back().coords()).squaredNorm();
        n_tot += s.obs.count();
    }
    const double shape = prior_.alpha + static_cast<double>(n_tot);
    const double rate = prior_.beta + 0.5 * rss;
    std::gamma_distribution<double> gamma(shape, 1.0 / rate);
    tau_p_ = gamma(root_rng_);
}

void GibbsSampler::update_tau_sq() {
    double quad = 0.0;
    long n_orient = 0;
    for (const ShapeState& s : shapes_) {
        if (!s.obs.has_angles())
            continue;
        const Eigen::VectorXd hx = s.deriv_x * s.curves.back().coords();
        const Eigen::VectorXd hy = s.deriv_y * s.curves.back().coords();
        for (int i = 0; i < s.obs.count(); ++i) {
            const double sn = std::sin(s.obs.theta(i)), cs = std::cos(s.obs.theta(i));
            const double resid = hy(i) * cs - hx(i) * sn;
            quad += resid * resid;
        }
        n_orient += s.obs.count();
    }
    const double shape = prior_.a_tau + 0.5 * static_cast<double>(n_orient);
    const double scale = prior_.b_tau + 0.5 * quad;
    std::gamma_distribution<double> gamma(shape, 1.0 / scale);
    tau_sq_ = 1.0 / gamma(root_rng_);
}

void GibbsSampler::update_mu(int r) {
    const int dim = 2 * prior_.process.points_at(r);
    const double hv = prior_.mu_hyper_var.at(r);
    const Eigen::VectorXd& hm = prior_.mu_hyper_mean.at(r);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prior_.process.sigma[r].matrix());
    Eigen::VectorXd ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd span_mask = Eigen::VectorXd::Zero(dim);
    for (long i = 0; i < dim; ++i)
        if (ev(i) > cutoff) {
            inv_ev(i) = 1.0 / ev(i);
            span_mask(i) = 1.0;
        }
    const Eigen::MatrixXd pinv =
        es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd span_proj =
        es.eigenvectors() * span_mask.asDiagonal() * es.eigenvectors().transpose();

    Eigen::VectorXd sum_d = Eigen::VectorXd::Zero(dim);
    for (const ShapeState& s : shapes_)
        sum_d += s.d[r];
    const double kk = static_cast<double>(num_shapes());

    const Eigen::MatrixXd prec =
        (1.0 / hv) * Eigen::MatrixXd::Identity(dim, dim) + kk * pinv;
    const Eigen::VectorXd info = (1.0 / hv) * hm + pinv * sum_d;
    const Eigen::VectorXd draw = sample_gaussian_information(prec, info, root_rng_);
    // keep the null-space components at their configured values so singular
    // priors stay consistent with the deformation draws
    mu_[r] = span_proj * draw +
             (Eigen::MatrixXd::Identity(dim, dim) - span_proj) * prior_.process.mu[r];
}

void GibbsSampler::sweep(int iteration) {
    (void)iteration;
    const int levels = prior_.process.num_levels;
    const int k_count = num_shapes();
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < k_count; ++k) {
        refresh_sweep_caches(k);
        if (config_.update_params)
            griddy_update_params(k);
        update_center(k);
        for (int r = 0; r <= levels; ++r)
            update_deformation(k, r);
    }
    update_tau_p();
    if (use_orient_)
        update_tau_sq();
    if (prior_.population)
        for (int r = 0; r <= levels; ++r)
            update_mu(r);
}

ChainOutput GibbsSampler::run() {
#ifdef _OPENMP
    if (config_.threads > 0)
        omp_set_num_threads(config_.threads);
#endif
    const int levels = prior_.process.num_levels;
    ChainOutput out;
    out.num_shapes = num_shapes();
    out.used_orientations = use_orient_;
    for (const ShapeState& s : shapes_)
        out.point_counts.push_back(s.obs.count());

    std::vector<Eigen::VectorXd> mean_coords(num_shapes());
    for (int k = 0; k < num_shapes(); ++k)
        mean_coords[k] = Eigen::VectorXd::Zero(shapes_[k].curves.back().coords().size());
    std::vector<Eigen::VectorXd> mean_mu(levels + 1);
    for (int r = 0; r <= levels; ++r)
        mean_mu[r] = Eigen::VectorXd::Zero(mu_[r].size());
    double mean_tau_p = 0.0, mean_tau_sq = 0.0;
    long stored = 0;

    for (int it = 0; it < config_.iterations; ++it) {
        sweep(it);
        if (it >= config_.burnin && (it - config_.burnin) % config_.thin == 0) {
            ChainRecord rec;
            rec.iteration = it;
            rec.tau_p = tau_p_;
            rec.tau_sq = tau_sq_;
            rec.mu = mu_;
            for (int k = 0; k < num_shapes(); ++k) {
                ShapeRecord sr;
                sr.m = shapes_[k].m;
                sr.d = shapes_[k].d;
                sr.loglik = current_loglik(k);
                rec.shapes.push_back(std::move(sr));
                mean_coords[k] += shapes_[k].curves.back().coords();
            }
            for (int r = 0; r <= levels; ++r)
                mean_mu[r] += mu_[r];
            mean_tau_p += tau_p_;
            mean_tau_sq += tau_sq_;
            ++stored;
            out.records.push_back(std::move(rec));
        }
    }

    out.acceptance.resize(num_shapes());
    for (int k = 0; k < num_shapes(); ++k)
        for (size_t b = 0; b < shapes_[k].proposals.size(); ++b)
            out.acceptance[k].push_back(
                shapes_[k].proposals[b] > 0
                    ? static_cast<double>(shapes_[k].accepts[b]) / shapes_[k].proposals[b]
                    : 0.0);
    const double denom = std::max<long>(stored, 1);
    for (int k = 0; k < num_shapes(); ++k)
        out.posterior_mean_curves.emplace_back(prior_.process.degrees.back(),
                                               mean_coords[k] / denom);
    for (int r = 0; r <= levels; ++r)
        out.posterior_mean_mu.push_back(mean_mu[r] / denom);
    out.posterior_mean_tau_p = mean_tau_p / denom;
    out.posterior_mean_tau_sq = mean_tau_sq / denom;
    return out;
}

namespace {
nlohmann::json vec_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}
} // namespace

void ChainOutput::save_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("chain: cannot write " + path);
    for (const ChainRecord& rec : records) {
        nlohmann::json row;
        row["iteration"] = rec.iteration;
        row["tau_p"] = rec.tau_p;
        row["tau_sq"] = rec.tau_sq;
        nlohmann::json mus = nlohmann::json::array();
        for (const auto& m : rec.mu)
            mus.push_back(vec_json(m));
        row["mu"] = mus;
        nlohmann::json shapes = nlohmann::json::array();
        for (const auto& s : rec.shapes) {
            nlohmann::json sh;
            sh["m"] = std::vector<double>{s.m.x(), s.m.y()};
            nlohmann::json ds = nlohmann::json::array();
            for (const auto& d : s.d)
                ds.push_back(vec_json(d));
            sh["d"] = ds;
            sh["loglik"] = s.loglik;
            shapes.push_back(sh);
        }
        row["shapes"] = shapes;
        out << row.dump() << '\n';
    }
}

std::string ChainOutput::summary_json() const {
    nlohmann::json out;
    out["num_shapes"] = num_shapes;
    out["point_counts"] = point_counts;
    out["orientations"] = used_orientations;
    out["tau_p"] = posterior_mean_tau_p;
    out["tau_sq"] = posterior_mean_tau_sq;
    out["stored_records"] = records.size();
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : posterior_mean_curves)
        curves.push_back(nlohmann::json::parse(c.to_json()));
    out["posterior_mean_curves"] = curves;
    nlohmann::json mus = nlohmann::json::array();
    for (const auto& m : posterior_mean_mu)
        mus.push_back(vec_json(m));
    out["posterior_mean_mu"] = mus;
    out["acceptance"] = acceptance;
    return out.dump(2);
}

} // namespace roth
