#include "roth/shape_process.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "roth/elevation.hpp"

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;

Eigen::VectorXd to_vector(const nlohmann::json& arr) {
    const auto vals = arr.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(vals.data(), (long)vals.size());
}

Eigen::MatrixXd to_matrix(const nlohmann::json& arr) {
    const auto rows = arr.get<std::vector<std::vector<double>>>();
    if (rows.empty())
        throw std::invalid_argument("spec: empty matrix");
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::invalid_argument("spec: ragged matrix");
        for (size_t j = 0; j < rows[i].size(); ++j)
            m(i, j) = rows[i][j];
    }
    return m;
}

nlohmann::json from_vector(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json from_matrix(const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (long i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (long j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}
} // namespace

LevelCovariance LevelCovariance::dense(Eigen::MatrixXd sigma) {
    if (sigma.rows() != sigma.cols())
        throw std::invalid_argument("LevelCovariance: matrix must be square");
    if (!sigma.isApprox(sigma.transpose(), 1e-10))
        throw std::invalid_argument("LevelCovariance: matrix must be symmetric");
    LevelCovariance out;
    out.dim_ = static_cast<int>(sigma.rows());
    out.sigma_ = std::move(sigma);
    out.factor_from_matrix();
    return out;
}

LevelCovariance LevelCovariance::diagonal(int dim, const Eigen::VectorXd& variances) {
    if (variances.size() != dim)
        throw std::invalid_argument("LevelCovariance: diagonal length mismatch");
    if ((variances.array() < 0.0).any())
        throw std::invalid_argument("LevelCovariance: negative variance");
    LevelCovariance out;
    out.dim_ = dim;
    out.sigma_ = variances.asDiagonal();
    out.factor_ = variances.array().sqrt().matrix().asDiagonal();
    return out;
}

LevelCovariance LevelCovariance::isotropic(int dim, double variance) {
    return diagonal(dim, Eigen::VectorXd::Constant(dim, variance));
}

LevelCovariance LevelCovariance::paired(int num_points,
                                        const std::vector<std::pair<int, int>>& pairs,
                                        double base_variance) {
    if (base_variance < 0.0)
        throw std::invalid_argument("LevelCovariance: negative base variance");
    std::set<int> used;
    for (const auto& [a, b] : pairs) {
        if (a < 1 || a > num_points || b < 1 || b > num_points || a == b)
            throw std::invalid_argument("LevelCovariance: invalid pair index");
        if (!used.insert(a).second || !used.insert(b).second)
            throw std::invalid_argument("LevelCovariance: control point paired twice");
    }
    const int dim = 2 * num_points;
    // factor columns: one shared free 2-vector per pair, one per unpaired point
    const int free_points = num_points - static_cast<int>(pairs.size());
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(dim, 2 * free_points);
    const double s = std::sqrt(base_variance);
    int col = 0;
    std::set<int> paired_second;
    for (const auto& [a, b] : pairs)
        paired_second.insert(b);
    for (int p = 1; p <= num_points; ++p) {
        if (paired_second.count(p))
            continue;
        f(2 * (p - 1), col) = s;
        f(2 * (p - 1) + 1, col + 1) = s;
        for (const auto& [a, b] : pairs) {
            if (a == p) {
                f(2 * (b - 1), col) = s;
                f(2 * (b - 1) + 1, col + 1) = s;
            }
        }
        col += 2;
    }
    LevelCovariance out;
    out.dim_ = dim;
    out.factor_ = f;
    out.sigma_ = f * f.transpose();
    return out;
}

void LevelCovariance::factor_from_matrix() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_);
    if (es.info() != Eigen::Success)
        throw std::invalid_argument("LevelCovariance: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (long i = 0; i < ev.size(); ++i) {
        if (ev(i) < -cutoff)
            throw std::invalid_argument("LevelCovariance: matrix is not positive semidefinite");
        ev(i) = ev(i) < cutoff ? 0.0 : ev(i);
    }
    factor_ = es.eigenvectors() * ev.array().sqrt().matrix().asDiagonal();
}

Eigen::VectorXd LevelCovariance::sample(const Eigen::VectorXd& mean, std::mt19937_64& rng) const {
    if (mean.size() != dim_)
        throw std::invalid_argument("LevelCovariance::sample: mean dimension mismatch");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(factor_.cols());
    for (long i = 0; i < z.size(); ++i)
        z(i) = gauss(rng);
    return mean + factor_ * z;
}

LevelCovariance reflection_symmetry_cov(int degree, const std::vector<std::pair<int, int>>& pairs,
                                        double base_variance) {
    return LevelCovariance::paired(2 * degree + 1, pairs, base_variance);
}

void ShapeProcessSpec::validate() const {
    if (num_levels < 0)
        throw std::invalid_argument("spec.R: must be nonnegative");
    if (static_cast<int>(degrees.size()) != num_levels + 1)
        throw std::invalid_argument("spec.degrees: expected R+1 entries");
    if (degrees[0] != 1)
        throw std::invalid_argument("spec.degrees: level 0 degree must be 1");
    for (int r = 1; r <= num_levels; ++r)
        if (degrees[r] <= degrees[r - 1])
            throw std::invalid_argument("spec.degrees: must be strictly increasing");
    if (static_cast<int>(mu.size()) != num_levels + 1)
        throw std::invalid_argument("spec.mu: expected R+1 entries");
    if (static_cast<int>(sigma.size()) != num_levels + 1)
        throw std::invalid_argument("spec.sigma: expected R+1 entries");
    for (int r = 0; r <= num_levels; ++r) {
        const int dim = 2 * points_at(r);
        if (mu[r].size() != dim)
            throw std::invalid_argument("spec.mu: wrong length at level " + std::to_string(r));
        if (sigma[r].dim() != dim)
            throw std::invalid_argument("spec.sigma: wrong dimension at level " +
                                        std::to_string(r));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sigma_m);
    if (es.eigenvalues().minCoeff() < -1e-12)
        throw std::invalid_argument("spec.sigma_m: must be positive semidefinite");
}

namespace {
LevelCovariance parse_sigma(const nlohmann::json& entry, int num_points) {
    const int dim = 2 * num_points;
    if (entry.is_array())
        return LevelCovariance::dense(to_matrix(entry));
    if (entry.is_number())
        return LevelCovariance::isotropic(dim, entry.get<double>());
    if (entry.is_object()) {
        if (entry.contains("diag")) {
            const auto& d = entry.at("diag");
            if (d.is_number())
                return LevelCovariance::isotropic(dim, d.get<double>());
            return LevelCovariance::diagonal(dim, to_vector(d));
        }
        if (entry.contains("paired")) {
            const auto& p = entry.at("paired");
            std::vector<std::pair<int, int>> pairs;
            for (const auto& pr : p.at("pairs"))
                pairs.emplace_back(pr.at(0).get<int>(), pr.at(1).get<int>());
            return LevelCovariance::paired(num_points, pairs,
                                           p.at("base_variance").get<double>());
        }
    }
    throw std::invalid_argument("spec.sigma: unrecognized covariance entry");
}
} // namespace

std::string ShapeProcessSpec::to_json() const {
    nlohmann::json out;
    out["R"] = num_levels;
    out["degrees"] = degrees;
    nlohmann::json mus = nlohmann::json::array();
    for (const auto& v : mu)
        mus.push_back(from_vector(v));
    out["mu"] = mus;
    nlohmann::json sigs = nlohmann::json::array();
    for (const auto& s : sigma)
        sigs.push_back(from_matrix(s.matrix()));
    out["sigma"] = sigs;
    out["mu_m"] = std::vector<double>{mu_m.x(), mu_m.y()};
    out["sigma_m"] = from_matrix(sigma_m);
    return out.dump(2);
}

ShapeProcessSpec ShapeProcessSpec::from_json(const std::string& text) {
    nlohmann::json in;
    try {
        in = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("spec: invalid JSON: ") + e.what());
    }
    ShapeProcessSpec spec;
    try {
        spec.num_levels = in.at("R").get<int>();
        spec.degrees = in.at("degrees").get<std::vector<int>>();
        if (static_cast<int>(spec.degrees.size()) != spec.num_levels + 1)
            throw std::invalid_argument("spec.degrees: expected R+1 entries");
        for (int r = 0; r <= spec.num_levels; ++r) {
            const int dim = 2 * spec.points_at(r);
            if (in.contains("mu") && r < static_cast<int>(in.at("mu").size()) &&
                !in.at("mu").at(r).is_null())
                spec.mu.push_back(to_vector(in.at("mu").at(r)));
            else
                spec.mu.push_back(Eigen::VectorXd::Zero(dim));
            spec.sigma.push_back(parse_sigma(in.at("sigma").at(r), spec.points_at(r)));
        }
        if (in.contains("mu_m")) {
            const Eigen::VectorXd v = to_vector(in.at("mu_m"));
            if (v.size() != 2)
                throw std::invalid_argument("spec.mu_m: expected length 2");
            spec.mu_m = v.head<2>();
        }
        if (in.contains("sigma_m")) {
            const auto& sm = in.at("sigma_m");
            if (sm.is_number())
                spec.sigma_m = sm.get<double>() * Eigen::Matrix2d::Identity();
            else if (sm.is_object() && sm.contains("diag"))
                spec.sigma_m = sm.at("diag").get<double>() * Eigen::Matrix2d::Identity();
            else
                spec.sigma_m = to_matrix(sm);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

ShapeProcessSpec ShapeProcessSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("spec: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string ShapeTrajectory::to_json() const {
    nlohmann::json out;
    out["m"] = std::vector<double>{center.x(), center.y()};
    nlohmann::json levels = nlohmann::json::array();
    for (size_t r = 0; r < curves.size(); ++r) {
        nlohmann::json lvl;
        lvl["degree"] = curves[r].degree();
        lvl["d"] = from_vector(deformations[r]);
        lvl["coords"] = from_vector(curves[r].coords());
        levels.push_back(lvl);
    }
    out["levels"] = levels;
    return out.dump(2);
}

OrientingBlock initial_orienting_block() {
    OrientingBlock out;
    out.kind = OrientingBlock::Kind::Exact;
    out.blocks.resize(3);
    for (int j = 1; j <= 3; ++j) {
        const double theta = 2.0 * kPi * j / 3.0;
        Eigen::Matrix2d r;
        r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        out.blocks[j - 1] = r;
    }
    return out;
}

ControlPolygon initial_polygon(const Eigen::Vector2d& center, const Eigen::VectorXd& d0) {
    if (d0.size() != 6)
        throw std::invalid_argument("initial_polygon: d0 must have length 6");
    const OrientingBlock t0 = initial_orienting_block();
    Eigen::VectorXd coords = t0.apply(d0);
    for (int j = 0; j < 3; ++j)
        coords.segment<2>(2 * j) += center;
    return ControlPolygon(1, std::move(coords));
}

ControlPolygon process_step(const ControlPolygon& c_prev, int r, const ShapeProcessSpec& spec,
                            const Eigen::VectorXd& d) {
    if (r < 1 || r > spec.num_levels)
        throw std::invalid_argument("process_step: level out of range");
    if (c_prev.degree() != spec.degree_at(r - 1))
        throw std::invalid_argument("process_step: input degree does not match schedule");
    if (d.size() != 2 * spec.points_at(r))
        throw std::invalid_argument("process_step: deformation length mismatch");
    const ControlPolygon elevated = elevate(c_prev, spec.degree_at(r) - c_prev.degree());
    return apply_deformation(elevated, d, orienting_block_exact(elevated));
}

ShapeTrajectory central_shape_trajectory(const ShapeProcessSpec& spec) {
    spec.validate();
    ShapeTrajectory out;
    out.center = spec.mu_m;
    out.deformations = spec.mu;
    out.curves.push_back(initial_polygon(spec.mu_m, spec.mu[0]));
    for (int r = 1; r <= spec.num_levels; ++r)
        out.curves.push_back(process_step(out.curves.back(), r, spec, spec.mu[r]));
    return out;
}

ControlPolygon central_shape(const ShapeProcessSpec& spec) {
    return central_shape_trajectory(spec).curves.back();
}

ShapeTrajectory sample_shape(const ShapeProcessSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    ShapeTrajectory out;
    {
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(spec.sigma_m);
        Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
        Eigen::Vector2d z(gauss(rng), gauss(rng));
        out.center = spec.mu_m + es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * z;
    }
    for (int r = 0; r <= spec.num_levels; ++r)
        out.deformations.push_back(spec.sigma[r].sample(spec.mu[r], rng));
    out.curves.push_back(initial_polygon(out.center, out.deformations[0]));
    for (int r = 1; r <= spec.num_levels; ++r)
        out.curves.push_back(process_step(out.curves.back(), r, spec, out.deformations[r]));
    return out;
}

std::uint64_t derived_seed(std::uint64_t root, int index) {
    return root + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(index + 1);
}

} // namespace roth
