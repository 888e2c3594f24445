#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roth/image.hpp"
#include "roth/mcmc.hpp"
#include "roth/shape_process.hpp"
#include "roth/svg.hpp"

namespace fs = std::filesystem;
using namespace roth;

namespace {

struct FitOptions {
    std::string spec_path;
    std::string out_dir = ".";
    int iterations = 2000;
    int burnin = 500;
    int thin = 1;
    std::uint64_t seed = 0;
    int grid = 256;
    int threads = 0;
};

void add_fit_options(CLI::App* cmd, FitOptions& opt) {
    cmd->add_option("--spec", opt.spec_path, "shape process spec JSON")->required();
    cmd->add_option("--iters", opt.iterations, "MCMC iterations");
    cmd->add_option("--burnin", opt.burnin, "burn-in iterations");
    cmd->add_option("--thin", opt.thin, "thinning stride");
    cmd->add_option("--seed", opt.seed, "root RNG seed");
    cmd->add_option("--grid", opt.grid, "griddy Gibbs grid size");
    cmd->add_option("--threads", opt.threads, "worker threads (0 = default)");
    cmd->add_option("--out", opt.out_dir, "output directory");
}

McmcConfig make_config(const FitOptions& opt) {
    McmcConfig cfg;
    cfg.iterations = opt.iterations;
    cfg.burnin = opt.burnin;
    cfg.thin = opt.thin;
    cfg.seed = opt.seed;
    cfg.grid_size = opt.grid;
    cfg.threads = opt.threads;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

ChainOutput run_fit(std::vector<ObservationSet> obs, const FitOptions& opt, bool population,
                    ShapeProcessSpec* spec_out = nullptr) {
    PriorConfig prior;
    prior.process = ShapeProcessSpec::load(opt.spec_path);
    prior.population = population;
    std::cerr << "effective seed: " << opt.seed << "\n";
    GibbsSampler sampler(std::move(obs), prior, make_config(opt));
    ChainOutput chain = sampler.run();
    fs::create_directories(opt.out_dir);
    chain.save_jsonl(fs::path(opt.out_dir) / "chain.jsonl");
    write_text(fs::path(opt.out_dir) / "summary.json", chain.summary_json());
    if (spec_out)
        *spec_out = prior.process;
    return chain;
}

int cmd_sample(const std::string& spec_path, int count, std::uint64_t seed,
               const std::string& out_dir) {
    const ShapeProcessSpec spec = ShapeProcessSpec::load(spec_path);
    std::cerr << "effective seed: " << seed << "\n";
    fs::create_directories(out_dir);
    for (int i = 0; i < count; ++i) {
        const ShapeTrajectory traj = sample_shape(spec, derived_seed(seed, i));
        write_text(fs::path(out_dir) / ("shape_" + std::to_string(i) + ".json"),
                   traj.to_json());
        write_svg(fs::path(out_dir) / ("shape_" + std::to_string(i) + ".svg"),
                  render_curve_svg(traj.curves.back(), 512));
    }
    return 0;
}

int cmd_fit_points(const std::string& cloud_path, const FitOptions& opt) {
    const OrientedPointCloud cloud = OrientedPointCloud::load_csv(cloud_path);
    if (cloud.size() < 3)
        throw std::invalid_argument("point cloud has fewer than 3 points");
    ChainOutput chain = run_fit({ObservationSet::from_cloud(cloud)}, opt, false);
    write_svg(fs::path(opt.out_dir) / "posterior_mean.svg",
              render_curve_svg(chain.posterior_mean_curves[0], 512, &cloud));
    return 0;
}

int cmd_fit_image(const std::string& image_path, double threshold, const FitOptions& opt) {
    const GrayImage img = GrayImage::load_pgm(image_path);
    const GradientField field = gradient_field(img);
    const double max_norm = field.max_norm();
    const double m = threshold > 0.0 ? threshold : 0.5 * max_norm;
    if (!(max_norm > 0.0))
        throw std::invalid_argument("empty point cloud: image has no gradient contrast");
    const OrientedPointCloud cloud = extract_cloud(field, m);
    if (cloud.size() < 3)
        throw std::invalid_argument("empty point cloud: threshold " + std::to_string(m) +
                                    " leaves fewer than 3 points");
    fs::create_directories(opt.out_dir);
    cloud.save_csv(fs::path(opt.out_dir) / "cloud.csv");
    ChainOutput chain = run_fit({ObservationSet::from_cloud(cloud)}, opt, false);
    write_svg(fs::path(opt.out_dir) / "overlay.svg",
              render_curve_svg(chain.posterior_mean_curves[0], 512, &cloud));
    // threshold sweep report
    nlohmann::json sweep = nlohmann::json::array();
    for (const double frac : {0.3, 0.5, 0.7})
        sweep.push_back({{"threshold", frac * max_norm},
                         {"points", extract_cloud(field, frac * max_norm).size()}});
    nlohmann::json summary = nlohmann::json::parse(chain.summary_json());
    summary["threshold"] = m;
    summary["max_gradient_norm"] = max_norm;
    summary["threshold_sweep"] = sweep;
    write_text(fs::path(opt.out_dir) / "summary.json", summary.dump(2));
    return 0;
}

int cmd_fit_population(const std::string& cloud_dir, const FitOptions& opt) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(cloud_dir))
        if (entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.size() < 2)
        throw std::invalid_argument("population fit needs at least 2 cloud CSVs in " +
                                    cloud_dir);
    std::vector<ObservationSet> obs;
    std::vector<OrientedPointCloud> clouds;
    for (const auto& f : files) {
        clouds.push_back(OrientedPointCloud::load_csv(f.string()));
        obs.push_back(ObservationSet::from_cloud(clouds.back()));
    }
    ShapeProcessSpec spec;
    ChainOutput chain = run_fit(std::move(obs), opt, true, &spec);
    // central shape under the posterior-mean deformation means
    ShapeProcessSpec central_spec = spec;
    central_spec.mu = chain.posterior_mean_mu;
    const ControlPolygon central = central_shape(central_spec);
    write_text(fs::path(opt.out_dir) / "central_shape.json", central.to_json());
    write_svg(fs::path(opt.out_dir) / "central_shape.svg", render_curve_svg(central, 512));
    for (size_t k = 0; k < clouds.size(); ++k)
        write_svg(fs::path(opt.out_dir) / ("fit_" + std::to_string(k) + ".svg"),
                  render_curve_svg(chain.posterior_mean_curves[k], 512, &clouds[k]));
    return 0;
}

int cmd_render(const std::string& polygon_path, const std::string& out_path, int samples) {
    std::ifstream in(polygon_path);
    if (!in)
        throw std::invalid_argument("cannot open " + polygon_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    ControlPolygon poly = ControlPolygon::from_json(text);
    write_svg(out_path, render_curve_svg(poly, samples));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiscale closed-curve shape modeling"};
    app.require_subcommand(1);

    // sample
    auto* sample = app.add_subcommand("sample", "draw shapes from a process spec");
    std::string sample_spec, sample_out = ".";
    int sample_count = 1;
    std::uint64_t sample_seed = 0;
    sample->add_option("--spec", sample_spec)->required();
    sample->add_option("--count", sample_count);
    sample->add_option("--seed", sample_seed);
    sample->add_option("--out", sample_out);

    // fit-points
    auto* fitp = app.add_subcommand("fit-points", "fit one point cloud CSV");
    std::string fitp_cloud;
    FitOptions fitp_opt;
    fitp->add_option("--cloud", fitp_cloud, "x,y[,omega,theta] CSV")->required();
    add_fit_options(fitp, fitp_opt);

    // fit-image
    auto* fiti = app.add_subcommand("fit-image", "fit the edges of a PGM image");
    std::string fiti_image;
    double fiti_threshold = 0.0;
    FitOptions fiti_opt;
    fiti->add_option("--image", fiti_image, "P2/P5 PGM file")->required();
    fiti->add_option("--threshold", fiti_threshold,
                     "gradient-norm threshold M (default 0.5 * max)");
    add_fit_options(fiti, fiti_opt);

    // fit-population
    auto* fitpop = app.add_subcommand("fit-population", "hierarchical fit of many clouds");
    std::string fitpop_dir;
    FitOptions fitpop_opt;
    fitpop->add_option("--clouds", fitpop_dir, "directory of cloud CSVs")->required();
    add_fit_options(fitpop, fitpop_opt);

    // render
    auto* render = app.add_subcommand("render", "render a polygon JSON to SVG");
    std::string render_in, render_out = "curve.svg";
    int render_samples = 512;
    render->add_option("--polygon", render_in)->required();
    render->add_option("--out", render_out);
    render->add_option("--samples", render_samples);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sample->parsed())
            return cmd_sample(sample_spec, sample_count, sample_seed, sample_out);
        if (fitp->parsed())
            return cmd_fit_points(fitp_cloud, fitp_opt);
        if (fiti->parsed())
            return cmd_fit_image(fiti_image, fiti_threshold, fiti_opt);
        if (fitpop->parsed())
            return cmd_fit_population(fitpop_dir, fitpop_opt);
        if (render->parsed())
            return cmd_render(render_in, render_out, render_samples);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
