// Timing comparison between the OpenMP kernels and their serial reference
// implementations, with agreement checks. Run: bench_kernels [repeats]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "roth/image.hpp"
#include "roth/mcmc.hpp"
#include "roth/polygon.hpp"

using namespace roth;
using clock_type = std::chrono::steady_clock;

namespace {
constexpr double kPi = std::numbers::pi;

double ms_since(clock_type::time_point start) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool agree) {
    std::printf("%-22s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / std::max(parallel_ms, 1e-9),
                agree ? "outputs match" : "OUTPUTS DIFFER");
}

void bench_design(int repeats) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ut(-kPi, kPi);
    const int degree = 8, n = 4000;
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i)
        t(i) = ut(rng);

    Eigen::MatrixXd serial_out, parallel_out;
    auto t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r)
        serial_out = stacked_design_serial(degree, t);
    const double serial_ms = ms_since(t0) / repeats;
    t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r)
        parallel_out = stacked_design(degree, t);
    const double parallel_ms = ms_since(t0) / repeats;
    report("stacked design", serial_ms, parallel_ms,
           (serial_out - parallel_out).norm() == 0.0);
}

void bench_gradient(int repeats) {
    GrayImage img;
    img.width = img.height = 1024;
    img.data.resize(static_cast<size_t>(img.width) * img.height);
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            img.at(c, r) = 128.0 + 100.0 * std::sin(0.05 * c) * std::cos(0.07 * r);

    GradientField serial_out, parallel_out;
    auto t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r)
        serial_out = gradient_field_serial(img);
    const double serial_ms = ms_since(t0) / repeats;
    t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r)
        parallel_out = gradient_field(img);
    const double parallel_ms = ms_since(t0) / repeats;
    bool agree = serial_out.grad.size() == parallel_out.grad.size();
    for (size_t i = 0; agree && i < serial_out.grad.size(); ++i)
        agree = serial_out.grad[i] == parallel_out.grad[i];
    report("gradient field", serial_ms, parallel_ms, agree);
}

void bench_griddy(int repeats) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd coords(2 * 9);
    for (long i = 0; i < coords.size(); ++i)
        coords(i) = 2.0 * g(rng);
    const ControlPolygon curve(4, coords);

    const int grid = 512, n = 800;
    Eigen::MatrixXd grid_xy(grid, 2), grid_hodo(grid, 2);
    for (int q = 0; q < grid; ++q) {
        const double t = -kPi + 2.0 * kPi * (q + 0.5) / grid;
        grid_xy.row(q) = curve_point(curve, t).transpose();
        grid_hodo.row(q) = hodograph_point(curve, t).transpose();
    }
    std::vector<Eigen::Vector2d> points(n);
    std::vector<double> thetas(n);
    for (int i = 0; i < n; ++i) {
        points[i] = Eigen::Vector2d(g(rng), g(rng));
        thetas[i] = kPi * (2.0 * (i / double(n)) - 1.0) * 0.99;
    }

    std::vector<Eigen::VectorXd> serial_out(n), parallel_out(n);
    auto t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r)
        for (int i = 0; i < n; ++i)
            serial_out[i] = griddy_log_weights(points[i], grid_xy, grid_hodo, 25.0, thetas[i],
                                               0.05, true);
    const double serial_ms = ms_since(t0) / repeats;
    t0 = clock_type::now();
    for (int r = 0; r < repeats; ++r) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i)
            parallel_out[i] = griddy_log_weights(points[i], grid_xy, grid_hodo, 25.0,
                                                 thetas[i], 0.05, true);
    }
    const double parallel_ms = ms_since(t0) / repeats;
    bool agree = true;
    for (int i = 0; agree && i < n; ++i)
        agree = (serial_out[i] - parallel_out[i]).norm() == 0.0;
    report("griddy weights", serial_ms, parallel_ms, agree);
}
} // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 5;
    std::printf("kernel benchmarks, %d repeats each\n", repeats);
    bench_design(repeats);
    bench_gradient(repeats);
    bench_griddy(repeats);
    return 0;
}
