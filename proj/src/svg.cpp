#include "roth/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string render_curve_svg(const ControlPolygon& curve, int samples,
                             const OrientedPointCloud* cloud) {
    if (samples < 2)
        throw std::invalid_argument("render_curve_svg: need at least 2 samples");

    std::vector<Eigen::Vector2d> pts(samples);
    for (int i = 0; i < samples; ++i)
        pts[i] = curve_point(curve, -kPi + 2.0 * kPi * i / samples);

    double xmin = pts[0].x(), xmax = pts[0].x(), ymin = pts[0].y(), ymax = pts[0].y();
    auto grow = [&](const Eigen::Vector2d& p) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    };
    for (const auto& p : pts)
        grow(p);
    for (int j = 1; j <= curve.num_points(); ++j)
        grow(curve.point(j));
    if (cloud)
        for (const auto& p : cloud->points)
            grow(p);
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
    const double pad = 0.05 * span;
    xmin -= pad;
    ymin -= pad;
    const double w = (xmax - xmin) + 2 * pad, h = (ymax - ymin) + 2 * pad;

    std::ostringstream out;
    out.precision(10);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\"0 0 "
        << w << ' ' << h << "\">\n";
    // flip to y-up
    out << "<g transform=\"translate(0," << h << ") scale(1,-1) translate(" << -xmin << ','
        << -ymin << ")\">\n";
    if (cloud) {
        for (const auto& p : cloud->points)
            out << "<circle cx=\"" << p.x() << "\" cy=\"" << p.y() << "\" r=\"" << 0.004 * span
                << "\" fill=\"#8aa\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"#223\" stroke-width=\"" << 0.004 * span
        << "\" points=\"";
    for (const auto& p : pts)
        out << p.x() << ',' << p.y() << ' ';
    out << pts[0].x() << ',' << pts[0].y(); // closing segment
    out << "\"/>\n";
    for (int j = 1; j <= curve.num_points(); ++j) {
        const Eigen::Vector2d p = curve.point(j);
        out << "<circle cx=\"" << p.x() << "\" cy=\"" << p.y() << "\" r=\"" << 0.008 * span
            << "\" fill=\"#d8b\" fill-opacity=\"0.5\"/>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

void write_svg(const std::string& path, const std::string& svg) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("svg: cannot write " + path);
    out << svg;
}

} // namespace roth
