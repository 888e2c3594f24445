#include "roth/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;

void skip_pgm_junk(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}
} // namespace

GrayImage GrayImage::load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::invalid_argument("pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P2" && magic != "P5")
        throw std::invalid_argument("pgm: unsupported magic '" + magic + "' in " + path);
    int w = 0, h = 0, maxval = 0;
    skip_pgm_junk(in);
    in >> w;
    skip_pgm_junk(in);
    in >> h;
    skip_pgm_junk(in);
    in >> maxval;
    if (!in || w < 2 || h < 2)
        throw std::invalid_argument("pgm: invalid dimensions in " + path);
    if (maxval <= 0 || maxval > 255)
        throw std::invalid_argument("pgm: only 8-bit images supported: " + path);
    GrayImage img;
    img.width = w;
    img.height = h;
    img.data.resize(static_cast<size_t>(w) * h);
    if (magic == "P5") {
        in.get(); // single whitespace after maxval
        std::vector<unsigned char> raw(img.data.size());
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<size_t>(in.gcount()) != raw.size())
            throw std::invalid_argument("pgm: truncated pixel data in " + path);
        for (size_t i = 0; i < raw.size(); ++i)
            img.data[i] = raw[i];
    } else {
        for (auto& px : img.data) {
            skip_pgm_junk(in);
            int v;
            if (!(in >> v))
                throw std::invalid_argument("pgm: truncated pixel data in " + path);
            px = v;
        }
    }
    return img;
}

void GrayImage::save_pgm(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << width << ' ' << height << "\n255\n";
    for (const double v : data)
        out.put(static_cast<char>(std::clamp(static_cast<int>(std::lround(v)), 0, 255)));
}

double GradientField::max_norm() const {
    double m = 0.0;
    for (const double v : norm)
        m = std::max(m, v);
    return m;
}

namespace {
template <bool Parallel>
GradientField gradient_impl(const GrayImage& img) {
    if (img.width < 2 || img.height < 2)
        throw std::invalid_argument("gradient_field: image must be at least 2x2");
    GradientField out;
    out.width = img.width;
    out.height = img.height;
    out.grad.resize(img.data.size());
    out.norm.resize(img.data.size());
    const int w = img.width, h = img.height;
#pragma omp parallel for schedule(static) if (Parallel)
    for (int row = 0; row < h; ++row) {
        for (int col = 0; col < w; ++col) {
            double gx, gy_img;
            if (col == 0)
                gx = img.at(1, row) - img.at(0, row);
            else if (col == w - 1)
                gx = img.at(w - 1, row) - img.at(w - 2, row);
            else
                gx = 0.5 * (img.at(col + 1, row) - img.at(col - 1, row));
            if (row == 0)
                gy_img = img.at(col, 1) - img.at(col, 0);
            else if (row == h - 1)
                gy_img = img.at(col, h - 1) - img.at(col, h - 2);
            else
                gy_img = 0.5 * (img.at(col, row + 1) - img.at(col, row - 1));
            // flip to y-up curve coordinates
            const Eigen::Vector2d g(gx, -gy_img);
            const size_t idx = static_cast<size_t>(row) * w + col;
            out.grad[idx] = g;
            out.norm[idx] = g.norm();
        }
    }
    return out;
}
} // namespace

GradientField gradient_field(const GrayImage& img) { return gradient_impl<true>(img); }
GradientField gradient_field_serial(const GrayImage& img) { return gradient_impl<false>(img); }

OrientedPointCloud extract_cloud(const GradientField& field, double threshold) {
    if (!(threshold > 0.0))
        throw std::invalid_argument("extract_cloud: threshold must be positive");
    OrientedPointCloud cloud;
    for (int row = 0; row < field.height; ++row) {
        for (int col = 0; col < field.width; ++col) {
            const size_t idx = static_cast<size_t>(row) * field.width + col;
            if (field.norm[idx] > threshold) {
                cloud.points.emplace_back(col, field.height - 1 - row);
                const double w = std::atan2(field.grad[idx].y(), field.grad[idx].x());
                cloud.omega.push_back(w);
                cloud.theta.push_back(wrap_angle(w + kPi / 2.0));
            }
        }
    }
    return cloud;
}

GrayImage box_blur(const GrayImage& img) {
    GrayImage out = img;
    for (int row = 0; row < img.height; ++row) {
        for (int col = 0; col < img.width; ++col) {
            double s = 0.0;
            int count = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int r = row + dr, c = col + dc;
                    if (r >= 0 && r < img.height && c >= 0 && c < img.width) {
                        s += img.at(c, r);
                        ++count;
                    }
                }
            out.at(col, row) = s / count;
        }
    }
    return out;
}

} // namespace roth
