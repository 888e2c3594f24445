#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "roth/cloud.hpp"

namespace roth {

// Rectangular grayscale raster, row-major, intensities as doubles.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    double at(int col, int row) const { return data[static_cast<size_t>(row) * width + col]; }
    double& at(int col, int row) { return data[static_cast<size_t>(row) * width + col]; }

    static GrayImage load_pgm(const std::string& path); // P2 or P5, 8-bit
    void save_pgm(const std::string& path) const;       // P5
};

// Per-pixel gradient vectors in curve coordinates (x right, y up) and their
// norms. Central differences inside, one-sided at borders.
struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<Eigen::Vector2d> grad; // row-major like the image
    std::vector<double> norm;

    double max_norm() const;
};

GradientField gradient_field(const GrayImage& img);
GradientField gradient_field_serial(const GrayImage& img);

// Pixels whose gradient norm exceeds the threshold become oriented points.
// Point coordinates are (col, height-1-row) so y increases upward; omega is
// the gradient angle and theta = omega + pi/2 wrapped to (-pi, pi].
OrientedPointCloud extract_cloud(const GradientField& field, double threshold);

// Optional 3x3 box pre-blur for noisy rasters.
GrayImage box_blur(const GrayImage& img);

} // namespace roth
