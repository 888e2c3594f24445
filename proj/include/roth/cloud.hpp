#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace roth {

// Observed boundary points, optionally with gradient/tangent angles.
// Angles are present for every point or for none.
struct OrientedPointCloud {
    std::vector<Eigen::Vector2d> points;
    std::vector<double> omega; // gradient angle, empty when absent
    std::vector<double> theta; // tangent angle = omega + pi/2, wrapped

    int size() const { return static_cast<int>(points.size()); }
    bool has_angles() const { return !theta.empty(); }

    // Stacked (p_1x, p_1y, ...) vector.
    Eigen::VectorXd stacked() const;

    // CSV with header "x,y,omega,theta" (angle columns omitted when absent).
    void save_csv(const std::string& path) const;
    static OrientedPointCloud load_csv(const std::string& path);
};

double wrap_angle(double a); // into (-pi, pi]

} // namespace roth
