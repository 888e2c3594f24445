#include "roth/cloud.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace roth {

namespace {
constexpr double kPi = std::numbers::pi;
}

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi)
        a += 2.0 * kPi;
    else if (a > kPi)
        a -= 2.0 * kPi;
    return a;
}

Eigen::VectorXd OrientedPointCloud::stacked() const {
    Eigen::VectorXd out(2 * size());
    for (int i = 0; i < size(); ++i)
        out.segment<2>(2 * i) = points[i];
    return out;
}

void OrientedPointCloud::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cloud: cannot write " + path);
    out.precision(17);
    if (has_angles()) {
        out << "x,y,omega,theta\n";
        for (int i = 0; i < size(); ++i)
            out << points[i].x() << ',' << points[i].y() << ',' << omega[i] << ',' << theta[i]
                << '\n';
    } else {
        out << "x,y\n";
        for (int i = 0; i < size(); ++i)
            out << points[i].x() << ',' << points[i].y() << '\n';
    }
}

OrientedPointCloud OrientedPointCloud::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cloud: cannot open " + path);
    OrientedPointCloud cloud;
    std::string line;
    bool header_checked = false;
    bool with_angles = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ','))
            cells.push_back(cell);
        if (!header_checked) {
            header_checked = true;
            if (!cells.empty() && (cells[0] == "x" || cells[0] == "\"x\"")) {
                with_angles = cells.size() >= 4;
                continue; // header row
            }
            with_angles = cells.size() >= 4;
        }
        if (cells.size() < 2)
            throw std::runtime_error("cloud: malformed CSV row: " + line);
        try {
            cloud.points.emplace_back(std::stod(cells[0]), std::stod(cells[1]));
            if (with_angles) {
                if (cells.size() < 4)
                    throw std::runtime_error("cloud: missing angle columns: " + line);
                cloud.omega.push_back(std::stod(cells[2]));
                cloud.theta.push_back(std::stod(cells[3]));
            }
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("cloud: non-numeric CSV value: " + line);
        }
    }
    return cloud;
}

} // namespace roth
