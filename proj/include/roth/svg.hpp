#pragma once

#include <string>
#include <vector>

#include "roth/cloud.hpp"
#include "roth/polygon.hpp"

namespace roth {

// SVG polyline render of a closed curve in a y-up viewport, with pale markers
// at the control points. Optional scatter of observed points underneath.
std::string render_curve_svg(const ControlPolygon& curve, int samples,
                             const OrientedPointCloud* cloud = nullptr);

void write_svg(const std::string& path, const std::string& svg);

} // namespace roth
