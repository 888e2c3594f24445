#pragma once

#include <Eigen/Dense>

#include "roth/polygon.hpp"

namespace roth {

// Scalar elevation matrix (2(n+v)+1) x (2n+1) mapping old control points to
// the control points of the same curve re-expressed at degree n+v.
Eigen::MatrixXd elevation_matrix_scalar(int degree, int v);

// Full stacked operator, 2(2(n+v)+1) x 2(2n+1), same scalar entry applied to
// x and y slots. v = 0 returns the identity.
Eigen::MatrixXd elevation_matrix(int degree, int v);

ControlPolygon elevate(const ControlPolygon& c, int v);

} // namespace roth
