#pragma once

#include <Eigen/Dense>

#include "roth/cloud.hpp"
#include "roth/polygon.hpp"

namespace roth {

// Observations for one shape in stacked form. params holds the latent curve
// parameterization t_i of each point; theta is empty without orientation data.
struct ObservationSet {
    Eigen::VectorXd points; // 2N
    Eigen::VectorXd theta;  // N or empty
    Eigen::VectorXd params; // N

    int count() const { return static_cast<int>(params.size()); }
    bool has_angles() const { return theta.size() > 0; }
    void validate() const;

    static ObservationSet from_cloud(const OrientedPointCloud& cloud);
};

// Sum over i of log N2(p_i; X(t_i) c, sigma^2 I2), sigma^2 = 1/tau_p.
double loglik_points(const ControlPolygon& c, const ObservationSet& obs, double tau_p);

// Marginal log-likelihood of one observed tangent angle given the hodograph
// (hx, hy) at its parameter, with the tangent magnitude integrated out under
// a flat prior. Evaluated through (sin, cos) so steep angles stay finite.
double orientation_logpdf(double hx, double hy, double theta, double tau_sq);

double loglik_orientations(const ControlPolygon& c, const ObservationSet& obs, double tau_sq);

// Quadratic-form pieces of the orientation likelihood: the 2J x 2J precision
// contribution W with sum_i logpdf = const(tau) - (1/2) c' (W / tau_sq') ...
// Concretely: residual(c) = c' W c equals the summed squared normal
// components (hy cos(theta) - hx sin(theta))^2, so the likelihood exponent is
// -residual / (2 tau^2).
Eigen::MatrixXd orientation_quadratic(int degree, const ObservationSet& obs);

// residual(c) = c' W c computed directly (used by the tau^2 update).
double orientation_residual(const ControlPolygon& c, const ObservationSet& obs);

} // namespace roth
