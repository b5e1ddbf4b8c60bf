#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace calheat::kernel {

/// Heat kernel S_n(t, x) = (4 pi t)^(-n/2) exp(-|x|^2 / (4t)) for t > 0 and 0
/// for t <= 0. The spatial dimension is x.size(); it must be at least 2.
/// Throws InvalidArgument at (t, x) = (0, 0).
double heat_kernel(double t, std::span<const double> x);
double heat_kernel(double t, const Eigen::Vector2d& x);

/// Spatial gradient -x / (2t) * S_n(t, x); the zero vector for t <= 0.
std::vector<double> heat_kernel_gradient(double t, std::span<const double> x);
Eigen::Vector2d heat_kernel_gradient(double t, const Eigen::Vector2d& x);

/// Exponential integral E1(x) for x > 0. Power series below 1, continued
/// fraction above.
double expint_e1(double x);

/// Entire part of E1: Ein(x) = E1(x) + gamma + log(x).
double expint_ein(double x);

/// Integral over s in [s0, s1] of the 2-D heat kernel at distance d:
///   (1/4pi) [E1(d^2/(4 s1)) - E1(d^2/(4 s0))],
/// and (1/4pi) log(s1/s0) when d = 0. Rejects d = 0 with s0 = 0 (divergent)
/// and s1 <= s0.
double panel_time_integral(double d, double s0, double s1);

/// Integral over s in [s0, s1] of S_2(s, x) / (2s) at |x| = d, i.e.
///   (1 / (2 pi d^2)) [exp(-d^2/(4 s1)) - exp(-d^2/(4 s0))].
/// The time-integrated gradient is  -x * panel_time_gradient_weight(|x|, s0, s1).
/// Finite at d = 0 when s0 > 0.
double panel_time_gradient_weight(double d, double s0, double s1);

}  // namespace calheat::kernel
