#include "calheat/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "calheat/error.hpp"

namespace calheat::kernel {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = std::numbers::egamma;

void check_defined(double t, double r2) {
  if (t == 0.0 && r2 == 0.0) {
    throw InvalidArgument("kernel", "heat kernel is undefined at (t, x) = (0, 0)");
  }
}

// E1 by modified Lentz evaluation of the continued fraction, x > 1.
double e1_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h * std::exp(-x);
}

// Ein(x) = sum_{k>=1} (-1)^{k+1} x^k / (k k!), used for x <= 1.
double ein_series(double x) {
  double term = x;  // x^k / k!
  double sum = x;
  for (int k = 2; k < 60; ++k) {
    term *= -x / k;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double heat_kernel(double t, std::span<const double> x) {
  const auto n = x.size();
  if (n < 2) throw InvalidArgument("kernel", "spatial dimension must be at least 2");
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  check_defined(t, r2);
  if (t <= 0.0) return 0.0;
  return std::pow(4.0 * kPi * t, -0.5 * static_cast<double>(n)) * std::exp(-r2 / (4.0 * t));
}

double heat_kernel(double t, const Eigen::Vector2d& x) {
  const double r2 = x.squaredNorm();
  check_defined(t, r2);
  if (t <= 0.0) return 0.0;
  return std::exp(-r2 / (4.0 * t)) / (4.0 * kPi * t);
}

std::vector<double> heat_kernel_gradient(double t, std::span<const double> x) {
  const double s = heat_kernel(t, x);
  std::vector<double> g(x.size(), 0.0);
  if (t <= 0.0) return g;
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = -x[i] / (2.0 * t) * s;
  return g;
}

Eigen::Vector2d heat_kernel_gradient(double t, const Eigen::Vector2d& x) {
  const double s = heat_kernel(t, x);
  if (t <= 0.0) return Eigen::Vector2d::Zero();
  return -x / (2.0 * t) * s;
}

double expint_ein(double x) {
  if (x <= 1.0) return ein_series(x);
  return e1_continued_fraction(x) + kEulerGamma + std::log(x);
}

double expint_e1(double x) {
  if (!(x > 0.0)) throw InvalidArgument("kernel", "E1 requires a positive argument");
  if (x <= 1.0) return -kEulerGamma - std::log(x) + ein_series(x);
  if (x > 740.0) return 0.0;
  return e1_continued_fraction(x);
}

double panel_time_integral(double d, double s0, double s1) {
  if (!(s1 > s0) || s0 < 0.0 || d < 0.0) {
    throw InvalidArgument("kernel", "panel_time_integral requires 0 <= s0 < s1 and d >= 0");
  }
  constexpr double c = 1.0 / (4.0 * kPi);
  if (d == 0.0) {
    if (s0 == 0.0) {
      throw InvalidArgument("kernel", "panel_time_integral diverges for d = 0, s0 = 0");
    }
    return c * std::log(s1 / s0);
  }
  const double d2 = d * d;
  const double z1 = d2 / (4.0 * s1);
  if (s0 == 0.0) return z1 > 740.0 ? 0.0 : c * expint_e1(z1);
  const double z0 = d2 / (4.0 * s0);
  if (z0 <= 1.0) {
    return c * (std::log(s1 / s0) + ein_series(z1) - ein_series(z0));
  }
  if (z1 > 740.0) return 0.0;
  return c * (expint_e1(z1) - expint_e1(z0));
}

double panel_time_gradient_weight(double d, double s0, double s1) {
  if (!(s1 > s0) || s0 < 0.0 || d < 0.0) {
    throw InvalidArgument("kernel", "panel_time_gradient_weight requires 0 <= s0 < s1 and d >= 0");
  }
  if (d == 0.0) {
    if (s0 == 0.0) {
      throw InvalidArgument("kernel", "gradient time integral diverges for d = 0, s0 = 0");
    }
    return (1.0 / s0 - 1.0 / s1) / (8.0 * kPi);
  }
  const double d2 = d * d;
  const double a1 = d2 / (4.0 * s1);
  if (a1 > 740.0) return 0.0;
  double bracket;
  if (s0 == 0.0) {
    bracket = std::exp(-a1);
  } else {
    const double a0 = d2 / (4.0 * s0);
    bracket = -std::exp(-a1) * std::expm1(-(a0 - a1));
  }
  return bracket / (2.0 * kPi * d2);
}

}  // namespace calheat::kernel
