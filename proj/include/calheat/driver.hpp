#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "calheat/config.hpp"
#include "calheat/nonlinear_solver.hpp"
#include "calheat/potentials.hpp"

namespace calheat::driver {

using geometry::Point;

/// f(t, x) = p(t) (c0 + cx x + cy y) with p(0) = 0.
struct NeumannDatum {
  std::vector<double> time_poly{0.0, 1.0};
  std::array<double, 3> space{1.0, 0.0, 0.0};
  double operator()(double t, const Point& x) const;
  bool is_zero() const;
};

/// Everything a run needs, validated from a Config.
struct Setup {
  geometry::BoundaryCurve outer = geometry::BoundaryCurve::circle({0, 0}, 1.0);
  geometry::BoundaryCurve inner = geometry::BoundaryCurve::circle({0, 0}, 0.4);
  double T = 0.5;
  int Nt = 32, M_outer = 32, M_inner = 32;
  potentials::QuadratureOptions quadrature;
  double gamma = 1.0;
  NeumannDatum f;
  nonlinear::RobinNonlinearity G = nonlinear::RobinNonlinearity::quadratic_benchmark();
  bool G_homogeneous = true;  // G(t, x, 0) = 0 for all t
  Point x0{0.05, 0.02};
  nonlinear::NewtonOptions newton;
  double tol_unique = 1e-8;
  geometry::ShapeDisplacement direction = geometry::ShapeDisplacement::dilation(1.0);
  std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
  std::vector<double> path{0.0, 0.01, 0.02, 0.03, 0.04, 0.05};
  std::vector<std::pair<double, Point>> interior;
  std::vector<int> levels{16, 32, 64};
  int restarts = 20;
  double restart_noise = 1e-3;
  int fd_Nr = 33, fd_Ntheta = 64, fd_steps_per_panel = 4;
};

Setup load_setup(const config::Config& c);

struct Assertion {
  std::string id;
  bool passed = false;
  std::string detail;
};

struct RunReport {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<Assertion> assertions;
  int failures() const;
};

/// Commands: solve-linear, solve-nonlinear, ntd, shape-sweep, verify, convergence.
/// Writes CSVs and report.txt into `out`. Throws InvalidArgument for usage or
/// configuration problems and SolverError for numerical failures.
RunReport run(const config::Config& c, const std::string& command, const std::filesystem::path& out,
              std::uint64_t seed);

const std::vector<std::string>& commands();

}  // namespace calheat::driver
