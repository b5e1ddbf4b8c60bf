#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "calheat/error.hpp"
#include "calheat/kernel.hpp"
#include "calheat/oracle.hpp"

using namespace calheat;
using namespace calheat::oracle;
using geometry::BoundaryCurve;
using geometry::Point;
constexpr double pi = std::numbers::pi;

namespace {

double heat_residual(const ManufacturedField& u, double t, const Point& x, double h) {
  const Point ex(h, 0), ey(0, h);
  const double ut = (u.value(t + h * h, x) - u.value(t - h * h, x)) / (2 * h * h);
  const double lap = (u.value(t, x + ex) + u.value(t, x - ex) + u.value(t, x + ey) + u.value(t, x - ey) - 4 * u.value(t, x)) / (h * h);
  return ut - lap;
}

}  // namespace

TEST_CASE("switched-on source is caloric and starts at zero") {
  const auto u = ManufacturedField::source({0.1, -0.05});
  CHECK(u.value(0.0, Point(0.7, 0.2)) == 0.0);
  for (const Point x : {Point(0.7, 0.2), Point(-0.5, 0.6)}) {
    CHECK(u.heat_defect(0.3, x) == 0.0);
    CHECK(std::abs(heat_residual(u, 0.3, x, 1e-3)) < 1e-5);
    const double h = 1e-6;
    const Point gr = u.gradient(0.3, x);
    CHECK(gr.x() == doctest::Approx((u.value(0.3, x + Point(h, 0)) - u.value(0.3, x - Point(h, 0))) / (2 * h)).epsilon(1e-7));
    CHECK(gr.y() == doctest::Approx((u.value(0.3, x + Point(0, h)) - u.value(0.3, x - Point(0, h))) / (2 * h)).epsilon(1e-7));
  }
  // Radial flux through a centered circle: -(1/2pi r) exp(-r^2/4t).
  const auto centered = ManufacturedField::source({0, 0});
  const Point x(0.6, 0.8);
  CHECK(x.dot(centered.gradient(0.25, x)) == doctest::Approx(-std::exp(-1.0) / (2 * pi)).epsilon(1e-14));
}

TEST_CASE("shifted Gaussian carries its stationary defect") {
  const auto u = ManufacturedField::gaussian({0.1, 0.0}, 0.5);
  const Point x(0.6, 0.3);
  CHECK(u.value(0.0, x) == 0.0);
  // (d_t - Lap) u = Lap S(t0, x - x0) = S(t0) (r^2 / 4t0^2 - 1/t0).
  const double r2 = (x - Point(0.1, 0)).squaredNorm();
  const double expected = kernel::heat_kernel(0.5, x - Point(0.1, 0)) * (r2 / (4 * 0.25) - 1 / 0.5);
  CHECK(u.heat_defect(0.2, x) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(heat_residual(u, 0.2, x, 1e-3) == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("manufactured boundary data") {
  const auto g = grid::make_grid(0.5, 4, 16, 16);
  const auto no = grid::discretize(BoundaryCurve::circle({0, 0}, 1), 16);
  const auto ni = grid::discretize(BoundaryCurve::circle({0, 0}, 0.4), 16);
  const auto field = ManufacturedField::source({0, 0});
  const auto md = manufactured_data(field, no, ni, g, PanelMatrix::Zero(4, 16));
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 16; ++j) {
      const double t = g.time(k);
      CHECK(md.f(k, j) == doctest::Approx(-std::exp(-1 / (4 * t)) / (2 * pi)).epsilon(1e-13));
      CHECK(md.trace_inner(k, j) == doctest::Approx(kernel::expint_e1(0.16 / (4 * t)) / (4 * pi)).epsilon(1e-13));
      CHECK(md.g(k, j) == doctest::Approx(-std::exp(-0.16 / (4 * t)) / (2 * pi * 0.4)).epsilon(1e-12));
    }
  CHECK(md.defect_bound == 0.0);
  CHECK(md.signal > 0.0);
  const auto gm = manufactured_data(ManufacturedField::gaussian({0, 0}, 0.5), no, ni, g, PanelMatrix::Zero(4, 16));
  CHECK(gm.defect_bound > 0.0);
  CHECK(gm.defect_bound < 0.1 * gm.signal * 100);
  CHECK_THROWS_AS(manufactured_data(ManufacturedField::source({0.7, 0}), no, ni, g, PanelMatrix::Zero(4, 16)),
                  InvalidArgument);
}

TEST_CASE("finite-difference solver: zero data and causality") {
  FdAnnulusSolver fd(BoundaryCurve::circle({0, 0}, 1), BoundaryCurve::circle({0, 0}, 0.4), {0, 0}, 0.5, {9, 16, 8});
  FdProblem p;
  p.f = [](double, const Point&) { return 0.0; };
  p.g = [](double, const Point&) { return 0.0; };
  p.G = [](double t, const Point&, double u) { return t * u - 0.1 * u * u; };
  p.dG = [](double t, const Point&, double u) { return t - 0.2 * u; };
  fd.solve(p);
  for (int n = 0; n <= fd.steps(); ++n) CHECK((fd.state(n).array() == 0.0).all());

  // Changing data after step 3 leaves steps 0..3 untouched.
  FdAnnulusSolver a(BoundaryCurve::circle({0, 0}, 1), BoundaryCurve::circle({0, 0}, 0.4), {0, 0}, 0.5, {9, 16, 8});
  FdAnnulusSolver b = a;
  p.f = [](double t, const Point& x) { return t * (1 + x.x()); };
  a.solve(p);
  p.f = [](double t, const Point& x) { return t > 3.5 * 0.5 / 8 ? -5.0 : t * (1 + x.x()); };
  b.solve(p);
  for (int n = 0; n <= 3; ++n) CHECK((a.state(n).array() == b.state(n).array()).all());
  CHECK((a.state(5) - b.state(5)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("finite-difference solver converges to the exact source field") {
  const auto field = ManufacturedField::source({0.1, 0.05});
  const double gamma = 1.0;
  auto f = [&](double t, const Point& x) { return x.normalized().dot(field.gradient(t, x)); };
  auto gdat = [&](double t, const Point& x) { return x.normalized().dot(field.gradient(t, x)) + gamma * field.value(t, x); };
  double prev = 1e9;
  for (int L : {1, 2}) {
    FdAnnulusSolver fd(BoundaryCurve::circle({0, 0}, 1), BoundaryCurve::circle({0, 0}, 0.4), {0, 0}, 0.5,
                       {16 * L + 1, 32 * L, 32 * L * L});
    fd.solve(robin_problem(f, gdat, [&](double, const Point&) { return gamma; }));
    double err = 0, sig = 0;
    for (int j = 0; j < 32; ++j) {
      const Point e(std::cos(2 * pi * j / 32), std::sin(2 * pi * j / 32));
      for (double t : {0.1, 0.3, 0.5}) {
        err = std::max({err, std::abs(fd.boundary_value(true, t, e) - field.value(t, e)),
                        std::abs(fd.boundary_value(false, t, 0.4 * e) - field.value(t, 0.4 * e)),
                        std::abs(fd.value(t, 0.7 * e) - field.value(t, 0.7 * e))});
        sig = std::max(sig, std::abs(field.value(t, 0.4 * e)));
      }
    }
    CAPTURE(L);
    CHECK(err / sig < prev);
    prev = err / sig;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("radial reduction agrees with the two-dimensional solver") {
  auto fr = [](double t) { return t; };
  auto gr = [](double t) { return -0.5 * t; };
  const auto rad = radial_fd_solve(0.4, 1.0, 2.0, fr, gr, 0.5, 257, 256);
  FdAnnulusSolver fd(BoundaryCurve::circle({0, 0}, 1), BoundaryCurve::circle({0, 0}, 0.4), {0, 0}, 0.5, {257, 8, 256});
  fd.solve(robin_problem([&](double t, const Point&) { return fr(t); }, [&](double t, const Point&) { return gr(t); },
                         [](double, const Point&) { return 2.0; }));
  const double scale = std::abs(rad.u.back().back());
  CHECK(std::abs(fd.boundary_value(true, 0.5, {1, 0}) - rad.u.back().back()) < 1e-3 * scale);
  CHECK(std::abs(fd.boundary_value(false, 0.5, {0, 0.4}) - rad.u.back().front()) < 1e-3 * scale);
  CHECK(rad.r.front() == doctest::Approx(0.4));
  CHECK(rad.r.back() == doctest::Approx(1.0));
}

TEST_CASE("finite-difference scope and exports") {
  // A curve whose polar radius about the center is not single valued.
  const auto peanut = BoundaryCurve::fourier({0, 0}, 0.2, {0, 0.19}, {});
  CHECK_THROWS_AS(FdAnnulusSolver(BoundaryCurve::circle({0, 0}, 1), peanut, {0.3, 0.0}, 0.5, {9, 16, 4}), InvalidArgument);

  FdAnnulusSolver fd(BoundaryCurve::circle({0, 0}, 1), BoundaryCurve::circle({0, 0}, 0.4), {0, 0}, 0.5, {5, 8, 2});
  FdProblem p;
  p.f = [](double t, const Point&) { return t; };
  p.g = [](double, const Point&) { return 0.0; };
  fd.solve(p);
  std::ostringstream out;
  fd.write_snapshots(out, 1);
  const std::string s = out.str();
  CHECK(s.rfind("t,r_index,theta_index,x,y,value\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 3 * 5 * 8);
}
