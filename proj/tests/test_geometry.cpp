#include <doctest.h>

#include <cmath>
#include <numbers>

#include "calheat/error.hpp"
#include "calheat/geometry.hpp"

using namespace calheat;
using namespace calheat::geometry;
constexpr double pi = std::numbers::pi;

namespace {
void check_point(const Point& a, const Point& b, double tol = 1e-12) {
  CHECK((a - b).norm() < tol);
}

Point rotate(const Point& p, double a) { return {std::cos(a) * p.x() - std::sin(a) * p.y(), std::sin(a) * p.x() + std::cos(a) * p.y()}; }
}  // namespace

TEST_CASE("outward normals") {
  check_point(normal_at(BoundaryCurve::circle({0, 0}, 1), 0.0), {1, 0});
  check_point(normal_at(BoundaryCurve::circle({1, 0}, 2), pi), {-1, 0});
  check_point(normal_at(BoundaryCurve::ellipse({0, 0}, 2, 1), pi / 2), {0, 1});
  const auto bean = BoundaryCurve::fourier({0.1, -0.2}, 0.5, {0.05, 0.03}, {0.02});
  for (int j = 0; j < 16; ++j) {
    const double th = 2 * pi * j / 16;
    const Point n = normal_at(bean, th);
    CHECK(n.norm() == doctest::Approx(1.0));
    CHECK(n.dot(bean.point(th) - bean.centroid()) > 0);
    CHECK(std::abs(n.dot(bean.tangent(th))) < 1e-12);
  }
}

TEST_CASE("clockwise parametrizations still get outward normals") {
  struct Clockwise : Parametrization {
    Point position(double t) const override { return {std::cos(-t), std::sin(-t)}; }
    Point derivative(double t) const override { return {std::sin(-t), -std::cos(-t)}; }
  };
  const BoundaryCurve c(std::make_shared<Clockwise>());
  CHECK(c.orientation() == -1);
  check_point(c.normal(0.3), c.point(0.3));
}

TEST_CASE("pulled-back normals") {
  const auto unit = BoundaryCurve::circle({0, 0}, 1);
  check_point(pullback_normal(ShapeMap::identity(unit), 0.0), {1, 0});
  const ShapeMap half(unit, ShapeDisplacement::scaling(0.5));
  for (double th : {0.0, 0.7, 2.0, 4.5}) check_point(pullback_normal(half, th), normal_at(unit, th));

  // Rigid rotation by pi/2 of an ellipse: the normal rotates with the curve.
  const auto ell = BoundaryCurve::ellipse({0, 0}, 2, 1);
  ShapeDisplacement rot;
  rot.linear << -1, -1, 1, -1;  // R - I with R the quarter turn
  const ShapeMap turned(ell, rot);
  const auto rotated_curve = BoundaryCurve::ellipse({0, 0}, 2, 1, pi / 2);
  check_point(pullback_normal(turned, 0.0), normal_at(rotated_curve, 0.0), 1e-12);
  check_point(pullback_normal(turned, 0.0), rotate(normal_at(ell, 0.0), pi / 2), 1e-12);
}

TEST_CASE("change-of-variables Jacobian") {
  const auto unit = BoundaryCurve::circle({0, 0}, 1);
  for (double th : {0.0, 1.0, 3.0}) {
    CHECK(jacobian_sigma(ShapeMap::identity(unit), th) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(jacobian_sigma(ShapeMap(unit, ShapeDisplacement::scaling(0.3)), th) == doctest::Approx(0.3).epsilon(1e-14));
  }
  // r = 1 + 0.1 cos 3 theta as a radial bump of the unit circle.
  const ShapeMap bump(unit, ShapeDisplacement::radial_mode(3, 0.1, 0.0));
  const double h = 1e-6;
  for (double th : {0.1, 0.9, 2.5, 5.0}) {
    const double img = (bump.apply(th + h) - bump.apply(th - h)).norm() / (2 * h);
    const double ref = (unit.point(th + h) - unit.point(th - h)).norm() / (2 * h);
    CHECK(jacobian_sigma(bump, th) == doctest::Approx(img / ref).epsilon(1e-5));
    check_point(bump.apply(th), (1 + 0.1 * std::cos(3 * th)) * unit.point(th), 1e-13);
  }
}

TEST_CASE("admissible shape class") {
  const auto unit = BoundaryCurve::circle({0, 0}, 1);
  const auto big = BoundaryCurve::circle({0, 0}, 3);
  CHECK(check_admissible(ShapeMap::identity(unit), big, 0.1).passed());

  const auto out = check_admissible(ShapeMap(unit, ShapeDisplacement::scaling(4.0)), big, 0.1);
  CHECK_FALSE(out.contained);
  CHECK_FALSE(out.passed());
  CHECK_FALSE(out.failures.empty());

  // Limacon r = 0.3 + 0.7 cos theta has an inner loop.
  const auto limacon = BoundaryCurve::fourier({0, 0}, 0.3, {0.7}, {});
  const auto rep = check_admissible(ShapeMap::identity(limacon), big, 0.1, 256);
  CHECK_FALSE(rep.injective);
  // Brute-force segment scan agrees.
  const auto pts = limacon.sample(256);
  bool crossing = false;
  for (int a = 0; a < 256 && !crossing; ++a)
    for (int b = a + 2; b < 256; ++b) {
      if (a == 0 && b == 255) continue;
      if (segments_intersect(pts[a], pts[(a + 1) % 256], pts[b], pts[(b + 1) % 256])) {
        crossing = true;
        break;
      }
    }
  CHECK(crossing);

  // Touching the clearance margin fails, well inside passes.
  CHECK_FALSE(check_admissible(ShapeMap::identity(BoundaryCurve::circle({0, 0}, 0.97)), unit, 0.05).passed());
  CHECK(check_admissible(ShapeMap::identity(BoundaryCurve::circle({0, 0}, 0.9)), unit, 0.05).passed());
  CHECK(default_clearance(unit) == doctest::Approx(0.1).epsilon(1e-3));
}

TEST_CASE("polygon helpers") {
  const auto sq = std::vector<Point>{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(winding_number(sq, {0.5, 0.5}) == 1);
  CHECK(winding_number(sq, {1.5, 0.5}) == 0);
  CHECK(polygon_distance(sq, {0.5, 0.2}) == doctest::Approx(0.2));
  CHECK(segments_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0}));
  CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
}

TEST_CASE("shape displacements are linear") {
  const auto unit = BoundaryCurve::circle({0, 0}, 1);
  const auto a = ShapeDisplacement::radial_mode(2, 0.1, 0.05);
  const auto b = ShapeDisplacement::shift({0.2, -0.1});
  const ShapeMap sum(unit, a + b);
  const ShapeMap pa(unit, a), pb(unit, b);
  for (double th : {0.0, 1.3, 4.0}) check_point(sum.apply(th) - unit.point(th), (pa.apply(th) - unit.point(th)) + (pb.apply(th) - unit.point(th)), 1e-14);
  CHECK(ShapeDisplacement().is_zero());
  CHECK(ShapeMap::identity(unit).perturbed(ShapeDisplacement(), 0.3).is_identity());
  // Dilation is the derivative of scaling at 1.
  const double e = 1e-3;
  const ShapeMap d = ShapeMap::identity(unit).perturbed(ShapeDisplacement::dilation(1.0), e);
  check_point(d.apply(0.4), (1 + e) * unit.point(0.4), 1e-14);
}

TEST_CASE("degenerate tangent is rejected") {
  struct Pinched : Parametrization {
    Point position(double t) const override { return {std::cos(t), std::sin(t)}; }
    Point derivative(double t) const override { return t == 0.0 ? Point(0, 0) : Point(-std::sin(t), std::cos(t)); }
  };
  const BoundaryCurve c(std::make_shared<Pinched>());
  CHECK_THROWS_AS(c.normal(0.0), InvalidArgument);
}
