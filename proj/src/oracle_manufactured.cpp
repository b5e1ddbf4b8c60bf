#include <algorithm>
#include <cmath>
#include <numbers>

#include "calheat/error.hpp"
#include "calheat/kernel.hpp"
#include "calheat/oracle.hpp"

namespace calheat::oracle {

namespace {
constexpr double kPi = std::numbers::pi;
}

ManufacturedField ManufacturedField::source(const Point& x0) { return {Kind::SwitchedOnSource, x0, 0.0}; }

ManufacturedField ManufacturedField::gaussian(const Point& x0, double t0) {
  if (!(t0 > 0.0)) throw InvalidArgument("oracle", "Gaussian time offset must be positive");
  return {Kind::ShiftedGaussian, x0, t0};
}

double ManufacturedField::value(double t, const Point& x) const {
  if (t <= 0.0) return 0.0;
  const double r2 = (x - x0).squaredNorm();
  if (kind == Kind::SwitchedOnSource) return kernel::expint_e1(r2 / (4.0 * t)) / (4.0 * kPi);
  return kernel::heat_kernel(t + t0, Point(x - x0)) - kernel::heat_kernel(t0, Point(x - x0));
}

Point ManufacturedField::gradient(double t, const Point& x) const {
  if (t <= 0.0) return Point::Zero();
  const Point r = x - x0;
  if (kind == Kind::SwitchedOnSource) {
    const double r2 = r.squaredNorm();
    return -r * std::exp(-r2 / (4.0 * t)) / (2.0 * kPi * r2);
  }
  return kernel::heat_kernel_gradient(t + t0, r) - kernel::heat_kernel_gradient(t0, r);
}

double ManufacturedField::heat_defect(double t, const Point& x) const {
  if (kind == Kind::SwitchedOnSource || t <= 0.0) return 0.0;
  const double r2 = (x - x0).squaredNorm();
  return kernel::heat_kernel(t0, Point(x - x0)) * (r2 / (4.0 * t0 * t0) - 1.0 / t0);
}

ManufacturedData manufactured_data(const ManufacturedField& field, const grid::NodeSet& outer,
                                   const grid::NodeSet& inner, const grid::SpaceTimeGrid& g,
                                   const PanelMatrix& gamma) {
  const auto hole = inner.curve.sample(std::max(8 * inner.M, 512));
  if (geometry::winding_number(hole, field.x0) == 0 || geometry::polygon_distance(hole, field.x0) < 1e-8) {
    throw InvalidArgument("oracle", "manufactured source point must lie strictly inside the hole");
  }
  if (gamma.rows() != g.Nt || gamma.cols() != inner.M) throw InvalidArgument("oracle", "gamma has the wrong shape");
  ManufacturedData d;
  d.f.resize(g.Nt, outer.M);
  d.trace_outer.resize(g.Nt, outer.M);
  d.g.resize(g.Nt, inner.M);
  d.trace_inner.resize(g.Nt, inner.M);
  for (int k = 0; k < g.Nt; ++k) {
    const double t = g.time(k);
    for (int j = 0; j < outer.M; ++j) {
      d.trace_outer(k, j) = field.value(t, outer.points[j]);
      d.f(k, j) = outer.normals[j].dot(field.gradient(t, outer.points[j]));
    }
    for (int j = 0; j < inner.M; ++j) {
      const double u = field.value(t, inner.points[j]);
      d.trace_inner(k, j) = u;
      d.g(k, j) = inner.normals[j].dot(field.gradient(t, inner.points[j])) + gamma(k, j) * u;
    }
  }
  // Defect and signal on segments joining matching boundary fractions.
  const int rays = std::max(outer.M, inner.M);
  for (int k = 0; k < g.Nt; ++k) {
    const double t = g.time(k);
    for (int m = 0; m < rays; ++m) {
      const Point a = inner.points[(m * inner.M) / rays];
      const Point b = outer.points[(m * outer.M) / rays];
      for (int s = 0; s <= 8; ++s) {
        const Point x = a + (b - a) * (s / 8.0);
        d.defect_bound = std::max(d.defect_bound, std::abs(field.heat_defect(t, x)));
        d.signal = std::max(d.signal, std::abs(field.value(t, x)));
      }
    }
  }
  return d;
}

}  // namespace calheat::oracle
