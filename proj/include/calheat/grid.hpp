#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "calheat/geometry.hpp"

namespace calheat {

/// Panel-by-node values: row k is time panel k, column j is boundary node j.
using PanelMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace grid {

/// Uniform time panels (k dt, (k+1) dt], k = 0..Nt-1, and the node counts of the
/// two boundaries. Equations are collocated at the panel midpoints; end-point
/// collocation is only first order in dt with a noticeably larger constant.
struct SpaceTimeGrid {
  double T = 1.0;
  int Nt = 1;
  double dt = 1.0;
  int M_outer = 8;
  int M_inner = 8;

  double panel_start(int k) const { return k * dt; }
  double panel_end(int k) const { return (k + 1) * dt; }
  /// Collocation time of panel k.
  double time(int k) const { return (k + 0.5) * dt; }
};

/// Throws InvalidArgument unless T > 0, Nt >= 1 and both node counts are even
/// and at least 8.
SpaceTimeGrid make_grid(double T, int Nt, int M_outer, int M_inner);

/// Equispaced parameter nodes theta_j = 2 pi j / M on a curve, with the
/// periodic trapezoidal weights |gamma'(theta_j)| 2 pi / M.
struct NodeSet {
  geometry::BoundaryCurve curve;
  int M = 0;
  double h = 0.0;  // parameter spacing
  std::vector<double> theta;
  std::vector<geometry::Point> points;
  std::vector<geometry::Point> normals;
  std::vector<double> speed;
  std::vector<double> weights;

  double max_spacing() const;
  double total_weight() const;
};

NodeSet discretize(const geometry::BoundaryCurve& curve, int M);

/// Nodes on the image of a shape map. Speeds are jacobian_sigma times the
/// reference speed, so integrals over the image are taken in the reference
/// parametrization; normals are the pulled-back outward normals.
NodeSet discretize_image(const geometry::ShapeMap& phi, int M);

enum class Boundary { Outer, Inner };

/// A boundary space-time density (piecewise constant in time, nodal in space).
/// Panel 0 holds the value on (0, dt]; there is no separate t = 0 datum.
struct Density {
  Boundary boundary = Boundary::Outer;
  PanelMatrix values;

  static Density zeros(Boundary b, const SpaceTimeGrid& g);
  bool finite() const { return values.allFinite(); }
};

/// Discrete parabolic Hoelder seminorm: the larger of the time quotient
/// |d(t1,x)-d(t2,x)| / |t1-t2|^(alpha/2) and the space quotient
/// |d(t,x1)-d(t,x2)| / dist(x1,x2)^alpha, with arc-length distances along the
/// curve. Diagnostic only.
double hoelder_seminorm(const PanelMatrix& d, double alpha, const SpaceTimeGrid& g, const NodeSet& nodes);

/// CSV with header `panel,node,value`, row-major by panel.
void write_density_csv(std::ostream& out, const PanelMatrix& d);
PanelMatrix read_density_csv(std::istream& in);

}  // namespace grid
}  // namespace calheat
