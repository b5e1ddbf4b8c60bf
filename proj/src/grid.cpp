#include "calheat/grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include "calheat/error.hpp"

namespace calheat::grid {

SpaceTimeGrid make_grid(double T, int Nt, int M_outer, int M_inner) {
  if (!(T > 0.0)) throw InvalidArgument("grid", "final time T must be positive");
  if (Nt < 1) throw InvalidArgument("grid", "number of time panels must be at least 1");
  for (int m : {M_outer, M_inner}) {
    if (m < 8 || m % 2 != 0) throw InvalidArgument("grid", "node counts must be even and at least 8");
  }
  SpaceTimeGrid g;
  g.T = T;
  g.Nt = Nt;
  g.dt = T / Nt;
  g.M_outer = M_outer;
  g.M_inner = M_inner;
  return g;
}

double NodeSet::max_spacing() const {
  double h_max = 0.0;
  for (int j = 0; j < M; ++j) h_max = std::max(h_max, (points[j] - points[(j + 1) % M]).norm());
  return h_max;
}

double NodeSet::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

NodeSet make_nodes(const geometry::BoundaryCurve& curve, int M) {
  if (M < 3) throw InvalidArgument("grid", "too few nodes");
  NodeSet n{curve, M, 0.0, {}, {}, {}, {}, {}};
  n.M = M;
  n.h = 2.0 * std::numbers::pi / M;
  n.theta.resize(M);
  n.points.resize(M);
  n.normals.resize(M);
  n.speed.resize(M);
  n.weights.resize(M);
  for (int j = 0; j < M; ++j) {
    n.theta[j] = n.h * j;
    n.points[j] = curve.point(n.theta[j]);
  }
  return n;
}

}  // namespace

NodeSet discretize(const geometry::BoundaryCurve& curve, int M) {
  NodeSet n = make_nodes(curve, M);
  for (int j = 0; j < M; ++j) {
    n.normals[j] = geometry::normal_at(curve, n.theta[j]);
    n.speed[j] = curve.speed(n.theta[j]);
    n.weights[j] = n.speed[j] * n.h;
  }
  return n;
}

NodeSet discretize_image(const geometry::ShapeMap& phi, int M) {
  NodeSet n = make_nodes(phi.image(), M);
  for (int j = 0; j < M; ++j) {
    n.normals[j] = geometry::pullback_normal(phi, n.theta[j]);
    n.speed[j] = geometry::jacobian_sigma(phi, n.theta[j]) * phi.reference().speed(n.theta[j]);
    n.weights[j] = n.speed[j] * n.h;
  }
  return n;
}

Density Density::zeros(Boundary b, const SpaceTimeGrid& g) {
  return Density{b, PanelMatrix::Zero(g.Nt, b == Boundary::Outer ? g.M_outer : g.M_inner)};
}

double hoelder_seminorm(const PanelMatrix& d, double alpha, const SpaceTimeGrid& g, const NodeSet& nodes) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("grid", "alpha must lie in (0, 1)");
  const int Nt = static_cast<int>(d.rows());
  const int M = static_cast<int>(d.cols());
  double time_q = 0.0;
  for (int j = 0; j < M; ++j)
    for (int k1 = 0; k1 < Nt; ++k1)
      for (int k2 = k1 + 1; k2 < Nt; ++k2) {
        const double dt = (k2 - k1) * g.dt;
        time_q = std::max(time_q, std::abs(d(k1, j) - d(k2, j)) / std::pow(dt, 0.5 * alpha));
      }

  // Arc-length positions from the midpoint-sampled speed.
  std::vector<double> s(M + 1, 0.0);
  for (int j = 0; j < M; ++j) s[j + 1] = s[j] + nodes.curve.speed(nodes.theta[j] + 0.5 * nodes.h) * nodes.h;
  const double total = s[M];
  double space_q = 0.0;
  for (int k = 0; k < Nt; ++k)
    for (int i = 0; i < M; ++i)
      for (int j = i + 1; j < M; ++j) {
        const double along = s[j] - s[i];
        const double dist = std::min(along, total - along);
        space_q = std::max(space_q, std::abs(d(k, i) - d(k, j)) / std::pow(dist, alpha));
      }
  return std::max(time_q, space_q);
}

void write_density_csv(std::ostream& out, const PanelMatrix& d) {
  out << "panel,node,value\n";
  out.precision(17);
  for (Eigen::Index k = 0; k < d.rows(); ++k)
    for (Eigen::Index j = 0; j < d.cols(); ++j) out << k << ',' << j << ',' << d(k, j) << '\n';
}

PanelMatrix read_density_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "panel,node,value") {
    throw InvalidArgument("grid", "density CSV must start with header panel,node,value");
  }
  std::vector<std::tuple<int, int, double>> rows;
  int max_k = -1, max_j = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int k, j;
    double v;
    char c1, c2;
    if (!(ss >> k >> c1 >> j >> c2 >> v) || c1 != ',' || c2 != ',' || k < 0 || j < 0) {
      throw InvalidArgument("grid", "malformed density CSV at line " + std::to_string(line_no));
    }
    rows.emplace_back(k, j, v);
    max_k = std::max(max_k, k);
    max_j = std::max(max_j, j);
  }
  PanelMatrix d = PanelMatrix::Zero(max_k + 1, max_j + 1);
  for (const auto& [k, j, v] : rows) d(k, j) = v;
  return d;
}

}  // namespace calheat::grid
