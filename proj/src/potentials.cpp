#include "calheat/potentials.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include "calheat/error.hpp"
#include "calheat/kernel.hpp"
#include "calheat/parallel.hpp"
#include "calheat/quadrature.hpp"

namespace calheat::potentials {

using geometry::Point;

namespace {

constexpr double kPi = std::numbers::pi;

struct Sample {
  Point y;
  double speed;
  double w;  // parameter weight
  double u;  // parameter offset from the panel's node
};

using Samples = std::vector<Sample>;

// Quadrature samples for each arc panel [theta_j - h/2, theta_j + h/2].
struct PanelRules {
  Samples plain;
  Samples left;    // graded toward theta_j - h/2
  Samples right;   // graded toward theta_j + h/2
  Samples center;  // graded toward theta_j from both sides
};

Sample make_sample(const geometry::BoundaryCurve& c, double theta_j, double u, double w) {
  return Sample{c.point(theta_j + u), c.speed(theta_j + u), w, u};
}

std::vector<PanelRules> build_rules(const NodeSet& n, const QuadratureOptions& o, bool graded) {
  const auto plain = quadrature::composite_gauss(2, o.gauss_order);
  const auto toward0 = quadrature::graded_toward_zero(o.graded_levels, o.gauss_order);
  const double h = n.h;
  std::vector<PanelRules> rules(n.M);
  for (int j = 0; j < n.M; ++j) {
    const double tj = n.theta[j];
    auto& r = rules[j];
    for (std::size_t q = 0; q < plain.nodes.size(); ++q) {
      r.plain.push_back(make_sample(n.curve, tj, -0.5 * h + h * plain.nodes[q], h * plain.weights[q]));
    }
    if (!graded) continue;
    for (std::size_t q = 0; q < toward0.nodes.size(); ++q) {
      const double x = toward0.nodes[q];
      const double w = toward0.weights[q];
      r.left.push_back(make_sample(n.curve, tj, -0.5 * h + h * x, h * w));
      r.right.push_back(make_sample(n.curve, tj, 0.5 * h - h * x, h * w));
      r.center.push_back(make_sample(n.curve, tj, 0.5 * h * x, 0.5 * h * w));
      r.center.push_back(make_sample(n.curve, tj, -0.5 * h * x, 0.5 * h * w));
    }
  }
  return rules;
}

int circular_offset(int j, int i, int M) {
  int d = (j - i) % M;
  if (d < 0) d += M;
  if (d > M / 2) d -= M;
  return d;
}

double v_kernel(const Point& x, const Point& y, double s0, double s1) {
  return kernel::panel_time_integral((x - y).norm(), s0, s1);
}

double w_kernel(const Point& x, const Point& n, const Point& y, double s0, double s1) {
  const Point r = x - y;
  return -n.dot(r) * kernel::panel_time_gradient_weight(r.norm(), s0, s1);
}

template <class Kernel>
double integrate(const Samples& s, Kernel&& k) {
  double sum = 0.0;
  for (const auto& p : s) sum += k(p.y) * p.speed * p.w;
  return sum;
}

const Samples& self_rule(const PanelRules& r, int offset) {
  if (offset == 0) return r.center;
  if (offset == 1) return r.left;
  if (offset == -1) return r.right;
  return r.plain;
}

enum class SelfKind { V, Wstar };

CausalOperator assemble_self(const NodeSet& n, const SpaceTimeGrid& g, int near_lags,
                             const QuadratureOptions& opts, SelfKind kind) {
  const int M = n.M;
  CausalOperator op(M, M, g.Nt);
  const auto rules = build_rules(n, opts, true);
  const double h = n.h;
  parallel_for(0, M, [&](int i) {
    const Point& xi = n.points[i];
    const Point& ni = n.normals[i];
    for (int lag = 0; lag < g.Nt; ++lag) {
      const auto [s0, s1] = lag_interval(g, lag);
      auto& B = op.block(lag);
      for (int j = 0; j < M; ++j) {
        double value;
        if (lag < near_lags) {
          const int off = circular_offset(j, i, M);
          const Samples& rule = self_rule(rules[j], off);
          if (kind == SelfKind::V) {
            if (off == 0 && lag == 0) {
              // K0(d) = -(1/2pi) log d + smooth; subtract the log of the
              // parameter offset and integrate it in closed form.
              const double si = n.speed[i];
              double sum = 0.0;
              for (const auto& p : rule) {
                sum += p.w * (v_kernel(xi, p.y, s0, s1) * p.speed +
                              std::log(std::abs(p.u)) * si / (2.0 * kPi));
              }
              value = sum - si / (2.0 * kPi) * h * (std::log(0.5 * h) - 1.0);
            } else {
              value = integrate(rule, [&](const Point& y) { return v_kernel(xi, y, s0, s1); });
            }
          } else {
            value = integrate(rule, [&](const Point& y) { return w_kernel(xi, ni, y, s0, s1); });
          }
        } else if (kind == SelfKind::V) {
          value = v_kernel(xi, n.points[j], s0, s1) * n.weights[j];
        } else {
          // The nodal diagonal vanishes: n.(x - y) = O(|x - y|^2) while the
          // time-integrated weight stays bounded for lags >= 1.
          value = i == j ? 0.0 : w_kernel(xi, ni, n.points[j], s0, s1) * n.weights[j];
        }
        B(i, j) = value;
      }
    }
  });
  return op;
}

// Closest parameter (relative offset in [-h/2, h/2]) of panel j to x.
double closest_offset(const NodeSet& n, int j, const Point& x) {
  const double h = n.h;
  const int probes = 32;
  double best_u = 0.0, best_d = std::numeric_limits<double>::infinity();
  for (int q = 0; q <= probes; ++q) {
    const double u = -0.5 * h + h * q / probes;
    const double d = (n.curve.point(n.theta[j] + u) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best_u = u;
    }
  }
  double lo = std::max(-0.5 * h, best_u - h / probes);
  double hi = std::min(0.5 * h, best_u + h / probes);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double a = hi - gr * (hi - lo);
    const double b = lo + gr * (hi - lo);
    if ((n.curve.point(n.theta[j] + a) - x).squaredNorm() < (n.curve.point(n.theta[j] + b) - x).squaredNorm())
      hi = b;
    else
      lo = a;
  }
  return 0.5 * (lo + hi);
}

// Gauss samples on panel j graded toward offset u_star from both sides.
Samples graded_at(const NodeSet& n, int j, double u_star, int levels, int order) {
  const auto toward0 = quadrature::graded_toward_zero(levels, order);
  const double h = n.h;
  const double left_len = u_star + 0.5 * h;
  const double right_len = 0.5 * h - u_star;
  Samples out;
  for (std::size_t q = 0; q < toward0.nodes.size(); ++q) {
    const double x = toward0.nodes[q];
    const double w = toward0.weights[q];
    if (left_len > 0.0) out.push_back(make_sample(n.curve, n.theta[j], u_star - left_len * x, left_len * w));
    if (right_len > 0.0) out.push_back(make_sample(n.curve, n.theta[j], u_star + right_len * x, right_len * w));
  }
  return out;
}

double single_layer_impl(const NodeSet& src, const std::vector<PanelRules>& rules, const SpaceTimeGrid& g,
                         const PanelMatrix& density, double t, const Point& x, int near_lags,
                         const QuadratureOptions& opts) {
  // Near panels (in time and space) get a dedicated graded rule.
  std::vector<const Samples*> panel_rule(src.M, nullptr);
  std::vector<Samples> graded(src.M);
  for (int j = 0; j < src.M; ++j) {
    const double dist = (src.points[j] - x).norm();
    if (dist < 1.5 * src.weights[j]) {
      const double u = closest_offset(src, j, x);
      const double closest = (src.curve.point(src.theta[j] + u) - x).norm();
      const double ratio = src.weights[j] / std::max(closest, 1e-300);
      const int levels = std::clamp(static_cast<int>(std::ceil(std::log2(4.0 * ratio))), 2, 45);
      graded[j] = graded_at(src, j, u, levels, opts.gauss_order);
      panel_rule[j] = &graded[j];
    } else {
      panel_rule[j] = &rules[j].plain;
    }
  }

  // Beyond two node spacings the nodal rule resolves every lag. Using it for all
  // panels there keeps the evaluated field a fixed sum of caloric terms, so the
  // result stays smooth in t instead of switching rules at panel boundaries.
  double dmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
  for (int j = 0; j < src.M; ++j) {
    dmin = std::min(dmin, (src.points[j] - x).norm());
    wmax = std::max(wmax, src.weights[j]);
  }
  double sum = 0.0;
  // Lag l starts at (l - 1/2) dt for collocation times, so this splits lags cleanly.
  const double near_threshold = dmin >= 2.0 * wmax ? -1.0 : (near_lags - 0.75) * g.dt;
  for (int k = 0; k < g.Nt; ++k) {
    const double start = g.panel_start(k);
    if (!(start < t)) break;
    const double s0 = std::max(0.0, t - g.panel_end(k));
    const double s1 = t - start;
    const auto row = density.row(k);
    if (s0 < near_threshold) {
      for (int j = 0; j < src.M; ++j) {
        if (row(j) == 0.0) continue;
        sum += row(j) * integrate(*panel_rule[j], [&](const Point& y) { return v_kernel(x, y, s0, s1); });
      }
    } else {
      for (int j = 0; j < src.M; ++j) {
        if (row(j) == 0.0) continue;
        sum += row(j) * v_kernel(x, src.points[j], s0, s1) * src.weights[j];
      }
    }
  }
  return sum;
}

}  // namespace

struct SingleLayerEvaluator::Rules {
  std::vector<PanelRules> panels;
};

CausalOperator::CausalOperator(int rows, int cols, int lags)
    : rows_(rows), cols_(cols), blocks_(lags, Eigen::MatrixXd::Zero(rows, cols)) {}

PanelMatrix CausalOperator::apply(const PanelMatrix& in) const {
  if (in.cols() != cols_) throw InvalidArgument("potentials", "operator/density size mismatch");
  const int Nt = static_cast<int>(in.rows());
  PanelMatrix out = PanelMatrix::Zero(Nt, rows_);
  for (int k = 0; k < Nt; ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(rows_);
    for (int lag = 0; lag <= k && lag < lags(); ++lag) {
      acc.noalias() += blocks_[lag] * in.row(k - lag).transpose();
    }
    out.row(k) = acc.transpose();
  }
  return out;
}

Eigen::VectorXd CausalOperator::history(const PanelMatrix& in, int k) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(rows_);
  for (int lag = 1; lag <= k && lag < lags(); ++lag) {
    acc.noalias() += blocks_[lag] * in.row(k - lag).transpose();
  }
  return acc;
}

Eigen::MatrixXd CausalOperator::history(const std::vector<Eigen::MatrixXd>& in, int k) const {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows_, in.empty() ? 0 : in[0].cols());
  for (int lag = 1; lag <= k && lag < lags(); ++lag) acc.noalias() += blocks_[lag] * in[k - lag];
  return acc;
}

int resolve_near_lags(const SpaceTimeGrid& g, const std::vector<const NodeSet*>& nodes,
                      const QuadratureOptions& opts) {
  if (opts.near_lags >= 1) return opts.near_lags;
  double h_max = 0.0;
  for (const auto* n : nodes) h_max = std::max(h_max, n->max_spacing());
  const double target = opts.near_lag_factor * h_max * h_max;
  int lags = 1;
  while (lags < g.Nt && lag_interval(g, lags).first < target * (1.0 - 1e-12)) ++lags;
  return lags;
}

CausalOperator assemble_V(const NodeSet& curve, const SpaceTimeGrid& g, int near_lags,
                          const QuadratureOptions& opts) {
  return assemble_self(curve, g, near_lags, opts, SelfKind::V);
}

CausalOperator assemble_Wstar(const NodeSet& curve, const SpaceTimeGrid& g, int near_lags,
                              const QuadratureOptions& opts) {
  return assemble_self(curve, g, near_lags, opts, SelfKind::Wstar);
}

CausalOperator assemble_cross(const NodeSet& source, const NodeSet& target, const SpaceTimeGrid& g,
                              CrossMode mode, int near_lags, const QuadratureOptions& opts) {
  // Disjointness on the node sets: no target node on the source curve, and all
  // of them on one side of it. The admissibility gate certifies the curves.
  const auto poly = source.curve.sample(std::max(4 * source.M, 256));
  const bool first_inside = geometry::winding_number(poly, target.points.front()) != 0;
  for (const auto& x : target.points) {
    if (geometry::polygon_distance(poly, x) < 1e-12 || (geometry::winding_number(poly, x) != 0) != first_inside) {
      throw InvalidArgument("potentials", "source and target curves intersect");
    }
  }
  CausalOperator op(target.M, source.M, g.Nt);
  const auto rules = build_rules(source, opts, false);
  parallel_for(0, target.M, [&](int i) {
    const Point& xi = target.points[i];
    const Point& ni = target.normals[i];
    for (int lag = 0; lag < g.Nt; ++lag) {
      const auto [s0, s1] = lag_interval(g, lag);
      auto& B = op.block(lag);
      for (int j = 0; j < source.M; ++j) {
        double value;
        if (mode == CrossMode::Trace) {
          value = lag < near_lags
                      ? integrate(rules[j].plain, [&](const Point& y) { return v_kernel(xi, y, s0, s1); })
                      : v_kernel(xi, source.points[j], s0, s1) * source.weights[j];
        } else {
          value = lag < near_lags
                      ? integrate(rules[j].plain, [&](const Point& y) { return w_kernel(xi, ni, y, s0, s1); })
                      : w_kernel(xi, ni, source.points[j], s0, s1) * source.weights[j];
        }
        B(i, j) = value;
      }
    }
  });
  return op;
}

OuterOperators assemble_outer(const NodeSet& outer, const SpaceTimeGrid& g, int near_lags,
                              const QuadratureOptions& opts) {
  OuterOperators o{g, outer, near_lags, opts, {}, {}};
  o.V = assemble_V(outer, g, near_lags, opts);
  o.Wstar = assemble_Wstar(outer, g, near_lags, opts);
  return o;
}

LayerOperatorSet assemble_operators(const OuterOperators& outer, const NodeSet& inner) {
  auto g = outer.grid;
  g.M_outer = outer.outer.M;
  g.M_inner = inner.M;
  const int near = outer.near_lags;
  const auto& o = outer.options;
  LayerOperatorSet ops{g, outer.outer, inner, near, o, {}, {}, {}, {}, {}, {}, {}, {}};
  ops.V_outer = outer.V;
  ops.Wstar_outer = outer.Wstar;
  ops.V_inner = assemble_V(inner, g, near, o);
  ops.Wstar_inner = assemble_Wstar(inner, g, near, o);
  ops.trace_inner_on_outer = assemble_cross(inner, outer.outer, g, CrossMode::Trace, near, o);
  ops.normal_inner_on_outer = assemble_cross(inner, outer.outer, g, CrossMode::NormalDerivative, near, o);
  ops.trace_outer_on_inner = assemble_cross(outer.outer, inner, g, CrossMode::Trace, near, o);
  ops.normal_outer_on_inner = assemble_cross(outer.outer, inner, g, CrossMode::NormalDerivative, near, o);
  return ops;
}

LayerOperatorSet assemble_operators(const NodeSet& outer, const NodeSet& inner, const SpaceTimeGrid& g,
                                    const QuadratureOptions& opts) {
  const int near = resolve_near_lags(g, {&outer, &inner}, opts);
  return assemble_operators(assemble_outer(outer, g, near, opts), inner);
}

double single_layer_at(const NodeSet& source, const SpaceTimeGrid& g, const PanelMatrix& density, double t,
                       const Point& x, int near_lags, const QuadratureOptions& opts) {
  return SingleLayerEvaluator(source, g, density, near_lags, opts)(t, x);
}

SingleLayerEvaluator::SingleLayerEvaluator(const NodeSet& source, const SpaceTimeGrid& g, PanelMatrix density,
                                           int near_lags, const QuadratureOptions& opts)
    : source_(source),
      grid_(g),
      density_(std::move(density)),
      near_lags_(near_lags),
      options_(opts),
      rules_(std::make_shared<const Rules>(Rules{build_rules(source, opts, false)})) {
  if (density_.rows() != g.Nt || density_.cols() != source.M) {
    throw InvalidArgument("potentials", "density shape does not match the grid");
  }
}

double SingleLayerEvaluator::operator()(double t, const Point& x) const {
  return single_layer_impl(source_, rules_->panels, grid_, density_, t, x, near_lags_, options_);
}

FieldEvaluator::FieldEvaluator(const LayerOperatorSet& ops, PanelMatrix mu, PanelMatrix eta)
    : outer_layer_(ops.outer, ops.grid, std::move(mu), ops.near_lags, ops.options),
      inner_layer_(ops.inner, ops.grid, std::move(eta), ops.near_lags, ops.options) {
  const double ds = std::max(ops.outer.max_spacing(), ops.inner.max_spacing());
  delta_eval_ = 2.0 * std::max(ds, std::sqrt(ops.grid.dt));
  outer_poly_ = ops.outer.curve.sample(8 * ops.outer.M);
  inner_poly_ = ops.inner.curve.sample(8 * ops.inner.M);
}

double FieldEvaluator::boundary_distance(const Point& x) const {
  return std::min(geometry::polygon_distance(outer_poly_, x), geometry::polygon_distance(inner_poly_, x));
}

double FieldEvaluator::operator()(double t, const Point& x) const {
  const double dist = boundary_distance(x);
  if (dist < delta_eval_) {
    throw InvalidArgument("potentials", "evaluation point at distance " + std::to_string(dist) +
                                            " is closer to the boundary than delta_eval = " +
                                            std::to_string(delta_eval_));
  }
  return outer_layer_(t, x) + inner_layer_(t, x);
}

std::vector<double> FieldEvaluator::evaluate(const std::vector<std::pair<double, Point>>& points) const {
  std::vector<double> out(points.size());
  parallel_for(0, static_cast<int>(points.size()),
               [&](int p) { out[p] = (*this)(points[p].first, points[p].second); });
  return out;
}

void write_blocks(std::ostream& out, const std::vector<Eigen::MatrixXd>& blocks) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  out.write("CALB1", 5);
  const std::int64_t dims[3] = {static_cast<std::int64_t>(blocks.size()),
                                blocks.empty() ? 0 : static_cast<std::int64_t>(blocks[0].rows()),
                                blocks.empty() ? 0 : static_cast<std::int64_t>(blocks[0].cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (const auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        const double v = b(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  }
}

std::vector<Eigen::MatrixXd> read_blocks(std::istream& in) {
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, "CALB1", 5) != 0) {
    throw InvalidArgument("potentials", "missing CALB1 header");
  }
  std::int64_t dims[3];
  if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims)) || dims[0] < 0 || dims[1] < 0 || dims[2] < 0) {
    throw InvalidArgument("potentials", "truncated CALB1 dimensions");
  }
  std::vector<Eigen::MatrixXd> blocks(dims[0], Eigen::MatrixXd(dims[1], dims[2]));
  for (auto& b : blocks)
    for (Eigen::Index i = 0; i < b.rows(); ++i)
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        double v;
        if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw InvalidArgument("potentials", "truncated CALB1 data");
        b(i, j) = v;
      }
  return blocks;
}

}  // namespace calheat::potentials
