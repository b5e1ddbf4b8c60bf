#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "calheat/grid.hpp"

namespace calheat::potentials {

using grid::NodeSet;
using grid::SpaceTimeGrid;

/// Causal space-time operator with convolution structure: the block mapping
/// panel k' to panel k depends only on the lag k - k' and vanishes for k' > k.
class CausalOperator {
 public:
  CausalOperator() = default;
  CausalOperator(int rows, int cols, int lags);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int lags() const { return static_cast<int>(blocks_.size()); }

  Eigen::MatrixXd& block(int lag) { return blocks_[lag]; }
  const Eigen::MatrixXd& block(int lag) const { return blocks_[lag]; }

  /// out[k] = sum_{l <= k} B^l in[k - l]; in is Nt x cols, out is Nt x rows.
  PanelMatrix apply(const PanelMatrix& in) const;
  /// sum_{l = 1..k} B^l in[k - l], the contribution of panels before k.
  Eigen::VectorXd history(const PanelMatrix& in, int k) const;
  /// Same for a stack of right-hand sides: history of columns stored per panel.
  Eigen::MatrixXd history(const std::vector<Eigen::MatrixXd>& in, int k) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Eigen::MatrixXd> blocks_;
};

/// Quadrature controls. Lags below `near_lags` are integrated panel by panel
/// (density constant on each arc panel) with Gauss rules graded toward the
/// target; later lags use the nodal trapezoidal rule, which is spectrally
/// accurate once lag * dt is comparable to the squared node spacing.
struct QuadratureOptions {
  int near_lags = -1;              // -1 resolves automatically
  double near_lag_factor = 0.75;   // auto: smallest l >= 1 whose lag interval starts past factor h_max^2
  int gauss_order = 8;
  int graded_levels = 10;
};

/// Resolves `near_lags` from the largest node spacing of the given node sets.
int resolve_near_lags(const SpaceTimeGrid& g, const std::vector<const NodeSet*>& nodes,
                      const QuadratureOptions& opts);

/// Range [s0, s1] of t - tau over the panel lag l behind a collocation time.
inline std::pair<double, double> lag_interval(const SpaceTimeGrid& g, int lag) {
  return {lag == 0 ? 0.0 : (lag - 0.5) * g.dt, (lag + 0.5) * g.dt};
}

/// Trace of the single layer potential on its own curve. The zero-lag diagonal
/// uses log-singularity subtraction with a closed-form local integral.
CausalOperator assemble_V(const NodeSet& curve, const SpaceTimeGrid& g, int near_lags,
                          const QuadratureOptions& opts = {});

/// Boundary operator W* (normal derivative of the kernel taken at the target).
CausalOperator assemble_Wstar(const NodeSet& curve, const SpaceTimeGrid& g, int near_lags,
                              const QuadratureOptions& opts = {});

enum class CrossMode { Trace, NormalDerivative };

/// Potential of a density on `source` evaluated (or normal-differentiated with
/// the target normals) at the nodes of a disjoint `target` curve.
CausalOperator assemble_cross(const NodeSet& source, const NodeSet& target, const SpaceTimeGrid& g,
                              CrossMode mode, int near_lags, const QuadratureOptions& opts = {});

/// Operators on the fixed outer boundary; reusable across shapes.
struct OuterOperators {
  SpaceTimeGrid grid;
  NodeSet outer;
  int near_lags = 1;
  QuadratureOptions options;
  CausalOperator V;
  CausalOperator Wstar;
};

OuterOperators assemble_outer(const NodeSet& outer, const SpaceTimeGrid& g, int near_lags,
                              const QuadratureOptions& opts = {});

/// Everything the coupled outer/inner boundary system needs.
struct LayerOperatorSet {
  SpaceTimeGrid grid;
  NodeSet outer;
  NodeSet inner;
  int near_lags = 1;
  QuadratureOptions options;
  CausalOperator V_outer, Wstar_outer;
  CausalOperator V_inner, Wstar_inner;
  CausalOperator trace_inner_on_outer, normal_inner_on_outer;
  CausalOperator trace_outer_on_inner, normal_outer_on_inner;
};

LayerOperatorSet assemble_operators(const OuterOperators& outer, const NodeSet& inner);
LayerOperatorSet assemble_operators(const NodeSet& outer, const NodeSet& inner, const SpaceTimeGrid& g,
                                    const QuadratureOptions& opts = {});

/// Single layer potential of a density on `source` at an arbitrary space-time
/// point (t, x) off the curve. Panels at lags below near_lags are integrated
/// with Gauss rules, graded toward the closest point when x is within 1.5 arc
/// panels of the curve.
double single_layer_at(const NodeSet& source, const SpaceTimeGrid& g, const PanelMatrix& density,
                       double t, const geometry::Point& x, int near_lags, const QuadratureOptions& opts = {});

/// Same evaluation with the panel quadrature precomputed once; cheap to call
/// repeatedly for one density.
class SingleLayerEvaluator {
 public:
  SingleLayerEvaluator(const NodeSet& source, const SpaceTimeGrid& g, PanelMatrix density, int near_lags,
                       const QuadratureOptions& opts = {});
  double operator()(double t, const geometry::Point& x) const;

 private:
  struct Rules;
  NodeSet source_;
  SpaceTimeGrid grid_;
  PanelMatrix density_;
  int near_lags_;
  QuadratureOptions options_;
  std::shared_ptr<const Rules> rules_;
};

/// Representation u = v[mu] + v[eta] in the perforated domain.
class FieldEvaluator {
 public:
  FieldEvaluator(const LayerOperatorSet& ops, PanelMatrix mu, PanelMatrix eta);

  /// Minimum distance from both boundaries accepted by operator().
  double delta_eval() const { return delta_eval_; }
  void set_delta_eval(double d) { delta_eval_ = d; }

  /// u(t, x); throws InvalidArgument when x is closer than delta_eval to a boundary.
  double operator()(double t, const geometry::Point& x) const;
  std::vector<double> evaluate(const std::vector<std::pair<double, geometry::Point>>& points) const;

  double boundary_distance(const geometry::Point& x) const;

 private:
  SingleLayerEvaluator outer_layer_, inner_layer_;
  double delta_eval_;
  std::vector<geometry::Point> outer_poly_, inner_poly_;
};

/// Binary lag-block dump: "CALB1", int64 lags, rows, cols, then row-major
/// blocks by lag as little-endian float64.
void write_blocks(std::ostream& out, const std::vector<Eigen::MatrixXd>& blocks);
std::vector<Eigen::MatrixXd> read_blocks(std::istream& in);

}  // namespace calheat::potentials
