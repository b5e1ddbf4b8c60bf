#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "calheat/potentials.hpp"

namespace calheat::linear {

using grid::SpaceTimeGrid;
using potentials::LayerOperatorSet;

/// Density pair: mu on the outer boundary, eta on the inner boundary (stored
/// on the reference parametrization of the hole).
struct Densities {
  PanelMatrix mu;
  PanelMatrix eta;

  static Densities zeros(const SpaceTimeGrid& g);
};

/// Outer Neumann datum f, inner Robin datum g and coefficient beta, all as
/// panel-by-node values. The inner condition reads
///   d_nu u - beta u = g   on the hole boundary (nu pointing into the annulus),
/// so the Robin problem d_nu u + gamma u = g has beta = -gamma.
struct LinearMixedProblem {
  PanelMatrix beta;  // Nt x M_inner
  PanelMatrix f;     // Nt x M_outer
  PanelMatrix g;     // Nt x M_inner

  static LinearMixedProblem from_gamma(const PanelMatrix& gamma, const PanelMatrix& f, const PanelMatrix& g);
  void validate(const SpaceTimeGrid& grid) const;
};

/// Residual rows of the coupled operator:
///   outer: (1/2 + W*_out) mu + dn(inner -> outer) eta
///   inner: (-1/2 + W*_in) eta + dn(outer -> inner) mu - beta (tr(outer -> inner) mu + V_in eta)
Densities apply_Jbeta(const LayerOperatorSet& ops, const PanelMatrix& beta, const Densities& d);

/// Boundary traces of u = v[mu] + v[eta] on both boundaries.
struct Traces {
  PanelMatrix outer;
  PanelMatrix inner;
};
Traces traces(const LayerOperatorSet& ops, const Densities& d);

/// The (M_outer + M_inner) square system of panel k for coefficient row beta_k.
Eigen::MatrixXd step_matrix(const LayerOperatorSet& ops, const Eigen::VectorXd& beta_k);

struct MarchOptions {
  double min_rcond = 1e-13;
};

/// Panel-by-panel solve: at step k the zero-lag system is solved against the
/// data minus the history convolution. Throws SolverError when a step matrix
/// is numerically singular.
Densities march_solve(const LayerOperatorSet& ops, const LinearMixedProblem& p, const MarchOptions& opts = {});

/// Multi right-hand-side marching with g = 0: f_columns[k] is M_outer x R (the
/// outer datum of panel k for R problems). Returns per-panel density stacks.
struct StackedDensities {
  std::vector<Eigen::MatrixXd> mu;   // per panel, M_outer x R
  std::vector<Eigen::MatrixXd> eta;  // per panel, M_inner x R
};
StackedDensities march_solve_stacked(const LayerOperatorSet& ops, const PanelMatrix& beta,
                                     const std::vector<Eigen::MatrixXd>& f_columns,
                                     const MarchOptions& opts = {});

/// Dense solve of the whole space-time block system at once. Test oracle for
/// small grids.
Densities global_solve(const LayerOperatorSet& ops, const LinearMixedProblem& p);

/// Max-norm of J_beta(d) minus the data, over both rows.
double system_residual(const LayerOperatorSet& ops, const LinearMixedProblem& p, const Densities& d);

/// Reciprocal condition estimate of the first step matrix (1-norm).
double step_rcond(const LayerOperatorSet& ops, const Eigen::VectorXd& beta_k);

/// CSV `panel,node,boundary,value` with boundary `outer` or `inner`.
void write_trace_csv(std::ostream& out, const PanelMatrix& outer, const PanelMatrix& inner);

}  // namespace calheat::linear
