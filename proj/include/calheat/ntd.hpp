#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "calheat/linear_solver.hpp"

namespace calheat::ntd {

using geometry::Point;
using linear::LayerOperatorSet;

/// Neumann-to-Dirichlet map f -> u|outer of the linear mixed problem with
/// d_nu u + gamma u = 0 on the hole. Stored as lag blocks when gamma does not
/// depend on time, otherwise as the full block lower-triangular matrix.
class NtDOperator {
 public:
  NtDOperator() = default;
  /// Toeplitz form: blocks[l] maps f on panel k - l to u on panel k.
  static NtDOperator from_lags(std::vector<Eigen::MatrixXd> blocks);
  /// General form: dense (Nt M) x (Nt M) matrix, panel-major.
  static NtDOperator from_dense(int Nt, int M, Eigen::MatrixXd dense);

  bool toeplitz() const { return toeplitz_; }
  int panels() const { return Nt_; }
  int nodes() const { return M_; }
  const std::vector<Eigen::MatrixXd>& lag_blocks() const { return blocks_; }

  /// Block mapping source panel kp to target panel k (zero for kp > k).
  Eigen::MatrixXd block(int k, int kp) const;
  Eigen::MatrixXd dense() const;
  PanelMatrix apply(const PanelMatrix& f) const;

 private:
  bool toeplitz_ = true;
  int Nt_ = 0, M_ = 0;
  std::vector<Eigen::MatrixXd> blocks_;
  Eigen::MatrixXd dense_;
};

/// Column-impulse assembly: one stacked march over all unit Neumann impulses,
/// sharing the step factorization. gamma is Nt x M_inner at the image nodes.
NtDOperator assemble_ntd(const LayerOperatorSet& ops, const PanelMatrix& gamma,
                         const linear::MarchOptions& opts = {});

/// gamma(t, x) sampled at the collocation times and the image nodes.
PanelMatrix sample_gamma(const std::function<double(double, const Point&)>& gamma, const grid::SpaceTimeGrid& g,
                         const grid::NodeSet& inner);

/// Outer trace of the march_solve solution for datum f (g = 0): the direct path.
PanelMatrix direct_trace(const LayerOperatorSet& ops, const PanelMatrix& gamma, const PanelMatrix& f);

/// CALB1 dump: lag blocks, or a single dense block for the general form.
void write_ntd_blocks(std::ostream& out, const NtDOperator& op);
/// CSV `target_panel,source_panel,frobenius,max_abs` over the nonzero blocks.
void write_block_norms_csv(std::ostream& out, const NtDOperator& op);

struct SensitivityInputs {
  const potentials::OuterOperators* outer = nullptr;
  geometry::ShapeMap phi0;
  int M_inner = 32;
  std::function<double(double, const Point&)> gamma0;
  geometry::ShapeDisplacement h_phi;
  std::function<double(double, const Point&)> h_gamma;  // empty means zero
  double clearance = -1;
};

struct SensitivityReport {
  std::vector<double> eps;
  std::vector<Eigen::MatrixXd> derivative;  // dense central differences per eps
  std::vector<double> ratios;
};

/// Central differences of the dense NtD matrix along (h_phi, h_gamma).
SensitivityReport ntd_sensitivity(const SensitivityInputs& in, const std::vector<double>& eps);

/// Assembles NtD for a shape and gamma function (admissibility-checked).
NtDOperator assemble_for_shape(const potentials::OuterOperators& outer, const geometry::ShapeMap& phi, int M_inner,
                               const std::function<double(double, const Point&)>& gamma, double clearance = -1);

}  // namespace calheat::ntd
