#include "calheat/ntd.hpp"

#include <algorithm>
#include <ostream>

#include "calheat/error.hpp"

namespace calheat::ntd {

NtDOperator NtDOperator::from_lags(std::vector<Eigen::MatrixXd> blocks) {
  NtDOperator op;
  op.toeplitz_ = true;
  op.Nt_ = static_cast<int>(blocks.size());
  op.M_ = blocks.empty() ? 0 : static_cast<int>(blocks[0].rows());
  op.blocks_ = std::move(blocks);
  return op;
}

NtDOperator NtDOperator::from_dense(int Nt, int M, Eigen::MatrixXd dense) {
  if (dense.rows() != Nt * M || dense.cols() != Nt * M) throw InvalidArgument("ntd", "dense operator size mismatch");
  NtDOperator op;
  op.toeplitz_ = false;
  op.Nt_ = Nt;
  op.M_ = M;
  op.dense_ = std::move(dense);
  return op;
}

Eigen::MatrixXd NtDOperator::block(int k, int kp) const {
  if (kp > k) return Eigen::MatrixXd::Zero(M_, M_);
  if (toeplitz_) return blocks_[k - kp];
  return dense_.block(k * M_, kp * M_, M_, M_);
}

Eigen::MatrixXd NtDOperator::dense() const {
  if (!toeplitz_) return dense_;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(Nt_ * M_, Nt_ * M_);
  for (int k = 0; k < Nt_; ++k)
    for (int kp = 0; kp <= k; ++kp) D.block(k * M_, kp * M_, M_, M_) = blocks_[k - kp];
  return D;
}

PanelMatrix NtDOperator::apply(const PanelMatrix& f) const {
  if (f.rows() != Nt_ || f.cols() != M_) throw InvalidArgument("ntd", "datum does not match the operator");
  PanelMatrix u = PanelMatrix::Zero(Nt_, M_);
  for (int k = 0; k < Nt_; ++k) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(M_);
    for (int kp = 0; kp <= k; ++kp) {
      if (toeplitz_)
        acc.noalias() += blocks_[k - kp] * f.row(kp).transpose();
      else
        acc.noalias() += dense_.block(k * M_, kp * M_, M_, M_) * f.row(kp).transpose();
    }
    u.row(k) = acc.transpose();
  }
  return u;
}

NtDOperator assemble_ntd(const LayerOperatorSet& ops, const PanelMatrix& gamma, const linear::MarchOptions& opts) {
  const auto& g = ops.grid;
  const int Mo = ops.outer.M, Nt = g.Nt;
  if (gamma.rows() != Nt || gamma.cols() != ops.inner.M || !gamma.allFinite()) {
    throw InvalidArgument("ntd", "gamma must be finite with one row per panel and one column per inner node");
  }
  const PanelMatrix beta = -gamma;
  bool invariant = true;
  for (int k = 1; k < Nt && invariant; ++k) invariant = gamma.row(k) == gamma.row(0);

  // Impulses: Toeplitz needs only panel 0; otherwise every panel gets its own block of columns.
  const int sources = invariant ? 1 : Nt;
  const int R = sources * Mo;
  std::vector<Eigen::MatrixXd> f(Nt, Eigen::MatrixXd::Zero(Mo, R));
  for (int s = 0; s < sources; ++s) f[s].middleCols(s * Mo, Mo).setIdentity();
  const auto sol = linear::march_solve_stacked(ops, beta, f, opts);

  std::vector<Eigen::MatrixXd> u(Nt);
  for (int k = 0; k < Nt; ++k) {
    u[k] = ops.V_outer.history(sol.mu, k) + ops.trace_inner_on_outer.history(sol.eta, k) +
           ops.V_outer.block(0) * sol.mu[k] + ops.trace_inner_on_outer.block(0) * sol.eta[k];
  }
  if (invariant) return NtDOperator::from_lags(std::move(u));
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(Nt * Mo, Nt * Mo);
  for (int k = 0; k < Nt; ++k)
    for (int kp = 0; kp <= k; ++kp) D.block(k * Mo, kp * Mo, Mo, Mo) = u[k].middleCols(kp * Mo, Mo);
  return NtDOperator::from_dense(Nt, Mo, std::move(D));
}

PanelMatrix sample_gamma(const std::function<double(double, const Point&)>& gamma, const grid::SpaceTimeGrid& g,
                         const grid::NodeSet& inner) {
  PanelMatrix out(g.Nt, inner.M);
  for (int k = 0; k < g.Nt; ++k)
    for (int i = 0; i < inner.M; ++i) out(k, i) = gamma(g.time(k), inner.points[i]);
  return out;
}

PanelMatrix direct_trace(const LayerOperatorSet& ops, const PanelMatrix& gamma, const PanelMatrix& f) {
  const auto p = linear::LinearMixedProblem::from_gamma(gamma, f, PanelMatrix::Zero(ops.grid.Nt, ops.inner.M));
  return linear::traces(ops, linear::march_solve(ops, p)).outer;
}

void write_ntd_blocks(std::ostream& out, const NtDOperator& op) {
  if (op.toeplitz())
    potentials::write_blocks(out, op.lag_blocks());
  else
    potentials::write_blocks(out, {op.dense()});
}

void write_block_norms_csv(std::ostream& out, const NtDOperator& op) {
  out << "target_panel,source_panel,frobenius,max_abs\n";
  out.precision(17);
  for (int k = 0; k < op.panels(); ++k) {
    for (int kp = 0; kp <= k; ++kp) {
      if (op.toeplitz() && kp != 0) continue;
      const auto b = op.block(k, kp);
      out << k << ',' << kp << ',' << b.norm() << ',' << b.cwiseAbs().maxCoeff() << '\n';
    }
  }
}

NtDOperator assemble_for_shape(const potentials::OuterOperators& outer, const geometry::ShapeMap& phi, int M_inner,
                               const std::function<double(double, const Point&)>& gamma, double clearance) {
  const double c = clearance >= 0 ? clearance : geometry::default_clearance(outer.outer.curve);
  const auto adm = geometry::check_admissible(phi, outer.outer.curve, c);
  if (!adm.passed()) throw InvalidArgument("ntd", "inadmissible shape for NtD assembly");
  const auto inner = grid::discretize_image(phi, M_inner);
  const auto ops = potentials::assemble_operators(outer, inner);
  return assemble_ntd(ops, sample_gamma(gamma, ops.grid, inner));
}

SensitivityReport ntd_sensitivity(const SensitivityInputs& in, const std::vector<double>& eps) {
  if (in.outer == nullptr) throw InvalidArgument("ntd", "sensitivity needs outer operators");
  SensitivityReport rep;
  rep.eps = eps;
  const int n = in.outer->grid.Nt * in.outer->outer.M;
  if (in.h_phi.is_zero() && !in.h_gamma) {
    rep.derivative.assign(eps.size(), Eigen::MatrixXd::Zero(n, n));
    return rep;
  }
  auto at = [&](double e) {
    auto gamma = [&, e](double t, const Point& x) {
      return in.gamma0(t, x) + (in.h_gamma ? e * in.h_gamma(t, x) : 0.0);
    };
    return assemble_for_shape(*in.outer, in.phi0.perturbed(in.h_phi, e), in.M_inner, gamma, in.clearance).dense();
  };
  for (double e : eps) rep.derivative.push_back((at(e) - at(-e)) / (2.0 * e));
  for (std::size_t i = 0; i + 2 < rep.derivative.size(); ++i) {
    const double a = (rep.derivative[i] - rep.derivative[i + 1]).cwiseAbs().maxCoeff();
    const double b = (rep.derivative[i + 1] - rep.derivative[i + 2]).cwiseAbs().maxCoeff();
    rep.ratios.push_back(a / b);
  }
  return rep;
}

}  // namespace calheat::ntd
