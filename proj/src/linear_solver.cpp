#include "calheat/linear_solver.hpp"

#include <ostream>

#include <Eigen/LU>

#include "calheat/error.hpp"
#include "calheat/parallel.hpp"

namespace calheat::linear {

namespace {

void check_shape(const PanelMatrix& m, int rows, int cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidArgument("linear_solver", std::string(name) + " has shape " + std::to_string(m.rows()) + "x" +
                                               std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                                               "x" + std::to_string(cols));
  }
}

Eigen::PartialPivLU<Eigen::MatrixXd> factor(const Eigen::MatrixXd& A, double min_rcond, int panel) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const double rc = lu.rcond();
  if (!std::isfinite(rc) || rc < min_rcond) {
    throw SolverError("linear_solver", "step matrix of panel " + std::to_string(panel) +
                                           " is numerically singular (rcond " + std::to_string(rc) + ")");
  }
  return lu;
}

}  // namespace

Densities Densities::zeros(const SpaceTimeGrid& g) {
  return {PanelMatrix::Zero(g.Nt, g.M_outer), PanelMatrix::Zero(g.Nt, g.M_inner)};
}

LinearMixedProblem LinearMixedProblem::from_gamma(const PanelMatrix& gamma, const PanelMatrix& f,
                                                  const PanelMatrix& g) {
  return {-gamma, f, g};
}

void LinearMixedProblem::validate(const SpaceTimeGrid& grid) const {
  check_shape(beta, grid.Nt, grid.M_inner, "beta");
  check_shape(f, grid.Nt, grid.M_outer, "f");
  check_shape(g, grid.Nt, grid.M_inner, "g");
  if (!beta.allFinite() || !f.allFinite() || !g.allFinite()) {
    throw InvalidArgument("linear_solver", "problem data must be finite");
  }
}

Densities apply_Jbeta(const LayerOperatorSet& ops, const PanelMatrix& beta, const Densities& d) {
  check_shape(beta, ops.grid.Nt, ops.inner.M, "beta");
  Densities r;
  r.mu = 0.5 * d.mu + ops.Wstar_outer.apply(d.mu) + ops.normal_inner_on_outer.apply(d.eta);
  const PanelMatrix tr = ops.trace_outer_on_inner.apply(d.mu) + ops.V_inner.apply(d.eta);
  r.eta = -0.5 * d.eta + ops.Wstar_inner.apply(d.eta) + ops.normal_outer_on_inner.apply(d.mu) -
          PanelMatrix(beta.cwiseProduct(tr));
  return r;
}

Traces traces(const LayerOperatorSet& ops, const Densities& d) {
  return {ops.V_outer.apply(d.mu) + ops.trace_inner_on_outer.apply(d.eta),
          ops.trace_outer_on_inner.apply(d.mu) + ops.V_inner.apply(d.eta)};
}

Eigen::MatrixXd step_matrix(const LayerOperatorSet& ops, const Eigen::VectorXd& beta_k) {
  const int Mo = ops.outer.M, Mi = ops.inner.M;
  Eigen::MatrixXd A(Mo + Mi, Mo + Mi);
  A.topLeftCorner(Mo, Mo) = ops.Wstar_outer.block(0);
  A.topLeftCorner(Mo, Mo).diagonal().array() += 0.5;
  A.topRightCorner(Mo, Mi) = ops.normal_inner_on_outer.block(0);
  A.bottomLeftCorner(Mi, Mo) =
      ops.normal_outer_on_inner.block(0) - beta_k.asDiagonal() * ops.trace_outer_on_inner.block(0);
  A.bottomRightCorner(Mi, Mi) = ops.Wstar_inner.block(0) - beta_k.asDiagonal() * ops.V_inner.block(0);
  A.bottomRightCorner(Mi, Mi).diagonal().array() -= 0.5;
  return A;
}

double step_rcond(const LayerOperatorSet& ops, const Eigen::VectorXd& beta_k) {
  return Eigen::PartialPivLU<Eigen::MatrixXd>(step_matrix(ops, beta_k)).rcond();
}

Densities march_solve(const LayerOperatorSet& ops, const LinearMixedProblem& p, const MarchOptions& opts) {
  const auto& g = ops.grid;
  p.validate(g);
  const int Mo = ops.outer.M, Mi = ops.inner.M;
  Densities d = Densities::zeros(g);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::VectorXd factored_beta;
  for (int k = 0; k < g.Nt; ++k) {
    const Eigen::VectorXd beta_k = p.beta.row(k).transpose();
    if (k == 0 || beta_k != factored_beta) {
      lu = factor(step_matrix(ops, beta_k), opts.min_rcond, k);
      factored_beta = beta_k;
    }
    const Eigen::VectorXd h_out = ops.Wstar_outer.history(d.mu, k) + ops.normal_inner_on_outer.history(d.eta, k);
    const Eigen::VectorXd h_nrm = ops.normal_outer_on_inner.history(d.mu, k) + ops.Wstar_inner.history(d.eta, k);
    const Eigen::VectorXd h_tr = ops.trace_outer_on_inner.history(d.mu, k) + ops.V_inner.history(d.eta, k);
    Eigen::VectorXd rhs(Mo + Mi);
    rhs.head(Mo) = p.f.row(k).transpose() - h_out;
    rhs.tail(Mi) = p.g.row(k).transpose() - h_nrm + beta_k.cwiseProduct(h_tr);
    if (!rhs.allFinite()) throw SolverError("linear_solver", "non-finite history at panel " + std::to_string(k));
    const Eigen::VectorXd x = lu.solve(rhs);
    d.mu.row(k) = x.head(Mo).transpose();
    d.eta.row(k) = x.tail(Mi).transpose();
  }
  return d;
}

StackedDensities march_solve_stacked(const LayerOperatorSet& ops, const PanelMatrix& beta,
                                     const std::vector<Eigen::MatrixXd>& f_columns, const MarchOptions& opts) {
  const auto& g = ops.grid;
  check_shape(beta, g.Nt, ops.inner.M, "beta");
  if (static_cast<int>(f_columns.size()) != g.Nt) throw InvalidArgument("linear_solver", "need one f stack per panel");
  const int Mo = ops.outer.M, Mi = ops.inner.M;
  const Eigen::Index R = f_columns.empty() ? 0 : f_columns[0].cols();
  StackedDensities s;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  Eigen::VectorXd factored_beta;
  for (int k = 0; k < g.Nt; ++k) {
    if (f_columns[k].rows() != Mo || f_columns[k].cols() != R) {
      throw InvalidArgument("linear_solver", "inconsistent f stack at panel " + std::to_string(k));
    }
    const Eigen::VectorXd beta_k = beta.row(k).transpose();
    if (k == 0 || beta_k != factored_beta) {
      lu = factor(step_matrix(ops, beta_k), opts.min_rcond, k);
      factored_beta = beta_k;
    }
    Eigen::MatrixXd rhs(Mo + Mi, R);
    rhs.topRows(Mo) = f_columns[k];
    rhs.bottomRows(Mi).setZero();
    if (k > 0) {
      rhs.topRows(Mo) -= ops.Wstar_outer.history(s.mu, k) + ops.normal_inner_on_outer.history(s.eta, k);
      rhs.bottomRows(Mi) = -ops.normal_outer_on_inner.history(s.mu, k) - ops.Wstar_inner.history(s.eta, k) +
                           beta_k.asDiagonal() *
                               (ops.trace_outer_on_inner.history(s.mu, k) + ops.V_inner.history(s.eta, k));
    }
    Eigen::MatrixXd x(Mo + Mi, R);
    parallel_for(0, static_cast<int>(R), [&](int c) { x.col(c) = lu.solve(rhs.col(c)); });
    s.mu.push_back(x.topRows(Mo));
    s.eta.push_back(x.bottomRows(Mi));
  }
  return s;
}

Densities global_solve(const LayerOperatorSet& ops, const LinearMixedProblem& p) {
  const auto& g = ops.grid;
  p.validate(g);
  const int Mo = ops.outer.M, Mi = ops.inner.M, n = Mo + Mi, Nt = g.Nt;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Nt * n, Nt * n);
  Eigen::VectorXd b(Nt * n);
  for (int k = 0; k < Nt; ++k) {
    const Eigen::VectorXd beta_k = p.beta.row(k).transpose();
    b.segment(k * n, Mo) = p.f.row(k).transpose();
    b.segment(k * n + Mo, Mi) = p.g.row(k).transpose();
    for (int kp = 0; kp <= k; ++kp) {
      const int lag = k - kp;
      auto blk = A.block(k * n, kp * n, n, n);
      blk.topLeftCorner(Mo, Mo) = ops.Wstar_outer.block(lag);
      blk.topRightCorner(Mo, Mi) = ops.normal_inner_on_outer.block(lag);
      blk.bottomLeftCorner(Mi, Mo) =
          ops.normal_outer_on_inner.block(lag) - beta_k.asDiagonal() * ops.trace_outer_on_inner.block(lag);
      blk.bottomRightCorner(Mi, Mi) = ops.Wstar_inner.block(lag) - beta_k.asDiagonal() * ops.V_inner.block(lag);
      if (lag == 0) {
        blk.topLeftCorner(Mo, Mo).diagonal().array() += 0.5;
        blk.bottomRightCorner(Mi, Mi).diagonal().array() -= 0.5;
      }
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(lu.rcond() > 1e-15)) throw SolverError("linear_solver", "global system is numerically singular");
  const Eigen::VectorXd x = lu.solve(b);
  Densities d = Densities::zeros(g);
  for (int k = 0; k < Nt; ++k) {
    d.mu.row(k) = x.segment(k * n, Mo).transpose();
    d.eta.row(k) = x.segment(k * n + Mo, Mi).transpose();
  }
  return d;
}

double system_residual(const LayerOperatorSet& ops, const LinearMixedProblem& p, const Densities& d) {
  const Densities r = apply_Jbeta(ops, p.beta, d);
  return std::max((r.mu - p.f).cwiseAbs().maxCoeff(), (r.eta - p.g).cwiseAbs().maxCoeff());
}

void write_trace_csv(std::ostream& out, const PanelMatrix& outer, const PanelMatrix& inner) {
  out << "panel,node,boundary,value\n";
  out.precision(17);
  auto dump = [&](const PanelMatrix& m, const char* name) {
    for (Eigen::Index k = 0; k < m.rows(); ++k)
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << k << ',' << j << ',' << name << ',' << m(k, j) << '\n';
  };
  dump(outer, "outer");
  dump(inner, "inner");
}

}  // namespace calheat::linear
