#include "calheat/nonlinear_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "calheat/error.hpp"

namespace calheat::nonlinear {

double RobinNonlinearity::value(double t, const Point& x, double xi) const {
  double v = 0.0;
  for (int j = degree(); j >= 0; --j) v = v * xi + a[j](t) * b[j](x);
  return v;
}

double RobinNonlinearity::derivative(double t, const Point& x, double xi) const {
  double v = 0.0;
  for (int j = degree(); j >= 1; --j) v = v * xi + j * a[j](t) * b[j](x);
  return v;
}

RobinNonlinearity RobinNonlinearity::zero() {
  return {{[](double) { return 0.0; }}, {[](const Point&) { return 0.0; }}};
}

RobinNonlinearity RobinNonlinearity::linear_robin(double gamma) {
  auto one = [](const Point&) { return 1.0; };
  return {{[](double) { return 0.0; }, [gamma](double) { return -gamma; }}, {one, one}};
}

RobinNonlinearity RobinNonlinearity::quadratic_benchmark() {
  auto one = [](const Point&) { return 1.0; };
  return {{[](double) { return 0.0; }, [](double t) { return t; }, [](double) { return -0.1; }}, {one, one, one}};
}

double NonlinearityTable::value(int k, int i, double xi) const {
  double v = 0.0;
  for (int j = degree(); j >= 0; --j) v = v * xi + coeff[j](k, i);
  return v;
}

double NonlinearityTable::derivative(int k, int i, double xi) const {
  double v = 0.0;
  for (int j = degree(); j >= 1; --j) v = v * xi + j * coeff[j](k, i);
  return v;
}

void NonlinearityTable::validate(const grid::SpaceTimeGrid& g, int M_inner) const {
  if (coeff.empty()) throw InvalidArgument("nonlinear_solver", "nonlinearity needs at least one coefficient");
  for (const auto& c : coeff) {
    if (c.rows() != g.Nt || c.cols() != M_inner) {
      throw InvalidArgument("nonlinear_solver", "coefficient table does not match the grid");
    }
    if (!c.allFinite()) throw InvalidArgument("nonlinear_solver", "coefficient table must be finite");
  }
}

NonlinearityTable tabulate(const RobinNonlinearity& G, const grid::SpaceTimeGrid& g, const grid::NodeSet& inner,
                           const geometry::BoundaryCurve& outer) {
  if (G.a.empty() || G.a.size() != G.b.size()) {
    throw InvalidArgument("nonlinear_solver", "nonlinearity needs matching a_j and b_j");
  }
  const auto poly = outer.sample(std::max(1024, 8 * inner.M));
  for (int i = 0; i < inner.M; ++i) {
    if (geometry::winding_number(poly, inner.points[i]) == 0) {
      throw InvalidArgument("nonlinear_solver", "image node " + std::to_string(i) + " lies outside the outer domain");
    }
    if (std::abs(G.value(0.0, inner.points[i], 0.0)) > 1e-14) {
      throw InvalidArgument("nonlinear_solver", "G(0, x, 0) must vanish");
    }
  }
  NonlinearityTable table;
  for (int j = 0; j <= G.degree(); ++j) {
    PanelMatrix c(g.Nt, inner.M);
    for (int k = 0; k < g.Nt; ++k) {
      const double ak = G.a[j](g.time(k));
      for (int i = 0; i < inner.M; ++i) c(k, i) = ak * G.b[j](inner.points[i]);
    }
    table.coeff.push_back(std::move(c));
  }
  table.validate(g, inner.M);
  return table;
}

PanelMatrix eval_N_G(const NonlinearityTable& G, const PanelMatrix& u) {
  PanelMatrix out(u.rows(), u.cols());
  for (Eigen::Index k = 0; k < u.rows(); ++k)
    for (Eigen::Index i = 0; i < u.cols(); ++i) out(k, i) = G.value(static_cast<int>(k), static_cast<int>(i), u(k, i));
  return out;
}

Densities residual_M(const LayerOperatorSet& ops, const NonlinearityTable& G, const PanelMatrix& f,
                     const Densities& d) {
  G.validate(ops.grid, ops.inner.M);
  const Densities lin = linear::apply_Jbeta(ops, PanelMatrix::Zero(ops.grid.Nt, ops.inner.M), d);
  const linear::Traces tr = linear::traces(ops, d);
  return {lin.mu - f, lin.eta - eval_N_G(G, tr.inner)};
}

Densities jacobian_apply(const LayerOperatorSet& ops, const NonlinearityTable& G, const Densities& at,
                         const Densities& direction) {
  const PanelMatrix u = linear::traces(ops, at).inner;
  PanelMatrix beta(u.rows(), u.cols());
  for (Eigen::Index k = 0; k < u.rows(); ++k)
    for (Eigen::Index i = 0; i < u.cols(); ++i)
      beta(k, i) = G.derivative(static_cast<int>(k), static_cast<int>(i), u(k, i));
  return linear::apply_Jbeta(ops, beta, direction);
}

double max_norm(const Densities& r) {
  double m = 0.0;
  if (r.mu.size()) m = std::max(m, r.mu.cwiseAbs().maxCoeff());
  if (r.eta.size()) m = std::max(m, r.eta.cwiseAbs().maxCoeff());
  return m;
}

int NonlinearState::max_iterations() const {
  int m = 0;
  for (std::size_t k = 0; k < residual_history.size(); ++k) m = std::max(m, iterations(static_cast<int>(k)));
  return m;
}

NonlinearState newton_solve(const LayerOperatorSet& ops, const NonlinearityTable& G, const PanelMatrix& f,
                            const Densities& initial, const NewtonOptions& opts) {
  const auto& g = ops.grid;
  const int Mo = ops.outer.M, Mi = ops.inner.M;
  G.validate(g, Mi);
  if (f.rows() != g.Nt || f.cols() != Mo) throw InvalidArgument("nonlinear_solver", "f does not match the grid");
  if (initial.mu.rows() != g.Nt || initial.mu.cols() != Mo || initial.eta.rows() != g.Nt || initial.eta.cols() != Mi) {
    throw InvalidArgument("nonlinear_solver", "initial densities do not match the grid");
  }
  NonlinearState s;
  s.densities = Densities::zeros(g);
  s.residual_history.resize(g.Nt);
  auto& d = s.densities;

  Eigen::MatrixXd A_out(Mo, Mo + Mi), A_nrm(Mi, Mo + Mi), A_tr(Mi, Mo + Mi);
  A_out << ops.Wstar_outer.block(0), ops.normal_inner_on_outer.block(0);
  A_out.leftCols(Mo).diagonal().array() += 0.5;
  A_nrm << ops.normal_outer_on_inner.block(0), ops.Wstar_inner.block(0);
  A_nrm.rightCols(Mi).diagonal().array() -= 0.5;
  A_tr << ops.trace_outer_on_inner.block(0), ops.V_inner.block(0);

  for (int k = 0; k < g.Nt; ++k) {
    const Eigen::VectorXd h_out =
        ops.Wstar_outer.history(d.mu, k) + ops.normal_inner_on_outer.history(d.eta, k) - f.row(k).transpose();
    const Eigen::VectorXd h_nrm = ops.normal_outer_on_inner.history(d.mu, k) + ops.Wstar_inner.history(d.eta, k);
    const Eigen::VectorXd h_tr = ops.trace_outer_on_inner.history(d.mu, k) + ops.V_inner.history(d.eta, k);
    Eigen::VectorXd x(Mo + Mi);
    x << initial.mu.row(k).transpose(), initial.eta.row(k).transpose();
    auto& hist = s.residual_history[k];
    for (int it = 0;; ++it) {
      const Eigen::VectorXd tr = A_tr * x + h_tr;
      Eigen::VectorXd r(Mo + Mi);
      r.head(Mo) = A_out * x + h_out;
      r.tail(Mi) = A_nrm * x + h_nrm;
      for (int i = 0; i < Mi; ++i) r(Mo + i) -= G.value(k, i, tr(i));
      const double nr = r.cwiseAbs().maxCoeff();
      if (!std::isfinite(nr)) throw SolverError("nonlinear_solver", "non-finite residual at panel " + std::to_string(k));
      hist.push_back(nr);
      if (nr < opts.tol) break;
      if (it == opts.max_iter) {
        s.failed_panel = k;
        d.mu.row(k) = x.head(Mo).transpose();
        d.eta.row(k) = x.tail(Mi).transpose();
        return s;
      }
      Eigen::VectorXd beta(Mi);
      for (int i = 0; i < Mi; ++i) beta(i) = G.derivative(k, i, tr(i));
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(linear::step_matrix(ops, beta));
      const double rc = lu.rcond();
      if (!std::isfinite(rc) || rc < opts.min_rcond) {
        throw SolverError("nonlinear_solver", "singular Jacobian at panel " + std::to_string(k) + " (rcond " +
                                                  std::to_string(rc) + ")");
      }
      x -= lu.solve(r);
    }
    d.mu.row(k) = x.head(Mo).transpose();
    d.eta.row(k) = x.tail(Mi).transpose();
  }
  s.converged = true;
  return s;
}

std::vector<double> quadratic_constants(const std::vector<double>& history, double floor) {
  std::vector<double> c;
  for (std::size_t i = 0; i + 1 < history.size(); ++i) {
    if (history[i] > floor && history[i + 1] > floor) c.push_back(history[i + 1] / (history[i] * history[i]));
  }
  return c;
}

namespace {

ShapeSolve solve_shape(const FamilyContext& ctx, const ShapeMap& phi, const Densities* warm, const std::string& where) {
  if (ctx.outer == nullptr) throw InvalidArgument("nonlinear_solver", "family context has no outer operators");
  const auto& outer = *ctx.outer;
  const double clearance = ctx.clearance >= 0 ? ctx.clearance : geometry::default_clearance(outer.outer.curve);
  const auto adm = geometry::check_admissible(phi, outer.outer.curve, clearance);
  if (!adm.passed()) {
    std::string why;
    for (const auto& f : adm.failures) why += (why.empty() ? "" : "; ") + f;
    throw InvalidArgument("nonlinear_solver", "inadmissible shape at " + where + ": " + why);
  }
  const auto inner = grid::discretize_image(phi, ctx.M_inner);
  const auto ops = potentials::assemble_operators(outer, inner);
  const auto table = tabulate(ctx.G, ops.grid, inner, outer.outer.curve);
  const Densities init = warm ? *warm : Densities::zeros(ops.grid);
  const auto state = newton_solve(ops, table, ctx.f, init, ctx.newton);
  if (!state.converged) {
    throw SolverError("nonlinear_solver",
                      "Newton did not converge at " + where + ", panel " + std::to_string(state.failed_panel));
  }
  ShapeSolve out;
  out.densities = state.densities;
  out.max_newton_iterations = state.max_iterations();
  if (!ctx.points.empty()) {
    potentials::FieldEvaluator field(ops, state.densities.mu, state.densities.eta);
    try {
      out.interior = field.evaluate(ctx.points);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("nonlinear_solver", "interior point too close to a boundary at " + where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<ShapeSolve> family_u_phi(const FamilyContext& ctx, const std::vector<ShapeMap>& path) {
  std::vector<ShapeSolve> out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    out.push_back(solve_shape(ctx, path[i], i == 0 ? nullptr : &out.back().densities,
                              "path index " + std::to_string(i)));
  }
  return out;
}

std::vector<double> richardson_ratios(const std::vector<std::vector<double>>& est) {
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  };
  std::vector<double> r;
  for (std::size_t i = 0; i + 2 < est.size(); ++i) r.push_back(dist(est[i], est[i + 1]) / dist(est[i + 1], est[i + 2]));
  return r;
}

ShapeDerivativeReport shape_derivative_fd(const FamilyContext& ctx, const ShapeMap& phi0,
                                          const geometry::ShapeDisplacement& direction,
                                          const std::vector<double>& eps) {
  ShapeDerivativeReport rep;
  rep.eps = eps;
  if (direction.is_zero()) {
    rep.derivative.assign(eps.size(), std::vector<double>(ctx.points.size(), 0.0));
    return rep;
  }
  const auto base = solve_shape(ctx, phi0, nullptr, "base shape");
  for (double e : eps) {
    const auto plus = solve_shape(ctx, phi0.perturbed(direction, e), &base.densities, "eps=+" + std::to_string(e));
    const auto minus = solve_shape(ctx, phi0.perturbed(direction, -e), &base.densities, "eps=-" + std::to_string(e));
    std::vector<double> d(ctx.points.size());
    for (std::size_t p = 0; p < d.size(); ++p) d[p] = (plus.interior[p] - minus.interior[p]) / (2.0 * e);
    rep.derivative.push_back(std::move(d));
  }
  rep.ratios = richardson_ratios(rep.derivative);
  return rep;
}

UniquenessReport local_uniqueness_check(const LayerOperatorSet& ops, const Densities& candidate,
                                        const Densities& reference, double tol_unique) {
  const auto tc = linear::traces(ops, candidate);
  const auto tr = linear::traces(ops, reference);
  UniquenessReport rep;
  rep.trace_distance =
      std::max((tc.outer - tr.outer).cwiseAbs().maxCoeff(), (tc.inner - tr.inner).cwiseAbs().maxCoeff());
  rep.density_distance = std::max((candidate.mu - reference.mu).cwiseAbs().maxCoeff(),
                                  (candidate.eta - reference.eta).cwiseAbs().maxCoeff());
  rep.agrees = rep.trace_distance < tol_unique && rep.density_distance < tol_unique;
  return rep;
}

}  // namespace calheat::nonlinear
