#include "calheat/driver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "calheat/kernel.hpp"
#include "calheat/linear_solver.hpp"
#include "calheat/ntd.hpp"
#include "calheat/oracle.hpp"

namespace calheat::driver {

using config::Config;
using config::ConfigError;
using grid::NodeSet;
using grid::SpaceTimeGrid;
using linear::Densities;

namespace {

constexpr double kPi = std::numbers::pi;

double poly(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
  return v;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

geometry::BoundaryCurve load_curve(const Config& c, const std::string& key, const std::string& fallback,
                                   const std::map<std::string, geometry::BoundaryCurve>* library) {
  const std::string spec = c.get_string(key, fallback);
  if (library) {
    const auto it = library->find(spec);
    if (it != library->end()) return it->second;
  }
  return config::parse_curve_spec(spec, c.origin(), 0);
}

geometry::ShapeDisplacement parse_direction(const Config& c) {
  const auto words = c.get_string("shape_direction", "dilation 1");
  std::istringstream in(words);
  std::string kind;
  in >> kind;
  std::vector<double> v;
  for (double x; in >> x;) v.push_back(x);
  if (!in.eof()) throw ConfigError(c.origin(), 0, "`shape_direction`: bad number");
  if (kind == "dilation" && v.size() == 1) return geometry::ShapeDisplacement::dilation(v[0]);
  if (kind == "shift" && v.size() == 2) return geometry::ShapeDisplacement::shift({v[0], v[1]});
  if (kind == "rotation" && v.size() == 1) {
    geometry::ShapeDisplacement d;
    d.linear << 0.0, -v[0], v[0], 0.0;
    return d;
  }
  if (kind == "radial" && v.size() == 3 && v[0] >= 0 && v[0] == std::floor(v[0])) {
    return geometry::ShapeDisplacement::radial_mode(static_cast<int>(v[0]), v[1], v[2]);
  }
  throw ConfigError(c.origin(), 0,
                    "`shape_direction` must be `dilation r`, `shift vx vy`, `rotation w` or `radial k a b`");
}

struct Problem {
  SpaceTimeGrid grid;
  NodeSet outer, inner;
  potentials::LayerOperatorSet ops;
};

Problem build(const Setup& s, int Nt, int Mo, int Mi) {
  const auto g = grid::make_grid(s.T, Nt, Mo, Mi);
  auto outer = grid::discretize(s.outer, Mo);
  const auto phi = geometry::ShapeMap::identity(s.inner);
  const auto adm = geometry::check_admissible(phi, s.outer, geometry::default_clearance(s.outer));
  if (!adm.passed()) throw InvalidArgument("driver", "configured hole is not admissible inside the outer curve");
  auto inner = grid::discretize_image(phi, Mi);
  auto ops = potentials::assemble_operators(outer, inner, g, s.quadrature);
  return {g, std::move(outer), std::move(inner), std::move(ops)};
}

PanelMatrix sample_f(const Setup& s, const SpaceTimeGrid& g, const NodeSet& outer) {
  PanelMatrix f(g.Nt, outer.M);
  for (int k = 0; k < g.Nt; ++k)
    for (int j = 0; j < outer.M; ++j) f(k, j) = s.f(g.time(k), outer.points[j]);
  return f;
}

struct Writer {
  std::filesystem::path dir;
  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir / name);
    if (!out) throw InvalidArgument("driver", "cannot write " + (dir / name).string());
    out.precision(17);
    return out;
  }
};

void add(RunReport& r, std::string id, bool ok, std::string detail) {
  r.assertions.push_back({std::move(id), ok, std::move(detail)});
}

// Manufactured linear benchmark at one resolution; returns the relative trace error.
double manufactured_error(const Setup& s, int Nt, int M, Densities* out_d = nullptr, Problem* out_p = nullptr) {
  Problem p = build(s, Nt, M, M);
  const PanelMatrix gamma = PanelMatrix::Constant(Nt, M, s.gamma);
  const auto md = oracle::manufactured_data(oracle::ManufacturedField::source(s.x0), p.outer, p.inner, p.grid, gamma);
  const auto lp = linear::LinearMixedProblem::from_gamma(gamma, md.f, md.g);
  const auto d = linear::march_solve(p.ops, lp);
  const auto tr = linear::traces(p.ops, d);
  const double scale = std::max(md.trace_outer.cwiseAbs().maxCoeff(), md.trace_inner.cwiseAbs().maxCoeff());
  const double err = std::max((tr.outer - md.trace_outer).cwiseAbs().maxCoeff(),
                              (tr.inner - md.trace_inner).cwiseAbs().maxCoeff()) / scale;
  if (out_d) *out_d = d;
  if (out_p) *out_p = std::move(p);
  return err;
}

double fitted_order(const std::vector<int>& n, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double x = std::log(static_cast<double>(n[i])), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void write_densities(const Writer& w, const std::string& name, const Densities& d) {
  auto out = w.open(name);
  linear::write_trace_csv(out, d.mu, d.eta);
}

nonlinear::NonlinearState solve_nl(const Setup& s, const Problem& p, const Densities& init,
                                   nonlinear::NonlinearityTable* table_out = nullptr) {
  const auto table = nonlinear::tabulate(s.G, p.grid, p.inner, s.outer);
  const auto f = sample_f(s, p.grid, p.outer);
  auto st = nonlinear::newton_solve(p.ops, table, f, init, s.newton);
  if (table_out) *table_out = table;
  return st;
}

// Conditioning and regularity are reported, never asserted.
void add_diagnostics(RunReport& r, const Problem& p, const Densities& d, double gamma) {
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(p.inner.M, -gamma);
  add(r, "INFO-STEP-RCOND", true, "step matrix rcond " + fmt(linear::step_rcond(p.ops, beta)) + " (reported only)");
  add(r, "INFO-HOELDER", true,
      "density Hoelder-1/2 seminorms outer " + fmt(grid::hoelder_seminorm(d.mu, 0.5, p.grid, p.outer)) + ", inner " +
          fmt(grid::hoelder_seminorm(d.eta, 0.5, p.grid, p.inner)) + " (reported only)");
}

// ---------------------------------------------------------------- commands

void cmd_solve_linear(const Config& c, const Setup& s, const Writer& w, RunReport& r) {
  const std::string data = c.get_string("linear_data", "manufactured");
  if (data == "manufactured") {
    Densities d;
    Problem p = build(s, s.Nt, s.M_outer, s.M_inner);
    const PanelMatrix gamma = PanelMatrix::Constant(s.Nt, s.M_inner, s.gamma);
    const auto md =
        oracle::manufactured_data(oracle::ManufacturedField::source(s.x0), p.outer, p.inner, p.grid, gamma);
    const auto lp = linear::LinearMixedProblem::from_gamma(gamma, md.f, md.g);
    d = linear::march_solve(p.ops, lp);
    const auto tr = linear::traces(p.ops, d);
    const double scale = std::max(md.trace_outer.cwiseAbs().maxCoeff(), md.trace_inner.cwiseAbs().maxCoeff());
    const double err = std::max((tr.outer - md.trace_outer).cwiseAbs().maxCoeff(),
                                (tr.inner - md.trace_inner).cwiseAbs().maxCoeff()) / scale;
    const double res = linear::system_residual(p.ops, lp, d);
    write_densities(w, "densities.csv", d);
    auto out = w.open("traces.csv");
    linear::write_trace_csv(out, tr.outer, tr.inner);
    add(r, "LIN-SYSTEM-RESIDUAL", res < 1e-10, "max residual " + fmt(res));
    add(r, "LIN-MANUFACTURED-TRACE", err < 2e-2, "relative trace error " + fmt(err) + " (bound 2e-2)");
    add_diagnostics(r, p, d, s.gamma);
  } else if (data == "neumann") {
    Problem p = build(s, s.Nt, s.M_outer, s.M_inner);
    const PanelMatrix gamma = PanelMatrix::Constant(s.Nt, s.M_inner, s.gamma);
    const auto lp = linear::LinearMixedProblem::from_gamma(gamma, sample_f(s, p.grid, p.outer),
                                                           PanelMatrix::Zero(s.Nt, s.M_inner));
    const auto d = linear::march_solve(p.ops, lp);
    const auto tr = linear::traces(p.ops, d);
    write_densities(w, "densities.csv", d);
    auto out = w.open("traces.csv");
    linear::write_trace_csv(out, tr.outer, tr.inner);
    const double res = linear::system_residual(p.ops, lp, d);
    add(r, "LIN-SYSTEM-RESIDUAL", res < 1e-10, "max residual " + fmt(res));
    add_diagnostics(r, p, d, s.gamma);
    if (s.f.is_zero()) {
      const bool zero = (d.mu.array() == 0.0).all() && (d.eta.array() == 0.0).all();
      add(r, "LIN-ZERO-SOLUTION", zero, zero ? "densities exactly zero" : "nonzero densities for zero data");
    }
  } else {
    throw ConfigError(c.origin(), 0, "`linear_data` must be `manufactured` or `neumann`");
  }
}

void cmd_solve_nonlinear(const Setup& s, const Writer& w, RunReport& r) {
  Problem p = build(s, s.Nt, s.M_outer, s.M_inner);
  nonlinear::NonlinearityTable table;
  const auto st = solve_nl(s, p, Densities::zeros(p.grid), &table);
  {
    auto out = w.open("newton.csv");
    out << "panel,iteration,residual\n";
    for (std::size_t k = 0; k < st.residual_history.size(); ++k)
      for (std::size_t i = 0; i < st.residual_history[k].size(); ++i)
        out << k << ',' << i << ',' << st.residual_history[k][i] << '\n';
  }
  if (!st.converged) {
    throw SolverError("nonlinear_solver", "Newton did not reach tol_newton at panel " +
                                              std::to_string(st.failed_panel) + " (newton.csv has the history)");
  }
  add(r, "NL-CONVERGED", true, "all " + std::to_string(s.Nt) + " panels converged");
  write_densities(w, "densities.csv", st.densities);
  const auto tr = linear::traces(p.ops, st.densities);
  {
    auto out = w.open("traces.csv");
    linear::write_trace_csv(out, tr.outer, tr.inner);
  }
  const double res = nonlinear::max_norm(nonlinear::residual_M(p.ops, table, sample_f(s, p.grid, p.outer), st.densities));
  add(r, "NL-RESIDUAL", res < s.newton.tol, "independent residual " + fmt(res) + " (tol " + fmt(s.newton.tol) + ")");
  add(r, "NL-ITERATIONS", st.max_iterations() <= 8, "max Newton updates per panel " + std::to_string(st.max_iterations()));
  if (s.f.is_zero() && s.G_homogeneous) {
    const bool zero = (st.densities.mu.array() == 0.0).all() && (st.densities.eta.array() == 0.0).all();
    add(r, "NL-ZERO-SOLUTION", zero, zero ? "zero data gives the zero solution exactly" : "nonzero densities");
  }
}

void cmd_ntd(const Setup& s, const Writer& w, RunReport& r, std::mt19937_64& rng) {
  Problem p = build(s, s.Nt, s.M_outer, s.M_inner);
  const PanelMatrix gamma = PanelMatrix::Constant(s.Nt, s.M_inner, s.gamma);
  const auto op = ntd::assemble_ntd(p.ops, gamma);
  {
    std::ofstream out(w.dir / "ntd_blocks.calb", std::ios::binary);
    ntd::write_ntd_blocks(out, op);
  }
  {
    auto out = w.open("ntd_norms.csv");
    ntd::write_block_norms_csv(out, op);
  }
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    PanelMatrix f(s.Nt, s.M_outer);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = U(rng);
    worst = std::max(worst, (op.apply(f) - ntd::direct_trace(p.ops, gamma, f)).cwiseAbs().maxCoeff());
  }
  add(r, "NTD-PATH", worst < 1e-10, "max |NtD f - march trace| over 10 random f: " + fmt(worst));
}

void cmd_shape_sweep(const Setup& s, const Writer& w, RunReport& r) {
  const auto g = grid::make_grid(s.T, s.Nt, s.M_outer, s.M_inner);
  const auto outer_nodes = grid::discretize(s.outer, s.M_outer);
  const auto phi0 = geometry::ShapeMap::identity(s.inner);
  const auto inner0 = grid::discretize_image(phi0, s.M_inner);
  const int near = potentials::resolve_near_lags(g, {&outer_nodes, &inner0}, s.quadrature);
  const auto outer = potentials::assemble_outer(outer_nodes, g, near, s.quadrature);

  nonlinear::FamilyContext ctx{&outer, s.M_inner, s.G, sample_f(s, g, outer_nodes), s.interior, s.newton};
  std::vector<geometry::ShapeMap> path;
  for (double e : s.path) path.push_back(phi0.perturbed(s.direction, e));
  const auto fam = nonlinear::family_u_phi(ctx, path);
  {
    auto out = w.open("shape_sweep.csv");
    out << "path_index,eps,point_index,t,x,y,value\n";
    for (std::size_t i = 0; i < fam.size(); ++i)
      for (std::size_t q = 0; q < s.interior.size(); ++q)
        out << i << ',' << s.path[i] << ',' << q << ',' << s.interior[q].first << ',' << s.interior[q].second.x()
            << ',' << s.interior[q].second.y() << ',' << fam[i].interior[q] << '\n';
  }
  add(r, "SHAPE-FAMILY", true, std::to_string(fam.size()) + " shapes solved with warm starts");
  {
    auto out = w.open("shape_conditioning.csv");
    out << "path_index,eps,step_rcond,dphi_hoelder\n";
    const Eigen::VectorXd beta = Eigen::VectorXd::Constant(s.M_inner, -s.gamma);
    for (std::size_t i = 0; i < path.size(); ++i) {
      const auto ops = potentials::assemble_operators(outer, grid::discretize_image(path[i], s.M_inner));
      out << i << ',' << s.path[i] << ',' << linear::step_rcond(ops, beta) << ','
          << geometry::differential_hoelder_seminorm(path[i], 0.5) << '\n';
    }
  }

  const auto rep = nonlinear::shape_derivative_fd(ctx, phi0, s.direction, s.eps);
  {
    auto out = w.open("shape_derivative.csv");
    out << "eps,point_index,value\n";
    for (std::size_t e = 0; e < rep.eps.size(); ++e)
      for (std::size_t q = 0; q < rep.derivative[e].size(); ++q)
        out << rep.eps[e] << ',' << q << ',' << rep.derivative[e][q] << '\n';
  }
  bool ok = !rep.ratios.empty();
  std::string detail = "ratios";
  for (double q : rep.ratios) {
    ok = ok && q >= 3.0 && q <= 5.0;
    detail += " " + fmt(q);
  }
  add(r, "SHAPE-RICHARDSON-INTERIOR", ok, detail + " (bounds [3, 5])");

  ntd::SensitivityInputs in{&outer, phi0, s.M_inner, [gamma = s.gamma](double, const Point&) { return gamma; },
                            s.direction, {}, -1};
  const auto nrep = ntd::ntd_sensitivity(in, s.eps);
  ok = !nrep.ratios.empty();
  detail = "ratios";
  for (double q : nrep.ratios) {
    ok = ok && q >= 3.0 && q <= 5.0;
    detail += " " + fmt(q);
  }
  {
    auto out = w.open("ntd_sensitivity.csv");
    out << "eps,frobenius,max_abs\n";
    for (std::size_t e = 0; e < nrep.eps.size(); ++e)
      out << nrep.eps[e] << ',' << nrep.derivative[e].norm() << ',' << nrep.derivative[e].cwiseAbs().maxCoeff() << '\n';
  }
  add(r, "SHAPE-RICHARDSON-NTD", ok, detail + " (bounds [3, 5])");
}

void cmd_convergence(const Setup& s, const Writer& w, RunReport& r) {
  std::vector<double> errs;
  auto out = w.open("convergence.csv");
  out << "level,Nt,M,relative_error,order\n";
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const int N = s.levels[i];
    errs.push_back(manufactured_error(s, N, N));
    const double order = i == 0 ? 0.0 : std::log(errs[i - 1] / errs[i]) / std::log(static_cast<double>(N) / s.levels[i - 1]);
    out << i << ',' << N << ',' << N << ',' << errs[i] << ',' << order << '\n';
  }
  bool mono = errs.size() >= 3;
  for (std::size_t i = 1; i < errs.size(); ++i) mono = mono && errs[i] < errs[i - 1];
  std::string table;
  for (std::size_t i = 0; i < errs.size(); ++i) table += " " + std::to_string(s.levels[i]) + ":" + fmt(errs[i]);
  add(r, "CONV-MONOTONE", mono, "errors" + table);
  const double order = errs.size() >= 2 ? fitted_order(s.levels, errs) : 0.0;
  add(r, "CONV-ORDER", order >= 1.0, "fitted order " + fmt(order) + " (bound >= 1)");
}

// Jump relations of the outer curve's single layer with mu = t (1 + cos theta).
double jump_error(const Setup& s, int N) {
  const auto g = grid::make_grid(s.T, N, N, N);
  const auto n = grid::discretize(s.outer, N);
  const int near = potentials::resolve_near_lags(g, {&n}, s.quadrature);
  const auto V = potentials::assemble_V(n, g, near, s.quadrature);
  const auto W = potentials::assemble_Wstar(n, g, near, s.quadrature);
  PanelMatrix mu(N, N);
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < N; ++j) mu(k, j) = g.time(k) * (1.0 + std::cos(n.theta[j]));
  const PanelMatrix Vm = V.apply(mu), Wm = W.apply(mu);
  const potentials::SingleLayerEvaluator u(n, g, mu, near, s.quadrature);
  const double delta = 0.02 * n.max_spacing();
  double err = 0.0, scale = 0.0;
  for (int m = 1; m <= 4; ++m) {
    const int k = N * m / 4 - 1;
    const double t = g.time(k);
    for (int i = 0; i < N; ++i) {
      const Point& x = n.points[i];
      const Point& nu = n.normals[i];
      const double din = (3 * Vm(k, i) - 4 * u(t, x - delta * nu) + u(t, x - 2 * delta * nu)) / (2 * delta);
      const double dout = -(3 * Vm(k, i) - 4 * u(t, x + delta * nu) + u(t, x + 2 * delta * nu)) / (2 * delta);
      const double ein = 0.5 * mu(k, i) + Wm(k, i), eout = -0.5 * mu(k, i) + Wm(k, i);
      err = std::max({err, std::abs(din - ein), std::abs(dout - eout)});
      scale = std::max({scale, std::abs(ein), std::abs(eout)});
    }
  }
  return err / scale;
}

void cmd_verify(const Setup& s, RunReport& r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto random_panel = [&](int rows, int cols) {
    PanelMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = U(rng);
    return m;
  };

  {
    const double a = kernel::heat_kernel(0.25, Point(1.0, 0.0));
    const double b = kernel::panel_time_integral(0.0, 1.0, std::exp(1.0));
    const double err = std::max(std::abs(a - std::exp(-1.0) / kPi), std::abs(b - 1.0 / (4 * kPi)));
    add(r, "V-KERNEL", err < 1e-14, "closed-form kernel values, max deviation " + fmt(err));
  }
  {
    const double e = jump_error(s, std::min(s.Nt, s.M_outer));
    add(r, "V-JUMP", e < 2e-2, "relative jump-relation error " + fmt(e) + " (bound 2e-2)");
  }

  Problem p = build(s, s.Nt, s.M_outer, s.M_inner);
  const PanelMatrix gamma = PanelMatrix::Constant(s.Nt, s.M_inner, s.gamma);
  {
    const auto lp = linear::LinearMixedProblem::from_gamma(gamma, PanelMatrix::Zero(s.Nt, s.M_outer),
                                                           PanelMatrix::Zero(s.Nt, s.M_inner));
    const auto d = linear::march_solve(p.ops, lp);
    potentials::FieldEvaluator field(p.ops, d.mu, d.eta);
    bool zero = (d.mu.array() == 0.0).all() && (d.eta.array() == 0.0).all();
    for (const auto& q : s.interior) zero = zero && field(q.first, q.second) == 0.0;
    add(r, "V-ZERO-DATA", zero, zero ? "densities and field exactly zero" : "nonzero output for zero data");
  }
  {
    Setup small = s;
    small.T = s.T;
    Problem q = build(small, 6, 16, 16);
    const auto lp = linear::LinearMixedProblem::from_gamma(PanelMatrix::Constant(6, 16, s.gamma),
                                                           random_panel(6, 16), random_panel(6, 16));
    const auto dm = linear::march_solve(q.ops, lp);
    const auto dg = linear::global_solve(q.ops, lp);
    const double diff = std::max((dm.mu - dg.mu).cwiseAbs().maxCoeff(), (dm.eta - dg.eta).cwiseAbs().maxCoeff());
    const double res = linear::system_residual(q.ops, lp, dm);
    add(r, "V-GLOBAL-MARCH", diff < 1e-10 && res < 1e-10,
        "march vs global " + fmt(diff) + ", marched residual " + fmt(res));
  }
  {
    const double e = manufactured_error(s, s.Nt, std::min(s.M_outer, s.M_inner));
    add(r, "V-MANUFACTURED", e < 2e-2, "relative trace error " + fmt(e) + " (bound 2e-2)");
  }

  nonlinear::NonlinearityTable table;
  const auto st = solve_nl(s, p, Densities::zeros(p.grid), &table);
  add(r, "V-NEWTON-CONVERGED", st.converged, "max updates per panel " + std::to_string(st.max_iterations()));
  if (!st.converged) return;
  add(r, "V-NEWTON-ITERATIONS", st.max_iterations() <= 8,
      "max updates per panel " + std::to_string(st.max_iterations()) + " (bound 8)");
  {
    double worst = 0.0;
    for (const auto& h : st.residual_history) {
      const auto c = nonlinear::quadratic_constants(h);
      if (!c.empty()) worst = std::max(worst, c.back());
    }
    add(r, "V-NEWTON-QUADRATIC", worst < 10.0, "largest tail constant |r+| / |r|^2 = " + fmt(worst));
  }
  {
    // Heat-operator residual of the represented field by central differences.
    potentials::FieldEvaluator u(p.ops, st.densities.mu, st.densities.eta);
    const double h = 1e-2;
    double worst = 0.0, scale = 0.0;
    for (const auto& q : s.interior) {
      const double t = std::clamp(q.first, 2 * h, s.T - h);
      const Point& x = q.second;
      const Point ex(h, 0.0), ey(0.0, h);
      const double c = u(t, x);
      const double ut = (u(t + h, x) - u(t - h, x)) / (2 * h);
      const double lap = (u(t, x + ex) + u(t, x - ex) + u(t, x + ey) + u(t, x - ey) - 4 * c) / (h * h);
      worst = std::max(worst, std::abs(ut - lap));
      scale = std::max(scale, std::abs(ut));
    }
    const double rel = worst / (scale > 0 ? scale : 1.0);
    add(r, "V-CALORIC", rel < 1e-3, "relative heat-operator residual " + fmt(rel) + " at step 1e-2 (bound 1e-3)");
  }
  {
    const PanelMatrix f = sample_f(s, p.grid, p.outer);
    const Densities dir{random_panel(s.Nt, s.M_outer), random_panel(s.Nt, s.M_inner)};
    const auto Ja = nonlinear::jacobian_apply(p.ops, table, st.densities, dir);
    const double h = 1e-6;
    const Densities dp{st.densities.mu + h * dir.mu, st.densities.eta + h * dir.eta};
    const Densities dm{st.densities.mu - h * dir.mu, st.densities.eta - h * dir.eta};
    const auto rp = nonlinear::residual_M(p.ops, table, f, dp), rm = nonlinear::residual_M(p.ops, table, f, dm);
    const Densities diff{(rp.mu - rm.mu) / (2 * h) - Ja.mu, (rp.eta - rm.eta) / (2 * h) - Ja.eta};
    const double e = nonlinear::max_norm(diff) / nonlinear::max_norm(Ja);
    add(r, "V-JACOBIAN", e < 1e-5, "relative Jacobian/FD mismatch " + fmt(e) + " (bound 1e-5)");
  }
  {
    std::normal_distribution<double> N01;
    int ok = 0;
    double worst = 0.0;
    for (int trial = 0; trial < s.restarts; ++trial) {
      Densities init = st.densities;
      PanelMatrix nm = random_panel(s.Nt, s.M_outer), ne = random_panel(s.Nt, s.M_inner);
      const double scale = std::max(nm.cwiseAbs().maxCoeff(), ne.cwiseAbs().maxCoeff());
      init.mu += (s.restart_noise / scale) * nm;
      init.eta += (s.restart_noise / scale) * ne;
      const auto again = nonlinear::newton_solve(p.ops, table, sample_f(s, p.grid, p.outer), init, s.newton);
      if (!again.converged) continue;
      const auto rep = nonlinear::local_uniqueness_check(p.ops, again.densities, st.densities, s.tol_unique);
      worst = std::max(worst, rep.trace_distance);
      if (rep.agrees) ++ok;
    }
    const bool pass = s.restarts > 0 && ok * 100 >= 95 * s.restarts;
    add(r, "V-UNIQUENESS", pass,
        std::to_string(ok) + "/" + std::to_string(s.restarts) + " restarts reconverged, worst trace distance " + fmt(worst));
  }
  {
    const auto op = ntd::assemble_ntd(p.ops, gamma);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const PanelMatrix f = random_panel(s.Nt, s.M_outer);
      worst = std::max(worst, (op.apply(f) - ntd::direct_trace(p.ops, gamma, f)).cwiseAbs().maxCoeff());
    }
    add(r, "V-NTD-PATH", worst < 1e-10, "max NtD/march mismatch " + fmt(worst));

    bool causal = true;
    std::uniform_int_distribution<int> K(1, s.Nt - 1);
    const PanelMatrix f = random_panel(s.Nt, s.M_outer);
    const auto lp = linear::LinearMixedProblem::from_gamma(gamma, f, PanelMatrix::Zero(s.Nt, s.M_inner));
    const auto d = linear::march_solve(p.ops, lp);
    const auto tr = linear::traces(p.ops, d);
    const auto u = op.apply(f);
    for (int trial = 0; trial < 5; ++trial) {
      const int k0 = K(rng);
      PanelMatrix ft = f;
      ft.bottomRows(s.Nt - k0).setConstant(7.0);
      const auto lpt = linear::LinearMixedProblem::from_gamma(gamma, ft, PanelMatrix::Zero(s.Nt, s.M_inner));
      const auto dt = linear::march_solve(p.ops, lpt);
      const auto trt = linear::traces(p.ops, dt);
      const auto ut = op.apply(ft);
      causal = causal && (dt.mu.topRows(k0).array() == d.mu.topRows(k0).array()).all() &&
               (dt.eta.topRows(k0).array() == d.eta.topRows(k0).array()).all() &&
               (trt.outer.topRows(k0).array() == tr.outer.topRows(k0).array()).all() &&
               (ut.topRows(k0).array() == u.topRows(k0).array()).all();
    }
    add(r, "V-CAUSALITY", causal, causal ? "earlier panels bitwise unchanged for 5 truncations" : "causality violated");
  }
  {
    try {
      const Point c = s.inner.centroid();
      oracle::FdAnnulusSolver fd(s.outer, s.inner, c, s.T, {s.fd_Nr, s.fd_Ntheta, s.fd_steps_per_panel * s.Nt});
      oracle::FdProblem fp;
      fp.f = s.f;
      fp.g = [](double, const Point&) { return 0.0; };
      const auto G = s.G;
      fp.G = [G](double t, const Point& x, double u) { return G.value(t, x, u); };
      fp.dG = [G](double t, const Point& x, double u) { return G.derivative(t, x, u); };
      fd.solve(fp);
      const auto tr = linear::traces(p.ops, st.densities);
      double e = 0.0, scale = 0.0;
      for (int k = 0; k < s.Nt; ++k) {
        for (int j = 0; j < s.M_outer; ++j) {
          e = std::max(e, std::abs(tr.outer(k, j) - fd.boundary_value(true, p.grid.time(k), p.outer.points[j])));
          scale = std::max(scale, std::abs(tr.outer(k, j)));
        }
        for (int j = 0; j < s.M_inner; ++j) {
          e = std::max(e, std::abs(tr.inner(k, j) - fd.boundary_value(false, p.grid.time(k), p.inner.points[j])));
          scale = std::max(scale, std::abs(tr.inner(k, j)));
        }
      }
      e /= scale > 0 ? scale : 1.0;
      add(r, "V-BEM-FD", e < 5e-2, "relative trace discrepancy " + fmt(e) + " (bound 5e-2)");
    } catch (const InvalidArgument& ex) {
      add(r, "V-BEM-FD", true, std::string("skipped: geometry outside the FD oracle's scope (") + ex.what() + ")");
    }
  }
}

void write_report(const Writer& w, const RunReport& r, const Config& c) {
  auto out = w.open("report.txt");
  out << "command: " << r.command << "\n";
  out << "config: " << c.origin() << "\n";
  out << "seed: " << r.seed << "\n";
  for (const auto& a : r.assertions) out << (a.passed ? "[PASS] " : "[FAIL] ") << a.id << ": " << a.detail << "\n";
  out << "summary: " << (r.assertions.size() - r.failures()) << " passed, " << r.failures() << " failed\n";
}

}  // namespace

double NeumannDatum::operator()(double t, const Point& x) const {
  return poly(time_poly, t) * (space[0] + space[1] * x.x() + space[2] * x.y());
}

bool NeumannDatum::is_zero() const {
  const bool t0 = std::all_of(time_poly.begin(), time_poly.end(), [](double v) { return v == 0.0; });
  return t0 || (space[0] == 0.0 && space[1] == 0.0 && space[2] == 0.0);
}

Setup load_setup(const Config& c) {
  Setup s;
  std::map<std::string, geometry::BoundaryCurve> library;
  const bool has_lib = c.has("geometry_file");
  if (has_lib) {
    const auto path = c.base_dir() / c.get_string("geometry_file");
    std::ifstream in(path);
    if (!in) throw ConfigError(c.origin(), 0, "cannot open geometry file " + path.string());
    library = config::parse_curve_file(in, path.string());
  }
  s.outer = load_curve(c, "outer", "circle 0 0 1", has_lib ? &library : nullptr);
  s.inner = load_curve(c, "inner", "circle 0 0 0.4", has_lib ? &library : nullptr);
  s.T = c.get_double("T", s.T);
  s.Nt = c.get_int("Nt", s.Nt);
  s.M_outer = c.get_int("M_outer", s.M_outer);
  s.M_inner = c.get_int("M_inner", s.M_inner);
  try {
    grid::make_grid(s.T, s.Nt, s.M_outer, s.M_inner);
  } catch (const InvalidArgument& e) {
    throw ConfigError(c.origin(), 0, e.what());
  }
  s.quadrature.near_lags = c.get_int("near_lags", -1);
  s.gamma = c.get_double("gamma", s.gamma);

  s.f.time_poly = c.get_doubles("f_time", {0.0, 2.0});
  const auto fs = c.get_doubles("f_space", {1.0, 0.5, 0.0});
  if (fs.size() != 3) throw ConfigError(c.origin(), 0, "`f_space` needs three numbers: c0 cx cy");
  s.f.space = {fs[0], fs[1], fs[2]};
  if (!s.f.time_poly.empty() && s.f.time_poly[0] != 0.0) {
    throw ConfigError(c.origin(), 0, "`f_time` must vanish at t = 0 (first coefficient 0)");
  }

  if (c.has("G_degree")) {
    const int deg = c.get_int("G_degree", 2);
    if (deg < 0 || deg > 8) throw ConfigError(c.origin(), 0, "`G_degree` must lie in [0, 8]");
    s.G.a.clear();
    s.G.b.clear();
    s.G_homogeneous = true;
    for (int j = 0; j <= deg; ++j) {
      const auto a = c.get_doubles("G_a" + std::to_string(j), {0.0});
      const auto b = c.get_doubles("G_b" + std::to_string(j), {1.0, 0.0, 0.0});
      if (b.size() != 3) throw ConfigError(c.origin(), 0, "`G_b" + std::to_string(j) + "` needs three numbers");
      if (j == 0) {
        const bool a_zero = std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
        const bool b_zero = b[0] == 0.0 && b[1] == 0.0 && b[2] == 0.0;
        s.G_homogeneous = a_zero || b_zero;
        if (!a.empty() && a[0] != 0.0 && !b_zero) throw ConfigError(c.origin(), 0, "G(0, x, 0) must vanish: `G_a0` needs a zero constant term");
      }
      s.G.a.push_back([a](double t) { return poly(a, t); });
      s.G.b.push_back([b](const Point& x) { return b[0] + b[1] * x.x() + b[2] * x.y(); });
    }
  }
  const auto x0 = c.get_doubles("manufactured_x0", {s.inner.centroid().x(), s.inner.centroid().y()});
  if (x0.size() != 2) throw ConfigError(c.origin(), 0, "`manufactured_x0` needs two numbers");
  s.x0 = {x0[0], x0[1]};
  s.newton.tol = c.get_double("tol_newton", 1e-10);
  s.newton.max_iter = c.get_int("max_newton", 30);
  s.tol_unique = c.get_double("tol_unique", 1e-8);
  s.direction = parse_direction(c);
  s.eps = c.get_doubles("shape_eps", s.eps);
  s.path = c.get_doubles("shape_path", s.path);
  for (double e : s.eps)
    if (!(e > 0)) throw ConfigError(c.origin(), 0, "`shape_eps` entries must be positive");

  if (c.has("interior_points")) {
    std::istringstream in(c.get_string("interior_points"));
    for (std::string item; std::getline(in, item, ';');) {
      std::istringstream ws(item);
      double t, x, y;
      if (!(ws >> t >> x >> y)) throw ConfigError(c.origin(), 0, "`interior_points` entries are `t x y` separated by `;`");
      s.interior.push_back({t, {x, y}});
    }
  } else {
    for (double th : {0.3, 1.9, 3.5, 5.1}) {
      s.interior.push_back({s.T, 0.5 * (s.inner.point(th) + s.outer.point(th))});
    }
  }
  const auto lv = c.get_doubles("levels", {16, 32, 64});
  s.levels.clear();
  for (double v : lv) {
    if (v < 8 || v != std::floor(v) || static_cast<int>(v) % 2) throw ConfigError(c.origin(), 0, "`levels` must be even integers >= 8");
    s.levels.push_back(static_cast<int>(v));
  }
  s.restarts = c.get_int("restarts", 20);
  s.restart_noise = c.get_double("restart_noise", 1e-3);
  s.fd_Nr = c.get_int("fd_Nr", s.fd_Nr);
  s.fd_Ntheta = c.get_int("fd_Ntheta", s.fd_Ntheta);
  s.fd_steps_per_panel = c.get_int("fd_steps_per_panel", s.fd_steps_per_panel);
  return s;
}

int RunReport::failures() const {
  return static_cast<int>(std::count_if(assertions.begin(), assertions.end(), [](const Assertion& a) { return !a.passed; }));
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"solve-linear", "solve-nonlinear", "ntd", "shape-sweep", "verify", "convergence"};
  return c;
}

RunReport run(const Config& c, const std::string& command, const std::filesystem::path& out, std::uint64_t seed) {
  if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
    throw InvalidArgument("driver", "unknown command `" + command + "`");
  }
  const Setup s = load_setup(c);
  std::filesystem::create_directories(out);
  const Writer w{out};
  RunReport r;
  r.command = command;
  r.seed = seed;
  std::mt19937_64 rng(seed);
  if (command == "solve-linear")
    cmd_solve_linear(c, s, w, r);
  else if (command == "solve-nonlinear")
    cmd_solve_nonlinear(s, w, r);
  else if (command == "ntd")
    cmd_ntd(s, w, r, rng);
  else if (command == "shape-sweep")
    cmd_shape_sweep(s, w, r);
  else if (command == "convergence")
    cmd_convergence(s, w, r);
  else
    cmd_verify(s, r, rng);
  write_report(w, r, c);
  return r;
}

}  // namespace calheat::driver
