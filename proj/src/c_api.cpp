#include "calheat/calheat.h"

#include <exception>
#include <memory>
#include <sstream>
#include <string>

#include "calheat/config.hpp"
#include "calheat/driver.hpp"
#include "calheat/linear_solver.hpp"
#include "calheat/nonlinear_solver.hpp"
#include "calheat/ntd.hpp"
#include "calheat/parallel.hpp"

using namespace calheat;

struct calheat_config {
  config::Config cfg;
};
struct calheat_curve {
  geometry::BoundaryCurve curve;
};
struct calheat_shape {
  geometry::ShapeMap map;
};
struct calheat_solver {
  geometry::BoundaryCurve outer_curve;
  potentials::LayerOperatorSet ops;
};
struct calheat_ntd {
  ntd::NtDOperator op;
};

namespace {

thread_local std::string last_error;

template <class F>
calheat_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const config::ConfigError& e) {
    last_error = e.what();
    return CALHEAT_CONFIG_ERROR;
  } catch (const SolverError& e) {
    last_error = e.what();
    return CALHEAT_SOLVER_ERROR;
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return CALHEAT_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CALHEAT_SOLVER_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return CALHEAT_SOLVER_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument("c_api", what);
}

using ConstMap = Eigen::Map<const PanelMatrix>;
using Map = Eigen::Map<PanelMatrix>;

int Nt(const calheat_solver* s) { return s->ops.grid.Nt; }
int Mo(const calheat_solver* s) { return s->ops.outer.M; }
int Mi(const calheat_solver* s) { return s->ops.inner.M; }

}  // namespace

extern "C" {

const char* calheat_last_error(void) { return last_error.c_str(); }
const char* calheat_version(void) { return "1.0.0"; }

calheat_status calheat_set_threads(int n) {
  return guarded([&] {
    require(n >= 1, "thread count must be positive");
    set_num_threads(n);
    return CALHEAT_OK;
  });
}

calheat_status calheat_config_load(const char* path, calheat_config** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new calheat_config{config::Config::load(path)};
    return CALHEAT_OK;
  });
}

calheat_status calheat_config_parse(const char* text, calheat_config** out) {
  return guarded([&] {
    require(text && out, "null argument");
    std::istringstream in(text);
    *out = new calheat_config{config::Config::parse(in, "<string>")};
    return CALHEAT_OK;
  });
}

calheat_status calheat_config_set(calheat_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "null argument");
    cfg->cfg.set(key, value);
    return CALHEAT_OK;
  });
}

void calheat_config_free(calheat_config* cfg) { delete cfg; }

calheat_status calheat_run(const calheat_config* cfg, const char* command, const char* out_dir, uint64_t seed,
                           int* failed) {
  return guarded([&] {
    require(cfg && command && out_dir, "null argument");
    const auto report = driver::run(cfg->cfg, command, out_dir, seed);
    if (failed) *failed = report.failures();
    return report.failures() == 0 ? CALHEAT_OK : CALHEAT_ASSERTION_FAILED;
  });
}

calheat_status calheat_curve_circle(double cx, double cy, double r, calheat_curve** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new calheat_curve{geometry::BoundaryCurve::circle({cx, cy}, r)};
    return CALHEAT_OK;
  });
}

calheat_status calheat_curve_ellipse(double cx, double cy, double a, double b, double angle, calheat_curve** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new calheat_curve{geometry::BoundaryCurve::ellipse({cx, cy}, a, b, angle)};
    return CALHEAT_OK;
  });
}

calheat_status calheat_curve_fourier(double cx, double cy, double r0, const double* cos_coeffs, int n_cos,
                                     const double* sin_coeffs, int n_sin, calheat_curve** out) {
  return guarded([&] {
    require(out && n_cos >= 0 && n_sin >= 0, "bad argument");
    require((n_cos == 0 || cos_coeffs) && (n_sin == 0 || sin_coeffs), "null coefficient array");
    std::vector<double> c(cos_coeffs, cos_coeffs + n_cos), s(sin_coeffs, sin_coeffs + n_sin);
    *out = new calheat_curve{geometry::BoundaryCurve::fourier({cx, cy}, r0, c, s)};
    return CALHEAT_OK;
  });
}

void calheat_curve_free(calheat_curve* c) { delete c; }

calheat_status calheat_shape_identity(const calheat_curve* reference, calheat_shape** out) {
  return guarded([&] {
    require(reference && out, "null argument");
    *out = new calheat_shape{geometry::ShapeMap::identity(reference->curve)};
    return CALHEAT_OK;
  });
}

calheat_status calheat_shape_perturb_affine(const calheat_shape* base, const double linear[4],
                                            const double translation[2], double eps, calheat_shape** out) {
  return guarded([&] {
    require(base && linear && translation && out, "null argument");
    geometry::ShapeDisplacement d;
    d.linear << linear[0], linear[1], linear[2], linear[3];
    d.translation = {translation[0], translation[1]};
    *out = new calheat_shape{base->map.perturbed(d, eps)};
    return CALHEAT_OK;
  });
}

calheat_status calheat_shape_perturb_radial(const calheat_shape* base, int k, double a, double b, double eps,
                                            calheat_shape** out) {
  return guarded([&] {
    require(base && out && k >= 0, "bad argument");
    *out = new calheat_shape{base->map.perturbed(geometry::ShapeDisplacement::radial_mode(k, a, b), eps)};
    return CALHEAT_OK;
  });
}

void calheat_shape_free(calheat_shape* s) { delete s; }

calheat_status calheat_solver_create(const calheat_curve* outer, const calheat_shape* shape, double T, int Nt,
                                     int M_outer, int M_inner, calheat_solver** out) {
  return guarded([&] {
    require(outer && shape && out, "null argument");
    const auto g = grid::make_grid(T, Nt, M_outer, M_inner);
    const auto adm = geometry::check_admissible(shape->map, outer->curve, geometry::default_clearance(outer->curve));
    require(adm.passed(), "shape is not admissible inside the outer curve");
    const auto on = grid::discretize(outer->curve, M_outer);
    const auto in = grid::discretize_image(shape->map, M_inner);
    *out = new calheat_solver{outer->curve, potentials::assemble_operators(on, in, g)};
    return CALHEAT_OK;
  });
}

void calheat_solver_sizes(const calheat_solver* s, int* nt, int* mo, int* mi) {
  if (!s) return;
  if (nt) *nt = Nt(s);
  if (mo) *mo = Mo(s);
  if (mi) *mi = Mi(s);
}

calheat_status calheat_solver_nodes(const calheat_solver* s, int inner, double* xy) {
  return guarded([&] {
    require(s && xy, "null argument");
    const auto& n = inner ? s->ops.inner : s->ops.outer;
    for (int j = 0; j < n.M; ++j) {
      xy[2 * j] = n.points[j].x();
      xy[2 * j + 1] = n.points[j].y();
    }
    return CALHEAT_OK;
  });
}

double calheat_solver_time(const calheat_solver* s, int k) { return s ? s->ops.grid.time(k) : 0.0; }

calheat_status calheat_solver_solve_linear(calheat_solver* s, const double* gamma, const double* f, const double* g,
                                           double* mu, double* eta) {
  return guarded([&] {
    require(s && gamma && f && g && mu && eta, "null argument");
    const auto p = linear::LinearMixedProblem::from_gamma(ConstMap(gamma, Nt(s), Mi(s)), ConstMap(f, Nt(s), Mo(s)),
                                                          ConstMap(g, Nt(s), Mi(s)));
    const auto d = linear::march_solve(s->ops, p);
    Map(mu, Nt(s), Mo(s)) = d.mu;
    Map(eta, Nt(s), Mi(s)) = d.eta;
    return CALHEAT_OK;
  });
}

calheat_status calheat_solver_solve_nonlinear(calheat_solver* s, int degree, const double* coeff, const double* f,
                                              double tol, int max_iter, double* mu, double* eta, int* iterations) {
  return guarded([&] {
    require(s && coeff && f && mu && eta, "null argument");
    require(degree >= 0 && tol > 0 && max_iter > 0, "bad Newton parameters");
    nonlinear::NonlinearityTable table;
    const std::size_t block = static_cast<std::size_t>(Nt(s)) * Mi(s);
    for (int j = 0; j <= degree; ++j) table.coeff.push_back(ConstMap(coeff + j * block, Nt(s), Mi(s)));
    table.validate(s->ops.grid, Mi(s));
    nonlinear::NewtonOptions opts;
    opts.tol = tol;
    opts.max_iter = max_iter;
    const auto st = nonlinear::newton_solve(s->ops, table, ConstMap(f, Nt(s), Mo(s)),
                                            linear::Densities::zeros(s->ops.grid), opts);
    if (!st.converged) {
      throw SolverError("c_api", "Newton failed to converge at panel " + std::to_string(st.failed_panel));
    }
    Map(mu, Nt(s), Mo(s)) = st.densities.mu;
    Map(eta, Nt(s), Mi(s)) = st.densities.eta;
    if (iterations) *iterations = st.max_iterations();
    return CALHEAT_OK;
  });
}

calheat_status calheat_solver_traces(const calheat_solver* s, const double* mu, const double* eta, double* outer_trace,
                                     double* inner_trace) {
  return guarded([&] {
    require(s && mu && eta && outer_trace && inner_trace, "null argument");
    const linear::Densities d{ConstMap(mu, Nt(s), Mo(s)), ConstMap(eta, Nt(s), Mi(s))};
    const auto tr = linear::traces(s->ops, d);
    Map(outer_trace, Nt(s), Mo(s)) = tr.outer;
    Map(inner_trace, Nt(s), Mi(s)) = tr.inner;
    return CALHEAT_OK;
  });
}

calheat_status calheat_solver_eval(const calheat_solver* s, const double* mu, const double* eta, int n,
                                   const double* t, const double* xy, double* values) {
  return guarded([&] {
    require(s && mu && eta && n >= 0 && (n == 0 || (t && xy && values)), "null argument");
    potentials::FieldEvaluator field(s->ops, ConstMap(mu, Nt(s), Mo(s)), ConstMap(eta, Nt(s), Mi(s)));
    std::vector<std::pair<double, geometry::Point>> pts;
    for (int i = 0; i < n; ++i) pts.push_back({t[i], {xy[2 * i], xy[2 * i + 1]}});
    const auto v = field.evaluate(pts);
    std::copy(v.begin(), v.end(), values);
    return CALHEAT_OK;
  });
}

void calheat_solver_free(calheat_solver* s) { delete s; }

calheat_status calheat_ntd_create(const calheat_solver* s, const double* gamma, calheat_ntd** out) {
  return guarded([&] {
    require(s && gamma && out, "null argument");
    *out = new calheat_ntd{ntd::assemble_ntd(s->ops, ConstMap(gamma, Nt(s), Mi(s)))};
    return CALHEAT_OK;
  });
}

calheat_status calheat_ntd_apply(const calheat_ntd* op, const double* f, double* u) {
  return guarded([&] {
    require(op && f && u, "null argument");
    const int nt = op->op.panels(), m = op->op.nodes();
    Map(u, nt, m) = op->op.apply(ConstMap(f, nt, m));
    return CALHEAT_OK;
  });
}

calheat_status calheat_ntd_block(const calheat_ntd* op, int k, int kp, double* block) {
  return guarded([&] {
    require(op && block, "null argument");
    require(k >= 0 && kp >= 0 && k < op->op.panels() && kp < op->op.panels(), "panel index out of range");
    const int m = op->op.nodes();
    Map(block, m, m) = op->op.block(k, kp);
    return CALHEAT_OK;
  });
}

void calheat_ntd_free(calheat_ntd* op) { delete op; }

}  // extern "C"
