#pragma once

#include <functional>
#include <vector>

#include "calheat/linear_solver.hpp"
#include "calheat/potentials.hpp"

namespace calheat::nonlinear {

using geometry::Point;
using geometry::ShapeMap;
using linear::Densities;
using potentials::LayerOperatorSet;
using potentials::OuterOperators;

/// Polynomial Robin law G(t, x, xi) = sum_j a_j(t) b_j(x) xi^j.
struct RobinNonlinearity {
  std::vector<std::function<double(double)>> a;
  std::vector<std::function<double(const Point&)>> b;

  int degree() const { return static_cast<int>(a.size()) - 1; }
  double value(double t, const Point& x, double xi) const;
  double derivative(double t, const Point& x, double xi) const;

  /// G = 0.
  static RobinNonlinearity zero();
  /// G = -gamma xi, the linear Robin law d_nu u + gamma u = 0.
  static RobinNonlinearity linear_robin(double gamma);
  /// G = t xi - 0.1 xi^2.
  static RobinNonlinearity quadratic_benchmark();
};

/// Coefficients a_j(t_k) b_j(x_i) sampled at the collocation times and the
/// image nodes. Everything downstream works on this table.
struct NonlinearityTable {
  std::vector<PanelMatrix> coeff;  // coeff[j] is Nt x M_inner

  int degree() const { return static_cast<int>(coeff.size()) - 1; }
  double value(int k, int i, double xi) const;
  double derivative(int k, int i, double xi) const;
  void validate(const grid::SpaceTimeGrid& g, int M_inner) const;
};

/// Samples G at the collocation times and the image nodes. Throws
/// InvalidArgument when an image node lies outside the outer curve or when
/// G(0, x, 0) != 0.
NonlinearityTable tabulate(const RobinNonlinearity& G, const grid::SpaceTimeGrid& g, const grid::NodeSet& inner,
                           const geometry::BoundaryCurve& outer);

/// Pointwise G(t_k, phi(x_i), u[k][i]).
PanelMatrix eval_N_G(const NonlinearityTable& G, const PanelMatrix& u_trace);

/// Residual rows: outer (1/2 + W*) mu + dn eta - f, inner (-1/2 + W*) eta + dn mu - N_G(trace).
Densities residual_M(const LayerOperatorSet& ops, const NonlinearityTable& G, const PanelMatrix& f,
                     const Densities& d);

/// Linearization of residual_M at `at` applied to `direction`.
Densities jacobian_apply(const LayerOperatorSet& ops, const NonlinearityTable& G, const Densities& at,
                         const Densities& direction);

double max_norm(const Densities& r);

struct NewtonOptions {
  double tol = 1e-10;  // absolute max-norm on the panel residual
  int max_iter = 30;
  double min_rcond = 1e-13;
};

struct NonlinearState {
  Densities densities;
  bool converged = false;
  int failed_panel = -1;
  std::vector<std::vector<double>> residual_history;  // per panel, max-norm before each update and at exit
  int iterations(int panel) const { return static_cast<int>(residual_history.at(panel).size()) - 1; }
  int max_iterations() const;
};

/// Time-marching Newton: panel by panel with the history frozen, using the
/// exact Jacobian (the coupled linear operator with beta = dG/dxi at the
/// current trace). `initial` seeds every panel's iteration.
NonlinearState newton_solve(const LayerOperatorSet& ops, const NonlinearityTable& G, const PanelMatrix& f,
                            const Densities& initial, const NewtonOptions& opts = {});

/// Last-iteration ratios |r_{i+1}| / |r_i|^2 of a panel, for tail checks.
std::vector<double> quadratic_constants(const std::vector<double>& history, double floor = 1e-13);

/// One shape of a family solve.
struct ShapeSolve {
  Densities densities;
  std::vector<double> interior;  // u at the requested points
  int max_newton_iterations = 0;
};

/// Shared inputs of shape studies. The outer operators (and with them the
/// near-field lag count) are fixed across every shape of a study.
struct FamilyContext {
  const OuterOperators* outer = nullptr;
  int M_inner = 64;
  RobinNonlinearity G;
  PanelMatrix f;
  std::vector<std::pair<double, Point>> points;  // interior evaluation points (t, x)
  NewtonOptions newton;
  double clearance = -1;  // admissibility clearance; negative picks the default
};

/// Solves every shape of the path, warm-started from the previous shape, and
/// evaluates u at the interior points. Errors name the path index.
std::vector<ShapeSolve> family_u_phi(const FamilyContext& ctx, const std::vector<ShapeMap>& path);

struct ShapeDerivativeReport {
  std::vector<double> eps;
  std::vector<std::vector<double>> derivative;  // central differences per eps
  std::vector<double> ratios;                   // |D_e - D_e/2| / |D_e/2 - D_e/4| for consecutive triples
};

/// Central differences (u(phi0 + eps h) - u(phi0 - eps h)) / (2 eps) at the
/// interior points. A zero direction short-circuits to zero estimates.
ShapeDerivativeReport shape_derivative_fd(const FamilyContext& ctx, const ShapeMap& phi0,
                                          const geometry::ShapeDisplacement& direction,
                                          const std::vector<double>& eps);

/// Richardson ratios of a sequence of estimates at halving steps.
std::vector<double> richardson_ratios(const std::vector<std::vector<double>>& estimates);

struct UniquenessReport {
  double trace_distance = 0;    // max over outer and inner traces
  double density_distance = 0;  // max over mu and eta
  bool agrees = false;
};

UniquenessReport local_uniqueness_check(const LayerOperatorSet& ops, const Densities& candidate,
                                        const Densities& reference, double tol_unique = 1e-8);

}  // namespace calheat::nonlinear
