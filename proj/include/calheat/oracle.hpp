#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "calheat/geometry.hpp"
#include "calheat/grid.hpp"

namespace calheat::oracle {

using geometry::Point;

/// Closed-form fields used to manufacture boundary data with a known answer.
///
/// SwitchedOnSource: u(t,x) = (1/4 pi) E1(|x - x0|^2 / 4t), the response to a
/// unit point source at x0 switched on at t = 0. Exactly caloric away from x0
/// and identically zero at t = 0.
///
/// ShiftedGaussian: u(t,x) = S(t + t0, x - x0) - S(t0, x - x0). Zero at t = 0
/// but not caloric: (d_t - Lap) u = Lap S(t0, x - x0), reported by heat_defect.
struct ManufacturedField {
  enum class Kind { SwitchedOnSource, ShiftedGaussian };
  Kind kind = Kind::SwitchedOnSource;
  Point x0 = Point::Zero();
  double t0 = 0.0;

  static ManufacturedField source(const Point& x0);
  static ManufacturedField gaussian(const Point& x0, double t0);

  double value(double t, const Point& x) const;
  Point gradient(double t, const Point& x) const;
  /// (d_t - Lap) u at (t, x).
  double heat_defect(double t, const Point& x) const;
};

struct ManufacturedData {
  PanelMatrix f;            // d_nu u on the outer nodes
  PanelMatrix g;            // d_nu u + gamma u on the inner nodes (nu out of the hole)
  PanelMatrix trace_outer;  // u at the outer nodes
  PanelMatrix trace_inner;  // u at the inner nodes
  double defect_bound = 0;  // max |(d_t - Lap) u| over the annulus sample points
  double signal = 0;        // max |u| over the same samples
};

/// Samples the field at the collocation times. Throws InvalidArgument when x0
/// is not strictly inside the hole curve.
ManufacturedData manufactured_data(const ManufacturedField& field, const grid::NodeSet& outer,
                                   const grid::NodeSet& inner, const grid::SpaceTimeGrid& g,
                                   const PanelMatrix& gamma);

/// Inner boundary law d_nu u = G(t, x, u) + g(t, x) with nu pointing out of
/// the hole, and outer Neumann datum d_nu u = f(t, x).
struct FdProblem {
  std::function<double(double, const Point&)> f;
  std::function<double(double, const Point&)> g;
  std::function<double(double, const Point&, double)> G;
  std::function<double(double, const Point&, double)> dG;  // dG/du
};

/// Robin convenience: G = -gamma u.
FdProblem robin_problem(std::function<double(double, const Point&)> f, std::function<double(double, const Point&)> g,
                        std::function<double(double, const Point&)> gamma);

struct FdResolution {
  int Nr = 33;      // radial nodes including both boundaries
  int Ntheta = 64;  // periodic angular nodes
  int steps = 64;   // implicit Euler steps on [0, T]
};

/// Polar description r(theta) of a star-shaped curve about a center.
struct PolarProfile {
  std::vector<double> r, dr, d2r;
};
PolarProfile polar_profile(const geometry::BoundaryCurve& c, const Point& center, const std::vector<double>& theta);

/// Finite differences on the annulus between two star-shaped curves, mapped to
/// [0,1] x [0, 2 pi) by x = c + (r_in + rho (r_out - r_in)) e(theta). Second
/// order in space, implicit Euler in time, Newton on every step.
class FdAnnulusSolver {
 public:
  FdAnnulusSolver(const geometry::BoundaryCurve& outer, const geometry::BoundaryCurve& inner, const Point& center,
                  double T, FdResolution res);

  /// Runs the time stepping from zero initial data.
  void solve(const FdProblem& p, int max_newton = 20, double tol = 1e-12);

  int steps() const { return res_.steps; }
  double dt() const { return T_ / res_.steps; }
  const FdResolution& resolution() const { return res_; }
  int max_newton_iterations() const { return max_newton_used_; }

  /// Nodal field at step n (n = 0 is the initial state), indexed [i * Ntheta + j].
  const Eigen::VectorXd& state(int n) const { return states_.at(n); }
  Point node(int i, int j) const;

  /// Boundary value at the polar angle of x, at time t (linear in time between
  /// steps, periodic cubic in angle).
  double boundary_value(bool outer, double t, const Point& x) const;
  /// Field value at an interior point x (bilinear-cubic interpolation on the mapped grid).
  double value(double t, const Point& x) const;

  /// CSV `t,r_index,theta_index,x,y,value` for every `stride`-th step.
  void write_snapshots(std::ostream& out, int stride) const;

 private:
  double angle_of(const Point& x) const;
  double angular_interp(const Eigen::VectorXd& u, int i, double theta) const;
  double state_at(double t, const std::function<double(const Eigen::VectorXd&)>& sample) const;

  double T_;
  FdResolution res_;
  Point center_;
  std::vector<double> theta_;
  PolarProfile in_, out_;
  std::vector<Eigen::VectorXd> states_;
  int max_newton_used_ = 0;
};

/// 1-D radial problem on a true annulus a < r < b:
///   u_t = u_rr + u_r / r,  u_r(b) = f(t),  u_r(a) + gamma u(a) = g(t).
/// Ghost-point second-order differences, implicit Euler.
struct RadialSolution {
  std::vector<double> r;
  std::vector<std::vector<double>> u;  // per step, u[0] = 0
  double dt = 0;
};
RadialSolution radial_fd_solve(double a, double b, double gamma, const std::function<double(double)>& f,
                               const std::function<double(double)>& g, double T, int Nr, int steps);

}  // namespace calheat::oracle
