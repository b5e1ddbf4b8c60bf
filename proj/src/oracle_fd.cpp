#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/SparseLU>

#include "calheat/error.hpp"
#include "calheat/oracle.hpp"

namespace calheat::oracle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Monotone angle table of a star-shaped curve about a center.
class AngleTable {
 public:
  AngleTable(const geometry::BoundaryCurve& c, const Point& center) : c_(c), center_(center) {
    const int K = 4096;
    s_.resize(K + 1);
    a_.resize(K + 1);
    for (int m = 0; m <= K; ++m) {
      s_[m] = kTwoPi * m / K;
      const Point p = c.point(s_[m]) - center;
      if (p.norm() < 1e-12) throw InvalidArgument("oracle", "curve passes through the polar center");
      const double raw = std::atan2(p.y(), p.x());
      a_[m] = m == 0 ? raw : a_[m - 1] + std::remainder(raw - a_[m - 1], kTwoPi);
    }
    sigma_ = a_[K] > a_[0] ? 1.0 : -1.0;
    if (std::abs(std::abs(a_[K] - a_[0]) - kTwoPi) > 1e-6) {
      throw InvalidArgument("oracle", "polar center is not enclosed by the curve");
    }
    for (int m = 0; m < K; ++m) {
      if (sigma_ * (a_[m + 1] - a_[m]) <= 0.0) throw InvalidArgument("oracle", "curve is not star-shaped about the center");
    }
  }

  // Curve parameter whose polar angle is theta.
  double parameter(double theta) const {
    const double target = a_[0] + sigma_ * std::fmod(std::fmod(sigma_ * (theta - a_[0]), kTwoPi) + kTwoPi, kTwoPi);
    // Unwrapped angles are monotone in sigma direction.
    std::size_t lo = 0, hi = a_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (sigma_ * (a_[mid] - target) <= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    double sl = s_[lo], sh = s_[hi];
    const double anchor = a_[lo];
    auto angle = [&](double s) {
      const Point p = c_.point(s) - center_;
      return anchor + std::remainder(std::atan2(p.y(), p.x()) - anchor, kTwoPi);
    };
    for (int it = 0; it < 60; ++it) {
      const double sm = 0.5 * (sl + sh);
      if (sigma_ * (angle(sm) - target) <= 0.0)
        sl = sm;
      else
        sh = sm;
    }
    return 0.5 * (sl + sh);
  }

  // r(theta) and dr/dtheta.
  std::pair<double, double> radius(double theta) const {
    const double s = parameter(theta);
    const Point p = c_.point(s) - center_;
    const double r = p.norm();
    const Point er = p / r;
    const Point et(-er.y(), er.x());
    const Point dp = c_.tangent(s);
    return {r, r * dp.dot(er) / dp.dot(et)};
  }

 private:
  const geometry::BoundaryCurve& c_;
  Point center_;
  std::vector<double> s_, a_;
  double sigma_ = 1.0;
};

// Four-point periodic Lagrange interpolation at fractional index q.
double periodic_cubic(const std::function<double(int)>& v, int n, double q) {
  const int j = static_cast<int>(std::floor(q));
  const double x = q - j;
  auto at = [&](int m) { return v(((m % n) + n) % n); };
  const double w0 = -x * (x - 1) * (x - 2) / 6.0, w1 = (x + 1) * (x - 1) * (x - 2) / 2.0;
  const double w2 = -(x + 1) * x * (x - 2) / 2.0, w3 = (x + 1) * x * (x - 1) / 6.0;
  return w0 * at(j - 1) + w1 * at(j) + w2 * at(j + 1) + w3 * at(j + 2);
}

}  // namespace

FdProblem robin_problem(std::function<double(double, const Point&)> f, std::function<double(double, const Point&)> g,
                        std::function<double(double, const Point&)> gamma) {
  FdProblem p;
  p.f = std::move(f);
  p.g = std::move(g);
  p.G = [gamma](double t, const Point& x, double u) { return -gamma(t, x) * u; };
  p.dG = [gamma](double t, const Point& x, double) { return -gamma(t, x); };
  return p;
}

PolarProfile polar_profile(const geometry::BoundaryCurve& c, const Point& center, const std::vector<double>& theta) {
  const AngleTable table(c, center);
  const double d = 1e-4;
  PolarProfile p;
  for (double th : theta) {
    const auto [r, dr] = table.radius(th);
    const double drp = table.radius(th + d).second, drm = table.radius(th - d).second;
    p.r.push_back(r);
    p.dr.push_back(dr);
    p.d2r.push_back((drp - drm) / (2.0 * d));
  }
  return p;
}

FdAnnulusSolver::FdAnnulusSolver(const geometry::BoundaryCurve& outer, const geometry::BoundaryCurve& inner,
                                 const Point& center, double T, FdResolution res)
    : T_(T), res_(res), center_(center) {
  if (!(T > 0) || res.Nr < 4 || res.Ntheta < 8 || res.steps < 1) {
    throw InvalidArgument("oracle", "FD resolution needs Nr >= 4, Ntheta >= 8, steps >= 1 and T > 0");
  }
  for (int j = 0; j < res.Ntheta; ++j) theta_.push_back(kTwoPi * j / res.Ntheta);
  in_ = polar_profile(inner, center, theta_);
  out_ = polar_profile(outer, center, theta_);
  for (int j = 0; j < res.Ntheta; ++j) {
    if (!(out_.r[j] > in_.r[j])) throw InvalidArgument("oracle", "hole is not inside the outer curve along every ray");
  }
}

Point FdAnnulusSolver::node(int i, int j) const {
  const double rho = static_cast<double>(i) / (res_.Nr - 1);
  const double R = in_.r[j] + rho * (out_.r[j] - in_.r[j]);
  return center_ + R * Point(std::cos(theta_[j]), std::sin(theta_[j]));
}

void FdAnnulusSolver::solve(const FdProblem& p, int max_newton, double tol) {
  const int Nr = res_.Nr, Nth = res_.Ntheta, n = Nr * Nth;
  const double drho = 1.0 / (Nr - 1), dth = kTwoPi / Nth, dt = T_ / res_.steps;
  auto id = [&](int i, int j) { return i * Nth + ((j % Nth) + Nth) % Nth; };

  // Constant part of the step operator; inner rows get -dG on the diagonal per iteration.
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<double> nscale(2 * Nth);  // boundary row metric factors
  for (int j = 0; j < Nth; ++j) {
    const double D = out_.r[j] - in_.r[j], Dp = out_.dr[j] - in_.dr[j], Dpp = out_.d2r[j] - in_.d2r[j];
    for (int i = 0; i < Nr; ++i) {
      const double rho = i * drho;
      const double R = in_.r[j] + rho * D, Rt = in_.dr[j] + rho * Dp, Rtt = in_.d2r[j] + rho * Dpp;
      const double grr = (Rt * Rt + R * R) / (D * D * R * R), grt = -Rt / (D * R * R), gtt = 1.0 / (R * R);
      const int row = id(i, j);
      if (i == 0 || i == Nr - 1) {
        // d_n u = (g^rr u_rho + g^rt u_theta) / sqrt(g^rr), one-sided in rho.
        const double s = 1.0 / std::sqrt(grr);
        const double sgn = i == 0 ? 1.0 : -1.0;
        const int i1 = i == 0 ? 1 : Nr - 2, i2 = i == 0 ? 2 : Nr - 3;
        trip.emplace_back(row, id(i, j), s * grr * (-3.0 * sgn) / (2 * drho));
        trip.emplace_back(row, id(i1, j), s * grr * (4.0 * sgn) / (2 * drho));
        trip.emplace_back(row, id(i2, j), s * grr * (-1.0 * sgn) / (2 * drho));
        trip.emplace_back(row, id(i, j + 1), s * grt / (2 * dth));
        trip.emplace_back(row, id(i, j - 1), -s * grt / (2 * dth));
        continue;
      }
      const double N = Rt * Rt + R * R, Q = D * R;
      const double dJgrr = ((2 * Rt * Dp + 2 * R * D) * Q - N * D * D) / (Q * Q);
      const double dJgrt = -(Rtt * R - Rt * Rt) / (R * R);
      const double Lr = (dJgrr + dJgrt) / (D * R);
      const double cc = -dt;
      trip.emplace_back(row, row, 1.0 + cc * (-2.0 * grr / (drho * drho) - 2.0 * gtt / (dth * dth)));
      trip.emplace_back(row, id(i + 1, j), cc * (grr / (drho * drho) + Lr / (2 * drho)));
      trip.emplace_back(row, id(i - 1, j), cc * (grr / (drho * drho) - Lr / (2 * drho)));
      trip.emplace_back(row, id(i, j + 1), cc * gtt / (dth * dth));
      trip.emplace_back(row, id(i, j - 1), cc * gtt / (dth * dth));
      const double x = cc * 2.0 * grt / (4 * drho * dth);
      trip.emplace_back(row, id(i + 1, j + 1), x);
      trip.emplace_back(row, id(i + 1, j - 1), -x);
      trip.emplace_back(row, id(i - 1, j + 1), -x);
      trip.emplace_back(row, id(i - 1, j - 1), x);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();

  std::vector<Point> inner_pts(Nth), outer_pts(Nth);
  for (int j = 0; j < Nth; ++j) {
    inner_pts[j] = node(0, j);
    outer_pts[j] = node(Nr - 1, j);
  }
  // Diagonal positions of inner rows, for in-place Jacobian updates.
  std::vector<double*> diag(Nth);
  for (int j = 0; j < Nth; ++j) diag[j] = &A.coeffRef(id(0, j), id(0, j));
  std::vector<double> diag0(Nth);
  for (int j = 0; j < Nth; ++j) diag0[j] = *diag[j];

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  states_.assign(1, Eigen::VectorXd::Zero(n));
  max_newton_used_ = 0;
  for (int step = 1; step <= res_.steps; ++step) {
    const double t = step * dt;
    const Eigen::VectorXd& old = states_.back();
    Eigen::VectorXd b = old;
    for (int j = 0; j < Nth; ++j) {
      b(id(0, j)) = p.g ? p.g(t, inner_pts[j]) : 0.0;
      b(id(Nr - 1, j)) = p.f ? p.f(t, outer_pts[j]) : 0.0;
    }
    Eigen::VectorXd u = old;
    int it = 0;
    for (;; ++it) {
      Eigen::VectorXd F = A * u - b;
      for (int j = 0; j < Nth; ++j) F(id(0, j)) -= p.G ? p.G(t, inner_pts[j], u(id(0, j))) : 0.0;
      if (F.cwiseAbs().maxCoeff() < tol) break;
      if (it == max_newton) throw SolverError("oracle", "FD Newton failed at step " + std::to_string(step));
      for (int j = 0; j < Nth; ++j) *diag[j] = diag0[j] - (p.dG ? p.dG(t, inner_pts[j], u(id(0, j))) : 0.0);
      lu.factorize(A);
      if (lu.info() != Eigen::Success) throw SolverError("oracle", "FD step matrix is singular");
      const Eigen::VectorXd du = lu.solve(F);
      for (int j = 0; j < Nth; ++j) *diag[j] = diag0[j];
      if (!du.allFinite()) throw SolverError("oracle", "FD Newton produced non-finite values");
      u -= du;
      if (!p.G) {
        ++it;
        break;  // linear problem: one exact step
      }
    }
    max_newton_used_ = std::max(max_newton_used_, it);
    states_.push_back(std::move(u));
  }
}

double FdAnnulusSolver::angle_of(const Point& x) const {
  const Point d = x - center_;
  double a = std::atan2(d.y(), d.x());
  if (a < 0) a += kTwoPi;
  return a;
}

double FdAnnulusSolver::angular_interp(const Eigen::VectorXd& u, int i, double theta) const {
  const int Nth = res_.Ntheta;
  return periodic_cubic([&](int j) { return u(i * Nth + j); }, Nth, theta / (kTwoPi / Nth));
}

double FdAnnulusSolver::state_at(double t, const std::function<double(const Eigen::VectorXd&)>& sample) const {
  if (states_.empty()) throw InvalidArgument("oracle", "FD solver has not been run");
  const double q = std::clamp(t / dt(), 0.0, static_cast<double>(res_.steps));
  const int n0 = std::min(static_cast<int>(std::floor(q)), res_.steps - 1);
  const double w = q - n0;
  const double a = sample(states_[n0]);
  return w == 0.0 ? a : (1 - w) * a + w * sample(states_[n0 + 1]);
}

double FdAnnulusSolver::boundary_value(bool outer, double t, const Point& x) const {
  const int i = outer ? res_.Nr - 1 : 0;
  const double th = angle_of(x);
  return state_at(t, [&](const Eigen::VectorXd& u) { return angular_interp(u, i, th); });
}

double FdAnnulusSolver::value(double t, const Point& x) const {
  const int Nth = res_.Ntheta, Nr = res_.Nr;
  const double th = angle_of(x);
  const double q = th / (kTwoPi / Nth);
  const double rin = periodic_cubic([&](int j) { return in_.r[j]; }, Nth, q);
  const double rout = periodic_cubic([&](int j) { return out_.r[j]; }, Nth, q);
  const double rho = ((x - center_).norm() - rin) / (rout - rin);
  if (rho < 0.0 || rho > 1.0) throw InvalidArgument("oracle", "point is outside the FD annulus");
  const double qi = rho * (Nr - 1);
  const int i0 = std::clamp(static_cast<int>(std::floor(qi)) - 1, 0, Nr - 4);
  const double xr = qi - i0;
  return state_at(t, [&](const Eigen::VectorXd& u) {
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
      double w = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) w *= (xr - b) / (a - b);
      v += w * angular_interp(u, i0 + a, th);
    }
    return v;
  });
}

void FdAnnulusSolver::write_snapshots(std::ostream& out, int stride) const {
  out << "t,r_index,theta_index,x,y,value\n";
  out.precision(17);
  stride = std::max(stride, 1);
  for (std::size_t n = 0; n < states_.size(); n += stride) {
    for (int i = 0; i < res_.Nr; ++i)
      for (int j = 0; j < res_.Ntheta; ++j) {
        const Point x = node(i, j);
        out << n * dt() << ',' << i << ',' << j << ',' << x.x() << ',' << x.y() << ','
            << states_[n](i * res_.Ntheta + j) << '\n';
      }
  }
}

RadialSolution radial_fd_solve(double a, double b, double gamma, const std::function<double(double)>& f,
                               const std::function<double(double)>& g, double T, int Nr, int steps) {
  if (!(b > a && a > 0) || Nr < 3 || steps < 1) throw InvalidArgument("oracle", "bad radial problem");
  RadialSolution s;
  s.dt = T / steps;
  const double h = (b - a) / (Nr - 1);
  for (int i = 0; i < Nr; ++i) s.r.push_back(a + i * h);
  s.u.assign(1, std::vector<double>(Nr, 0.0));
  // Tridiagonal rows lo u_{i-1} + di u_i + up u_{i+1} = rhs, ghost points eliminated.
  std::vector<double> lo(Nr), di(Nr), up(Nr);
  for (int i = 0; i < Nr; ++i) {
    const double r = s.r[i];
    const double cm = 1.0 / (h * h) - 1.0 / (2 * h * r), cp = 1.0 / (h * h) + 1.0 / (2 * h * r);
    lo[i] = -s.dt * cm;
    up[i] = -s.dt * cp;
    di[i] = 1.0 + s.dt * 2.0 / (h * h);
    if (i == 0) {
      // u_r(a) = g - gamma u  =>  u_{-1} = u_1 - 2h (g - gamma u_0)
      up[i] += lo[i];
      di[i] += lo[i] * 2.0 * h * gamma;
    }
    if (i == Nr - 1) lo[i] += up[i];  // u_{N} = u_{N-2} + 2h f
  }
  for (int n = 1; n <= steps; ++n) {
    const double t = n * s.dt;
    std::vector<double> rhs = s.u.back();
    rhs[0] -= lo[0] * (-2.0 * h * g(t));
    rhs[Nr - 1] -= up[Nr - 1] * (2.0 * h * f(t));
    // Thomas algorithm.
    std::vector<double> c(Nr), d(Nr), x(Nr);
    c[0] = up[0] / di[0];
    d[0] = rhs[0] / di[0];
    for (int i = 1; i < Nr; ++i) {
      const double m = di[i] - lo[i] * c[i - 1];
      c[i] = i < Nr - 1 ? up[i] / m : 0.0;
      d[i] = (rhs[i] - lo[i] * d[i - 1]) / m;
    }
    x[Nr - 1] = d[Nr - 1];
    for (int i = Nr - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
    s.u.push_back(std::move(x));
  }
  return s;
}

}  // namespace calheat::oracle
