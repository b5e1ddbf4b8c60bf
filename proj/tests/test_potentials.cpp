#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/LU>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "calheat/error.hpp"
#include "calheat/kernel.hpp"
#include "calheat/linear_solver.hpp"
#include "calheat/oracle.hpp"
#include "calheat/potentials.hpp"

using namespace calheat;
using namespace calheat::potentials;
using geometry::BoundaryCurve;
using geometry::Point;
constexpr double pi = std::numbers::pi;

namespace {

double S(double s, const Point& r) { return s <= 0 ? 0.0 : std::exp(-r.squaredNorm() / (4 * s)) / (4 * pi * s); }

// Adaptive space-time quadrature of kernel(s, y) over [s0, s1] x arc panel j.
template <class K>
double panel_oracle(const NodeSet& n, int j, double s0, double s1, K kernel) {
  using boost::math::quadrature::gauss_kronrod;
  auto outer = [&](double th) {
    const Point y = n.curve.point(th);
    auto inner = [&](double s) { return kernel(s, y); };
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(inner, s0, s1, 1e-13) * n.curve.speed(th);
  };
  return gauss_kronrod<double, 31>::integrate(outer, n.theta[j] - 0.5 * n.h, n.theta[j] + 0.5 * n.h, 12, 1e-13);
}

PanelMatrix random_panels(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  PanelMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = U(rng);
  return m;
}

}  // namespace

TEST_CASE("far single-layer entries match adaptive space-time quadrature") {
  const auto g = grid::make_grid(1.0, 4, 32, 32);
  const auto n = grid::discretize(BoundaryCurve::ellipse({0, 0}, 1.2, 0.8, 0.3), 32);
  const auto V = assemble_V(n, g, 2);
  const auto W = assemble_Wstar(n, g, 2);
  for (int lag : {0, 1}) {
    const auto [s0, s1] = lag_interval(g, lag);
    for (auto [i, j] : {std::pair{0, 16}, std::pair{3, 11}, std::pair{5, 28}}) {
      CAPTURE(lag);
      CAPTURE(i);
      CAPTURE(j);
      const Point x = n.points[i], nu = n.normals[i];
      const double v = panel_oracle(n, j, s0, s1, [&](double s, const Point& y) { return S(s, x - y); });
      CHECK(V.block(lag)(i, j) == doctest::Approx(v).epsilon(1e-8));
      const double w = panel_oracle(n, j, s0, s1, [&](double s, const Point& y) {
        return s <= 0 ? 0.0 : -nu.dot(x - y) / (2 * s) * S(s, x - y);
      });
      CHECK(W.block(lag)(i, j) == doctest::Approx(w).epsilon(1e-8));
    }
  }
  // Nodal far-lag entries reduce to the closed-form time integral times the arc weight.
  const auto [s0, s1] = lag_interval(g, 3);
  CHECK(V.block(3)(0, 16) == doctest::Approx(n.weights[16] * kernel::panel_time_integral((n.points[0] - n.points[16]).norm(), s0, s1)));
}

TEST_CASE("single-layer operator basic properties") {
  const auto g = grid::make_grid(0.5, 6, 32, 32);
  const auto n = grid::discretize(BoundaryCurve::fourier({0, 0}, 1, {0.1}, {0, 0.05}), 32);
  const auto V = assemble_V(n, g, resolve_near_lags(g, {&n}, {}));
  for (int l = 0; l < V.lags(); ++l) {
    CHECK(V.block(l).allFinite());
    CHECK(V.block(l).minCoeff() >= 0.0);
  }
  CHECK(V.apply(PanelMatrix::Zero(6, 32)).cwiseAbs().maxCoeff() == 0.0);

  // Zero-lag block is invertible and solves accurately.
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd V0 = V.block(0);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(V0);
  const Eigen::VectorXd b = random_panels(1, 32, rng).transpose();
  const Eigen::VectorXd x = lu.solve(b);
  CHECK((V0 * x - b).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(lu.rcond() > 1e-8);
}

TEST_CASE("rotational symmetry on the unit circle") {
  const auto g = grid::make_grid(0.1, 1, 32, 32);
  const auto n = grid::discretize(BoundaryCurve::circle({0, 0}, 1), 32);
  const auto V = assemble_V(n, g, 1);
  const PanelMatrix out = V.apply(PanelMatrix::Ones(1, 32));
  CHECK(out.maxCoeff() - out.minCoeff() < 1e-13 * out.maxCoeff());
}

TEST_CASE("discrete causality of layer operators") {
  const auto g = grid::make_grid(0.5, 8, 16, 16);
  const auto n = grid::discretize(BoundaryCurve::circle({0, 0}, 1), 16);
  const auto V = assemble_V(n, g, 2);
  const auto W = assemble_Wstar(n, g, 2);
  std::mt19937_64 rng(5);
  PanelMatrix d = random_panels(8, 16, rng);
  d.topRows(5).setZero();
  for (const auto* op : {&V, &W}) {
    const PanelMatrix out = op->apply(d);
    CHECK((out.topRows(5).array() == 0.0).all());
    CHECK(out.bottomRows(3).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("cross blocks: adaptive oracle and translation invariance") {
  const auto g = grid::make_grid(0.5, 4, 32, 24);
  const auto outer = BoundaryCurve::circle({0, 0}, 1);
  const auto inner = BoundaryCurve::ellipse({0.1, 0}, 0.4, 0.3);
  const auto no = grid::discretize(outer, 32);
  const auto ni = grid::discretize(inner, 24);
  const auto Ct = assemble_cross(ni, no, g, CrossMode::Trace, 2);
  const auto Cn = assemble_cross(ni, no, g, CrossMode::NormalDerivative, 2);
  const auto [s0, s1] = lag_interval(g, 0);
  for (auto [i, j] : {std::pair{0, 0}, std::pair{7, 12}, std::pair{20, 5}}) {
    const Point x = no.points[i], nu = no.normals[i];
    CHECK(Ct.block(0)(i, j) ==
          doctest::Approx(panel_oracle(ni, j, s0, s1, [&](double s, const Point& y) { return S(s, x - y); })).epsilon(1e-8));
    CHECK(Cn.block(0)(i, j) == doctest::Approx(panel_oracle(ni, j, s0, s1, [&](double s, const Point& y) {
                                                 return s <= 0 ? 0.0 : -nu.dot(x - y) / (2 * s) * S(s, x - y);
                                               })).epsilon(1e-8));
  }

  const Point v(0.37, -1.21);
  const auto no2 = grid::discretize(outer.translated(v), 32);
  const auto ni2 = grid::discretize(inner.translated(v), 24);
  const auto Ct2 = assemble_cross(ni2, no2, g, CrossMode::Trace, 2);
  const auto Cn2 = assemble_cross(ni2, no2, g, CrossMode::NormalDerivative, 2);
  for (int l = 0; l < 4; ++l) {
    const double scale = std::max(Ct.block(l).cwiseAbs().maxCoeff(), Cn.block(l).cwiseAbs().maxCoeff());
    CHECK((Ct.block(l) - Ct2.block(l)).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1.0));
    CHECK((Cn.block(l) - Cn2.block(l)).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1.0));
  }
  CHECK(Ct.apply(PanelMatrix::Zero(4, 24)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("intersecting curves are rejected by cross assembly") {
  const auto g = grid::make_grid(0.5, 2, 16, 16);
  const auto a = grid::discretize(BoundaryCurve::circle({0, 0}, 1), 16);
  const auto b = grid::discretize(BoundaryCurve::circle({0.5, 0}, 1), 16);
  CHECK_THROWS_AS(assemble_cross(a, b, g, CrossMode::Trace, 1), InvalidArgument);
}

TEST_CASE("jump relations of the single layer on the unit circle") {
  const int N = 32;
  const auto g = grid::make_grid(0.5, N, N, N);
  const auto n = grid::discretize(BoundaryCurve::circle({0, 0}, 1), N);
  const int near = resolve_near_lags(g, {&n}, {});
  const auto V = assemble_V(n, g, near);
  const auto W = assemble_Wstar(n, g, near);
  PanelMatrix mu(N, N);
  for (int k = 0; k < N; ++k)
    for (int j = 0; j < N; ++j) mu(k, j) = g.time(k) * (1 + std::cos(n.theta[j]));
  const PanelMatrix Vm = V.apply(mu), Wm = W.apply(mu);
  const SingleLayerEvaluator u(n, g, mu, near);
  const double delta = 0.02 * std::min(n.max_spacing(), std::sqrt(g.dt));
  double err = 0, scale = 0;
  for (int k : {7, 15, 31}) {
    for (int i = 0; i < N; i += 3) {
      const Point x = n.points[i], nu = n.normals[i];
      const double t = g.time(k);
      const double din = (3 * Vm(k, i) - 4 * u(t, x - delta * nu) + u(t, x - 2 * delta * nu)) / (2 * delta);
      const double dout = -(3 * Vm(k, i) - 4 * u(t, x + delta * nu) + u(t, x + 2 * delta * nu)) / (2 * delta);
      err = std::max({err, std::abs(din - (0.5 * mu(k, i) + Wm(k, i))), std::abs(dout - (-0.5 * mu(k, i) + Wm(k, i)))});
      scale = std::max(scale, std::abs(0.5 * mu(k, i) + Wm(k, i)));
    }
  }
  CHECK(err / scale < 2e-2);
  // Off-curve evaluation is continuous onto the trace.
  CHECK(u(g.time(20), n.points[4] * (1 - 1e-9)) == doctest::Approx(Vm(20, 4)).epsilon(1e-4));
}

TEST_CASE("field evaluation") {
  const int Nt = 32, M = 64;
  const auto g = grid::make_grid(0.5, Nt, M, M);
  const auto no = grid::discretize(BoundaryCurve::circle({0, 0}, 1), M);
  const auto ni = grid::discretize(BoundaryCurve::circle({0, 0}, 0.35), M);
  const auto ops = assemble_operators(no, ni, g);

  FieldEvaluator zero(ops, PanelMatrix::Zero(Nt, M), PanelMatrix::Zero(Nt, M));
  CHECK(zero(0.3, Point(0.65, 0.1)) == 0.0);
  CHECK_THROWS_AS(zero(0.3, Point(0.98, 0.0)), InvalidArgument);
  try {
    zero(0.3, Point(0.4, 0.0));
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("delta_eval") != std::string::npos);
  }

  // Densities on panels that start after t do not influence u(t, x).
  std::mt19937_64 rng(9);
  PanelMatrix mu = random_panels(Nt, M, rng), eta = random_panels(Nt, M, rng);
  const double t = 6.2 * g.dt;
  FieldEvaluator a(ops, mu, eta);
  mu.bottomRows(Nt - 7).setConstant(5.0);
  eta.bottomRows(Nt - 7).setConstant(-3.0);
  FieldEvaluator b(ops, mu, eta);
  CHECK(a(t, Point(0.6, 0.2)) == b(t, Point(0.6, 0.2)));

  // Solved densities reproduce a known caloric field in the interior.
  const PanelMatrix gamma = PanelMatrix::Constant(Nt, M, 1.0);
  const auto field = oracle::ManufacturedField::source({0.05, 0.02});
  const auto md = oracle::manufactured_data(field, no, ni, g, gamma);
  const auto d = linear::march_solve(ops, linear::LinearMixedProblem::from_gamma(gamma, md.f, md.g));
  FieldEvaluator u(ops, d.mu, d.eta);
  for (const Point x : {Point(0.68, 0.0), Point(-0.3, 0.6), Point(0.0, -0.68)}) {
    const double t1 = g.time(Nt - 1);
    CHECK(std::abs(u(t1, x) - field.value(t1, x)) < 2e-2 * md.signal);
  }
  const auto vals = u.evaluate({{0.2, Point(0.68, 0.0)}, {0.4, Point(0.0, 0.68)}});
  CHECK(vals[0] == u(0.2, Point(0.68, 0.0)));
}

TEST_CASE("CALB1 block dump round trip") {
  std::vector<Eigen::MatrixXd> blocks{Eigen::MatrixXd::Random(3, 4), Eigen::MatrixXd::Random(3, 4)};
  std::stringstream io;
  write_blocks(io, blocks);
  const std::string bytes = io.str();
  CHECK(bytes.substr(0, 5) == "CALB1");
  CHECK(bytes.size() == 5 + 3 * 8 + 2 * 12 * 8);
  // Row-major within a block: the second stored value is (0, 1).
  double v;
  std::memcpy(&v, bytes.data() + 5 + 24 + 8, 8);
  CHECK(v == blocks[0](0, 1));
  const auto back = read_blocks(io);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == blocks[0]);
  CHECK(back[1] == blocks[1]);
  std::stringstream bad("CALB0xxxx");
  CHECK_THROWS_AS(read_blocks(bad), InvalidArgument);
}
