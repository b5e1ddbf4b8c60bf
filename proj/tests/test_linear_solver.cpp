#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "calheat/error.hpp"
#include "calheat/linear_solver.hpp"
#include "calheat/oracle.hpp"

using namespace calheat;
using namespace calheat::linear;
using geometry::BoundaryCurve;
using geometry::Point;

namespace {

struct Setup {
  grid::SpaceTimeGrid g;
  potentials::LayerOperatorSet ops;
};

Setup make(int Nt, int M, double T = 0.5) {
  const auto g = grid::make_grid(T, Nt, M, M);
  const auto no = grid::discretize(BoundaryCurve::circle({0, 0}, 1), M);
  const auto ni = grid::discretize_image(
      geometry::ShapeMap::identity(BoundaryCurve::fourier({0.05, 0}, 0.35, {0, 0, 0.03}, {0, 0.02})), M);
  return {g, potentials::assemble_operators(no, ni, g)};
}

PanelMatrix random_panels(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  PanelMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = U(rng);
  return m;
}

double maxabs(const PanelMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("J_beta is linear and affine in beta") {
  auto s = make(6, 16);
  std::mt19937_64 rng(1);
  const Densities zero = Densities::zeros(s.g);
  const Densities out = apply_Jbeta(s.ops, PanelMatrix::Zero(6, 16), zero);
  CHECK(maxabs(out.mu) == 0.0);
  CHECK(maxabs(out.eta) == 0.0);

  const Densities d{random_panels(6, 16, rng), random_panels(6, 16, rng)};
  const PanelMatrix beta = random_panels(6, 16, rng);
  const double c = 2.7;
  const auto J1 = apply_Jbeta(s.ops, beta, d);
  const auto Jc = apply_Jbeta(s.ops, c * beta, d);
  const auto tr = traces(s.ops, d);
  const PanelMatrix expected = -(c - 1) * beta.cwiseProduct(tr.inner);
  CHECK(maxabs(Jc.mu - J1.mu) == 0.0);
  CHECK(maxabs(Jc.eta - J1.eta - expected) < 1e-12);
}

TEST_CASE("zero data gives exactly zero densities") {
  auto s = make(8, 16);
  for (double gamma : {0.0, 1.0, 25.0}) {
    const auto p = LinearMixedProblem::from_gamma(PanelMatrix::Constant(8, 16, gamma), PanelMatrix::Zero(8, 16),
                                                  PanelMatrix::Zero(8, 16));
    const auto d = march_solve(s.ops, p);
    CHECK((d.mu.array() == 0.0).all());
    CHECK((d.eta.array() == 0.0).all());
  }
}

TEST_CASE("marching agrees with the global space-time solve") {
  auto s = make(6, 16);
  std::mt19937_64 rng(2);
  const auto p = LinearMixedProblem::from_gamma(random_panels(6, 16, rng).cwiseAbs(), random_panels(6, 16, rng),
                                                random_panels(6, 16, rng));
  const auto dm = march_solve(s.ops, p);
  const auto dg = global_solve(s.ops, p);
  CHECK(maxabs(dm.mu - dg.mu) < 1e-10);
  CHECK(maxabs(dm.eta - dg.eta) < 1e-10);
  CHECK(system_residual(s.ops, p, dm) < 1e-10);
  CHECK(step_rcond(s.ops, p.beta.row(0).transpose()) > 1e-6);
}

TEST_CASE("linearity and causality of the solution map") {
  auto s = make(10, 16);
  std::mt19937_64 rng(4);
  const PanelMatrix gamma = PanelMatrix::Constant(10, 16, 0.8);
  const PanelMatrix zero = PanelMatrix::Zero(10, 16);
  const PanelMatrix f1 = random_panels(10, 16, rng), f2 = random_panels(10, 16, rng);
  const PanelMatrix g1 = random_panels(10, 16, rng);
  const double a = -1.7;
  const auto d1 = march_solve(s.ops, LinearMixedProblem::from_gamma(gamma, f1, g1));
  const auto d2 = march_solve(s.ops, LinearMixedProblem::from_gamma(gamma, f2, zero));
  const auto d12 = march_solve(s.ops, LinearMixedProblem::from_gamma(gamma, a * f1 + f2, a * g1));
  CHECK(maxabs(d12.mu - (a * d1.mu + d2.mu)) < 1e-12 * std::max(1.0, maxabs(d12.mu)));
  CHECK(maxabs(d12.eta - (a * d1.eta + d2.eta)) < 1e-12 * std::max(1.0, maxabs(d12.eta)));

  for (int k0 : {1, 4, 9}) {
    PanelMatrix ft = f1;
    ft.bottomRows(10 - k0).setConstant(3.0);
    const auto dt = march_solve(s.ops, LinearMixedProblem::from_gamma(gamma, ft, g1));
    CHECK((dt.mu.topRows(k0).array() == d1.mu.topRows(k0).array()).all());
    CHECK((dt.eta.topRows(k0).array() == d1.eta.topRows(k0).array()).all());
  }
}

TEST_CASE("stacked marching matches column-by-column solves") {
  auto s = make(5, 16);
  std::mt19937_64 rng(6);
  const PanelMatrix gamma = PanelMatrix::Constant(5, 16, 1.3);
  std::vector<Eigen::MatrixXd> cols(5);
  std::vector<PanelMatrix> fs(3, PanelMatrix(5, 16));
  for (auto& f : fs) f = random_panels(5, 16, rng);
  for (int k = 0; k < 5; ++k) {
    cols[k].resize(16, 3);
    for (int r = 0; r < 3; ++r) cols[k].col(r) = fs[r].row(k).transpose();
  }
  const auto st = march_solve_stacked(s.ops, -gamma, cols);
  for (int r = 0; r < 3; ++r) {
    const auto d = march_solve(s.ops, LinearMixedProblem::from_gamma(gamma, fs[r], PanelMatrix::Zero(5, 16)));
    for (int k = 0; k < 5; ++k) {
      CHECK((st.mu[k].col(r) - d.mu.row(k).transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((st.eta[k].col(r) - d.eta.row(k).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("manufactured solution is recovered") {
  auto s = make(32, 32);
  const PanelMatrix gamma = PanelMatrix::Constant(32, 32, 1.0);
  const auto md = oracle::manufactured_data(oracle::ManufacturedField::source({0.1, 0.05}), s.ops.outer,
                                            s.ops.inner, s.g, gamma);
  const auto p = LinearMixedProblem::from_gamma(gamma, md.f, md.g);
  const auto d = march_solve(s.ops, p);
  const auto tr = traces(s.ops, d);
  const double scale = std::max(maxabs(md.trace_outer), maxabs(md.trace_inner));
  const double err = std::max(maxabs(tr.outer - md.trace_outer), maxabs(tr.inner - md.trace_inner)) / scale;
  CHECK(err < 2e-2);
  // J_beta of the solution reproduces the boundary data.
  const auto J = apply_Jbeta(s.ops, p.beta, d);
  CHECK(maxabs(J.mu - md.f) < 1e-10);
  CHECK(maxabs(J.eta - md.g) < 1e-10);
}

TEST_CASE("problem validation and export") {
  auto s = make(4, 16);
  const auto bad = LinearMixedProblem::from_gamma(PanelMatrix::Zero(4, 16), PanelMatrix::Zero(3, 16),
                                                  PanelMatrix::Zero(4, 16));
  CHECK_THROWS_AS(march_solve(s.ops, bad), InvalidArgument);
  PanelMatrix nan = PanelMatrix::Zero(4, 16);
  nan(1, 1) = std::nan("");
  CHECK_THROWS_AS(march_solve(s.ops, LinearMixedProblem::from_gamma(nan, PanelMatrix::Zero(4, 16), PanelMatrix::Zero(4, 16))),
                  InvalidArgument);

  std::ostringstream out;
  write_trace_csv(out, PanelMatrix::Ones(1, 2), PanelMatrix::Zero(1, 2));
  CHECK(out.str().rfind("panel,node,boundary,value\n", 0) == 0);
  CHECK(out.str().find("0,1,outer,1") != std::string::npos);
  CHECK(out.str().find("0,0,inner,0") != std::string::npos);
}
