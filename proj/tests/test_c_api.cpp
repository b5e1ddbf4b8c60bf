#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "calheat/calheat.h"

namespace {

struct Fixture {
  calheat_curve* outer = nullptr;
  calheat_curve* hole = nullptr;
  calheat_shape* shape = nullptr;
  calheat_solver* solver = nullptr;
  int Nt = 0, Mo = 0, Mi = 0;

  explicit Fixture(int N = 8, int M = 16) {
    const double cos_c[] = {0.0, 0.0, 0.03};
    REQUIRE(calheat_curve_circle(0, 0, 1, &outer) == CALHEAT_OK);
    REQUIRE(calheat_curve_fourier(0, 0, 0.4, cos_c, 3, nullptr, 0, &hole) == CALHEAT_OK);
    REQUIRE(calheat_shape_identity(hole, &shape) == CALHEAT_OK);
    REQUIRE(calheat_solver_create(outer, shape, 0.5, N, M, M, &solver) == CALHEAT_OK);
    calheat_solver_sizes(solver, &Nt, &Mo, &Mi);
  }
  ~Fixture() {
    calheat_solver_free(solver);
    calheat_shape_free(shape);
    calheat_curve_free(hole);
    calheat_curve_free(outer);
  }

  std::vector<double> outer_data() const {
    std::vector<double> xy(2 * Mo), f(Nt * Mo);
    calheat_solver_nodes(solver, 0, xy.data());
    for (int k = 0; k < Nt; ++k)
      for (int j = 0; j < Mo; ++j) f[k * Mo + j] = calheat_solver_time(solver, k) * (1 + 0.5 * xy[2 * j]);
    return f;
  }
};

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("version and thread settings") {
  CHECK(std::strlen(calheat_version()) > 0);
  CHECK(calheat_set_threads(1) == CALHEAT_OK);
  CHECK(calheat_set_threads(0) == CALHEAT_INVALID_ARGUMENT);
  CHECK(std::strlen(calheat_last_error()) > 0);
}

TEST_CASE("handles and sizes") {
  Fixture fx;
  CHECK(fx.Nt == 8);
  CHECK(fx.Mo == 16);
  CHECK(fx.Mi == 16);
  CHECK(calheat_solver_time(fx.solver, 0) == doctest::Approx(0.5 / 8 * 0.5));
  std::vector<double> xy(2 * fx.Mo);
  REQUIRE(calheat_solver_nodes(fx.solver, 0, xy.data()) == CALHEAT_OK);
  CHECK(std::hypot(xy[0], xy[1]) == doctest::Approx(1.0));
}

TEST_CASE("invalid arguments map to status codes") {
  calheat_curve* c = nullptr;
  CHECK(calheat_curve_circle(0, 0, -1, &c) == CALHEAT_INVALID_ARGUMENT);
  CHECK(c == nullptr);
  CHECK(std::string(calheat_last_error()).find("radius") != std::string::npos);
  CHECK(calheat_curve_circle(0, 0, 1, nullptr) == CALHEAT_INVALID_ARGUMENT);

  calheat_curve *outer = nullptr, *big = nullptr;
  calheat_shape* shape = nullptr;
  calheat_solver* s = nullptr;
  REQUIRE(calheat_curve_circle(0, 0, 1, &outer) == CALHEAT_OK);
  REQUIRE(calheat_curve_circle(0.5, 0, 0.8, &big) == CALHEAT_OK);
  REQUIRE(calheat_shape_identity(big, &shape) == CALHEAT_OK);
  CHECK(calheat_solver_create(outer, shape, 0.5, 4, 16, 16, &s) == CALHEAT_INVALID_ARGUMENT);
  CHECK(s == nullptr);
  calheat_shape_free(shape);
  calheat_curve_free(big);
  calheat_curve_free(outer);

  calheat_config* cfg = nullptr;
  CHECK(calheat_config_parse("Nt = 4\nNt = 5\n", &cfg) == CALHEAT_CONFIG_ERROR);
  CHECK(calheat_config_load("/nonexistent/file.cfg", &cfg) == CALHEAT_CONFIG_ERROR);
}

TEST_CASE("linear and nonlinear solves agree on a linear law") {
  Fixture fx;
  const auto f = fx.outer_data();
  std::vector<double> gamma(fx.Nt * fx.Mi, 1.0), g(fx.Nt * fx.Mi, 0.0);
  std::vector<double> mu(fx.Nt * fx.Mo), eta(fx.Nt * fx.Mi);
  REQUIRE(calheat_solver_solve_linear(fx.solver, gamma.data(), f.data(), g.data(), mu.data(), eta.data()) ==
          CALHEAT_OK);

  std::vector<double> coeff(2 * fx.Nt * fx.Mi, 0.0);
  for (int i = 0; i < fx.Nt * fx.Mi; ++i) coeff[fx.Nt * fx.Mi + i] = -1.0;
  std::vector<double> mu2(mu.size()), eta2(eta.size());
  int iterations = -1;
  REQUIRE(calheat_solver_solve_nonlinear(fx.solver, 1, coeff.data(), f.data(), 1e-12, 20, mu2.data(), eta2.data(),
                                         &iterations) == CALHEAT_OK);
  CHECK(iterations >= 1);
  CHECK(iterations <= 2);
  CHECK(max_diff(mu, mu2) < 1e-10);
  CHECK(max_diff(eta, eta2) < 1e-10);

  // The traces of the linear solution reproduce the outer trace of the NtD map.
  std::vector<double> tr_o(fx.Nt * fx.Mo), tr_i(fx.Nt * fx.Mi), u(fx.Nt * fx.Mo);
  REQUIRE(calheat_solver_traces(fx.solver, mu.data(), eta.data(), tr_o.data(), tr_i.data()) == CALHEAT_OK);
  calheat_ntd* ntd = nullptr;
  REQUIRE(calheat_ntd_create(fx.solver, gamma.data(), &ntd) == CALHEAT_OK);
  REQUIRE(calheat_ntd_apply(ntd, f.data(), u.data()) == CALHEAT_OK);
  CHECK(max_diff(u, tr_o) < 1e-10);

  std::vector<double> block(fx.Mo * fx.Mo);
  REQUIRE(calheat_ntd_block(ntd, 1, 3, block.data()) == CALHEAT_OK);
  CHECK(max_diff(block, std::vector<double>(block.size(), 0.0)) == 0.0);
  REQUIRE(calheat_ntd_block(ntd, 3, 1, block.data()) == CALHEAT_OK);
  CHECK(max_diff(block, std::vector<double>(block.size(), 0.0)) > 0.0);
  CHECK(calheat_ntd_block(ntd, fx.Nt, 0, block.data()) == CALHEAT_INVALID_ARGUMENT);
  calheat_ntd_free(ntd);

}

TEST_CASE("interior evaluation honours the boundary clearance") {
  Fixture fx(32, 64);
  const auto f = fx.outer_data();
  std::vector<double> gamma(fx.Nt * fx.Mi, 1.0), g(fx.Nt * fx.Mi, 0.0);
  std::vector<double> mu(fx.Nt * fx.Mo), eta(fx.Nt * fx.Mi);
  REQUIRE(calheat_solver_solve_linear(fx.solver, gamma.data(), f.data(), g.data(), mu.data(), eta.data()) ==
          CALHEAT_OK);
  const double t[] = {0.5, 0.25};
  const double xy[] = {0.0, 0.7, -0.7, 0.0};
  double values[2] = {0, 0};
  CHECK(calheat_solver_eval(fx.solver, mu.data(), eta.data(), 2, t, xy, values) == CALHEAT_OK);
  CHECK(values[0] > 0.0);
  CHECK(values[0] > values[1]);
  const double close[] = {0.0, 0.99};
  CHECK(calheat_solver_eval(fx.solver, mu.data(), eta.data(), 1, t, close, values) == CALHEAT_INVALID_ARGUMENT);
}

TEST_CASE("nonconvergence is a solver error") {
  Fixture fx;
  auto f = fx.outer_data();
  for (auto& v : f) v *= 40;
  std::vector<double> coeff(4 * fx.Nt * fx.Mi, 0.0);
  for (int i = 0; i < fx.Nt * fx.Mi; ++i) coeff[3 * fx.Nt * fx.Mi + i] = 50.0;
  std::vector<double> mu(fx.Nt * fx.Mo), eta(fx.Nt * fx.Mi);
  int iterations = 0;
  CHECK(calheat_solver_solve_nonlinear(fx.solver, 3, coeff.data(), f.data(), 1e-12, 2, mu.data(), eta.data(),
                                       &iterations) == CALHEAT_SOLVER_ERROR);
}

TEST_CASE("shape perturbations") {
  calheat_curve* hole = nullptr;
  calheat_shape *base = nullptr, *grown = nullptr, *bumped = nullptr;
  REQUIRE(calheat_curve_circle(0, 0, 0.4, &hole) == CALHEAT_OK);
  REQUIRE(calheat_shape_identity(hole, &base) == CALHEAT_OK);
  const double L[] = {1, 0, 0, 1};
  const double b[] = {0, 0};
  CHECK(calheat_shape_perturb_affine(base, L, b, 0.1, &grown) == CALHEAT_OK);
  CHECK(calheat_shape_perturb_radial(base, 3, 0.05, 0.0, 1.0, &bumped) == CALHEAT_OK);
  calheat_curve* outer = nullptr;
  calheat_solver* s = nullptr;
  REQUIRE(calheat_curve_circle(0, 0, 1, &outer) == CALHEAT_OK);
  REQUIRE(calheat_solver_create(outer, grown, 0.5, 2, 16, 16, &s) == CALHEAT_OK);
  std::vector<double> xy(32);
  calheat_solver_nodes(s, 1, xy.data());
  CHECK(std::hypot(xy[0], xy[1]) == doctest::Approx(0.44));
  calheat_solver_free(s);
  calheat_curve_free(outer);
  calheat_shape_free(bumped);
  calheat_shape_free(grown);
  calheat_shape_free(base);
  calheat_curve_free(hole);
}

TEST_CASE("command runs through the C interface") {
  calheat_config* cfg = nullptr;
  REQUIRE(calheat_config_parse("outer = circle 0 0 1\ninner = circle 0 0 0.4\nT = 0.5\nNt = 4\n"
                               "M_outer = 16\nM_inner = 16\nf_time = 0\nf_space = 0 0 0\n",
                               &cfg) == CALHEAT_OK);
  const auto dir = std::filesystem::temp_directory_path() / "calheat_c_api_test";
  int failed = -1;
  CHECK(calheat_run(cfg, "ntd", dir.c_str(), 5, &failed) == CALHEAT_OK);
  CHECK(failed == 0);
  CHECK(std::filesystem::exists(dir / "ntd_norms.csv"));
  CHECK(calheat_run(cfg, "bogus", dir.c_str(), 5, &failed) == CALHEAT_INVALID_ARGUMENT);
  CHECK(calheat_config_set(cfg, "Nt", "0") == CALHEAT_OK);
  CHECK(calheat_run(cfg, "ntd", dir.c_str(), 5, &failed) != CALHEAT_OK);
  calheat_config_free(cfg);
  std::filesystem::remove_all(dir);
}
