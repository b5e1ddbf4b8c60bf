#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "calheat/driver.hpp"

using namespace calheat;
using calheat::config::Config;
using calheat::config::ConfigError;
namespace fs = std::filesystem;

namespace {

const fs::path config_dir = CALHEAT_CONFIG_DIR;

Config zero_config() { return Config::load(config_dir / "zero.cfg"); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const driver::Assertion* find(const driver::RunReport& r, const std::string& id) {
  const auto it = std::find_if(r.assertions.begin(), r.assertions.end(), [&](const auto& a) { return a.id == id; });
  return it == r.assertions.end() ? nullptr : &*it;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / "calheat_driver_test";
  TempDir() { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("Neumann datum") {
  driver::NeumannDatum f;
  f.time_poly = {0, 2, 1};
  f.space = {1, 0.5, -1};
  CHECK(f(0.5, {0.2, 0.1}) == doctest::Approx((1 + 0.25) * (1 + 0.1 - 0.1)));
  CHECK(f(0.0, {0.3, 0.4}) == 0.0);
  CHECK_FALSE(f.is_zero());
  f.space = {0, 0, 0};
  CHECK(f.is_zero());
}

TEST_CASE("setup loading from the shipped configurations") {
  const auto s = driver::load_setup(zero_config());
  CHECK(s.Nt == 16);
  CHECK(s.M_outer == 32);
  CHECK(s.f.is_zero());
  CHECK(s.G_homogeneous);
  const auto d = driver::load_setup(Config::load(config_dir / "default.cfg"));
  CHECK(d.Nt == 64);
  CHECK(d.interior.size() == 4);
  CHECK(d.levels == std::vector<int>{16, 32, 64});
}

TEST_CASE("setup validation") {
  auto bad = [](const std::string& key, const std::string& value) {
    auto c = zero_config();
    c.set(key, value);
    CHECK_THROWS_AS(driver::load_setup(c), ConfigError);
  };
  bad("f_time", "1 2");
  bad("f_space", "1 2");
  bad("G_a0", "0.5");
  bad("G_degree", "12");
  bad("shape_direction", "twist 1");
  bad("levels", "16 33");
  bad("levels", "4 8");
  bad("shape_eps", "1e-2 -1e-3");
  bad("manufactured_x0", "0.1");
  bad("interior_points", "0.5 0.7");
  bad("outer", "nosuchcurve");
  bad("Nt", "many");
}

TEST_CASE("inadmissible holes are rejected when a run builds the geometry") {
  auto c = zero_config();
  c.set("inner", "circle 0.8 0 0.4");
  TempDir tmp;
  CHECK_THROWS_AS(driver::run(c, "ntd", tmp.path, 1), InvalidArgument);
}

TEST_CASE("nonlinear run on zero data writes its outputs") {
  TempDir tmp;
  const auto r = driver::run(zero_config(), "solve-nonlinear", tmp.path, 3);
  CHECK(r.failures() == 0);
  const auto* z = find(r, "NL-ZERO-SOLUTION");
  REQUIRE(z != nullptr);
  CHECK(z->passed);
  for (const char* name : {"densities.csv", "traces.csv", "newton.csv", "report.txt"})
    CHECK(fs::exists(tmp.path / name));
  const auto report = slurp(tmp.path / "report.txt");
  CHECK(report.find("command: solve-nonlinear") != std::string::npos);
  CHECK(report.find("seed: 3") != std::string::npos);
  CHECK(report.find("[PASS] NL-ZERO-SOLUTION") != std::string::npos);
  CHECK(report.find("0 failed") != std::string::npos);
}

TEST_CASE("linear run in Neumann mode on zero data") {
  TempDir tmp;
  auto c = zero_config();
  c.set("linear_data", "neumann");
  const auto r = driver::run(c, "solve-linear", tmp.path, 1);
  CHECK(r.failures() == 0);
  REQUIRE(find(r, "LIN-ZERO-SOLUTION") != nullptr);
  c.set("linear_data", "other");
  CHECK_THROWS_AS(driver::run(c, "solve-linear", tmp.path, 1), ConfigError);
}

TEST_CASE("ntd run") {
  TempDir tmp;
  const auto r = driver::run(zero_config(), "ntd", tmp.path, 11);
  CHECK(r.failures() == 0);
  CHECK(fs::exists(tmp.path / "ntd_blocks.calb"));
  CHECK(fs::exists(tmp.path / "ntd_norms.csv"));
}

TEST_CASE("unknown commands") {
  TempDir tmp;
  CHECK_THROWS_AS(driver::run(zero_config(), "explode", tmp.path, 1), InvalidArgument);
  CHECK(driver::commands().size() == 6);
}
