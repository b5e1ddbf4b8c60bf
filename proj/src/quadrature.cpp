#include "calheat/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace calheat::quadrature {

namespace {

Rule compute_gauss_legendre(int n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

void append_mapped(Rule& out, const Rule& base, double a, double b) {
  for (std::size_t q = 0; q < base.nodes.size(); ++q) {
    out.nodes.push_back(a + (b - a) * base.nodes[q]);
    out.weights.push_back((b - a) * base.weights[q]);
  }
}

}  // namespace

const Rule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

Rule graded_toward_zero(int levels, int n) {
  const Rule& base = gauss_legendre(n);
  Rule out;
  double hi = 1.0;
  for (int l = 0; l < levels; ++l) {
    const double lo = 0.5 * hi;
    append_mapped(out, base, lo, hi);
    hi = lo;
  }
  append_mapped(out, base, 0.0, hi);
  return out;
}

Rule composite_gauss(int pieces, int n) {
  const Rule& base = gauss_legendre(n);
  Rule out;
  for (int p = 0; p < pieces; ++p) {
    append_mapped(out, base, static_cast<double>(p) / pieces, static_cast<double>(p + 1) / pieces);
  }
  return out;
}

}  // namespace calheat::quadrature
