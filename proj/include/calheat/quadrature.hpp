#pragma once

#include <vector>

namespace calheat::quadrature {

/// Nodes and weights on the unit interval [0, 1].
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [0, 1].
const Rule& gauss_legendre(int n);

/// Composite rule on [0, 1] with dyadic intervals [2^-(l+1), 2^-l] graded
/// toward 0, `levels` of them plus the innermost [0, 2^-levels], each carrying
/// an n-point Gauss rule.
Rule graded_toward_zero(int levels, int n);

/// Composite rule with `pieces` equal subintervals, each n-point Gauss.
Rule composite_gauss(int pieces, int n);

}  // namespace calheat::quadrature
