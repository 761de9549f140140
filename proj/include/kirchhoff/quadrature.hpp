#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "kirchhoff/error.hpp"

namespace kirchhoff {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with n nodes on [lo, hi], nodes ascending.
///
/// Roots of P_n are found by Newton iteration from the Tricomi initial guess;
/// the three-term recurrence is stable for the node counts used here (n up
/// to a few thousand).
inline QuadratureRule gauss_legendre(int n, double lo, double hi) {
  KIRCHHOFF_REQUIRE(n >= 1, InvalidInput, "gauss_legendre: need at least one node");
  KIRCHHOFF_REQUIRE(hi > lo, InvalidInput, "gauss_legendre: empty interval");

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const int pairs = (n + 1) / 2;

  for (int i = 0; i < pairs; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    // Refresh the derivative at the converged root for the weight.
    {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // x is the i-th largest root; place symmetric pair in ascending order.
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.nodes[i] = mid - half * x;
    rule.weights[n - 1 - i] = half * w;
    rule.weights[i] = half * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = mid;
  return rule;
}

}  // namespace kirchhoff
