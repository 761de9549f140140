#pragma once

// The Kirchhoff energy
//   Phi(u) = a/2 ||u||^2 + b/4 ||u||^4 - int F(x, u)
// restricted to Y_m, its H1-Riesz gradient, and the sign/cone quantities used
// to keep flows away from one-signed limits.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "kirchhoff/error.hpp"
#include "kirchhoff/nonlinearity.hpp"
#include "kirchhoff/spectral_basis.hpp"

namespace kirchhoff {

struct KirchhoffParams {
  double a = 1.0;
  double b = 0.0;

  void validate() const {
    KIRCHHOFF_REQUIRE(std::isfinite(a) && a > 0.0, InvalidInput,
                      "KirchhoffParams: a must be > 0, got " + std::to_string(a));
    KIRCHHOFF_REQUIRE(std::isfinite(b) && b >= 0.0, InvalidInput,
                      "KirchhoffParams: b must be >= 0, got " + std::to_string(b));
  }

  /// a + b ||u||^2
  [[nodiscard]] double stiffness(double h1_squared) const { return a + b * h1_squared; }
};

namespace detail {

template <class Fn>
Eigen::VectorXd pointwise(const EigenBasis& basis, const Eigen::VectorXd& grid, const Fn& fn) {
  Eigen::VectorXd out(grid.size());
  const auto& nodes = basis.nodes();
  for (int q = 0; q < grid.size(); ++q) out[q] = fn(nodes[q], grid[q]);
  return out;
}

}  // namespace detail

/// int F(x, u) by quadrature.
inline double potential(const GalerkinVector& u, const Nonlinearity& nl) {
  const Eigen::VectorXd g = to_grid(u);
  return u.basis().weights().dot(detail::pointwise(u.basis(), g, nl.F));
}

/// Load vector <f(., u), e_j>_{L2}.
inline Eigen::VectorXd load_vector(const GalerkinVector& u, const Nonlinearity& nl) {
  const Eigen::VectorXd g = to_grid(u);
  const Eigen::VectorXd fg = detail::pointwise(u.basis(), g, nl.f);
  return u.basis().mode_values().transpose() * u.basis().weights().cwiseProduct(fg);
}

inline double energy(const GalerkinVector& u, const KirchhoffParams& params, const Nonlinearity& nl) {
  const double n2 = h1_norm_squared(u);
  return 0.5 * params.a * n2 + 0.25 * params.b * n2 * n2 - potential(u, nl);
}

/// Phi(to) - Phi(from) without cancellation against |Phi|.
///
/// The quadratic and quartic terms are factored through ||to||^2 - ||from||^2
/// and the potential difference is integrated along the segment at each node,
/// F(u + d) - F(u) = d * int_0^1 f(u + s d) ds, with an 8-point Gauss rule
/// (exact for polynomial f up to degree 15), or an exact factorization of
/// v^p - u^p for even integer powers. Line searches that compare
/// decreases of order ||V||^2 rely on this once ||V||^2 drops below eps |Phi|.
inline double energy_difference(const GalerkinVector& from, const GalerkinVector& to,
                                const KirchhoffParams& params, const Nonlinearity& nl) {
  from.check_same_basis(to);
  static const QuadratureRule segment = gauss_legendre(8, 0.0, 1.0);
  const GalerkinVector sum = from + to;
  const GalerkinVector delta = to - from;
  const double d2 = h1_inner(delta, sum);  // ||to||^2 - ||from||^2
  const double s2 = h1_norm_squared(from) + h1_norm_squared(to);
  const double quadratic = 0.5 * params.a * d2 + 0.25 * params.b * d2 * s2;

  const EigenBasis& basis = from.basis();
  const Eigen::VectorXd g = to_grid(from);
  const Eigen::VectorXd dg = to_grid(delta);
  double potential_change = 0.0;
  if (nl.even_power > 0) {
    // v^p - u^p = (v - u) sum_i v^{p-1-i} u^i
    const int p = nl.even_power;
    for (int q = 0; q < g.size(); ++q) {
      const double u = g[q];
      const double v = u + dg[q];
      double acc = 1.0, upow = 1.0;
      for (int i = 1; i < p; ++i) {
        upow *= u;
        acc = acc * v + upow;
      }
      potential_change += basis.weights()[q] * dg[q] * acc;
    }
    return quadratic - nl.c * potential_change / p;
  }
  for (int q = 0; q < g.size(); ++q) {
    if (dg[q] == 0.0) continue;
    double mean = 0.0;
    for (std::size_t i = 0; i < segment.size(); ++i) {
      mean += segment.weights[i] * nl.f(basis.nodes()[q], g[q] + segment.nodes[i] * dg[q]);
    }
    potential_change += basis.weights()[q] * dg[q] * mean;
  }
  return quadratic - potential_change;
}

/// H1-Riesz representative of Phi'_m(u):
///   g_j = (a + b||u||^2) c_j - <f(., u), e_j> / lambda_j.
inline GalerkinVector gradient(const GalerkinVector& u, const KirchhoffParams& params,
                               const Nonlinearity& nl) {
  const double s = params.stiffness(h1_norm_squared(u));
  Eigen::VectorXd g = s * u.coefficients() - load_vector(u, nl).cwiseQuotient(u.basis().eigenvalues());
  return GalerkinVector(u.basis_handle(), std::move(g));
}

/// <Phi'(u), v>
inline double directional_derivative(const GalerkinVector& u, const GalerkinVector& v,
                                     const KirchhoffParams& params, const Nonlinearity& nl) {
  return h1_inner(gradient(u, params, nl), v);
}

/// Hessian of Phi with respect to coefficients, compressed onto the columns of
/// `directions` (m x n coefficient matrix): D^T H D.
inline Eigen::MatrixXd compressed_hessian(const GalerkinVector& u, const Eigen::MatrixXd& directions,
                                          const KirchhoffParams& params, const Nonlinearity& nl) {
  const EigenBasis& basis = u.basis();
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  const double s = params.stiffness(h1_norm_squared(u));
  const Eigen::VectorXd g = to_grid(u);
  const Eigen::VectorXd weighted = basis.weights().cwiseProduct(detail::pointwise(basis, g, nl.df));
  const Eigen::MatrixXd on_grid = basis.mode_values() * directions;
  const Eigen::VectorXd lambda_u = lambda.cwiseProduct(u.coefficients());
  const Eigen::VectorXd projected = directions.transpose() * lambda_u;

  Eigen::MatrixXd h = s * directions.transpose() * lambda.asDiagonal() * directions;
  h += 2.0 * params.b * projected * projected.transpose();
  h -= on_grid.transpose() * weighted.asDiagonal() * on_grid;
  return h;
}

struct SignParts {
  double h1_plus = 0.0;   // ||Pi_m u+||
  double h1_minus = 0.0;  // ||Pi_m u-||
  double l2_plus = 0.0;   // |u+|_2 on the grid
  double l2_minus = 0.0;  // |u-|_2 on the grid
};

/// Truncate on the grid, project back to Y_m and measure.
inline SignParts positive_part_norms(const GalerkinVector& u) {
  const Eigen::VectorXd g = to_grid(u);
  const Eigen::VectorXd plus = g.cwiseMax(0.0);
  const Eigen::VectorXd minus = (-g).cwiseMax(0.0);
  const auto& w = u.basis().weights();
  SignParts parts;
  parts.h1_plus = h1_norm(project(u.basis_handle(), plus));
  parts.h1_minus = h1_norm(project(u.basis_handle(), minus));
  parts.l2_plus = std::sqrt(w.dot(plus.cwiseProduct(plus)));
  parts.l2_minus = std::sqrt(w.dot(minus.cwiseProduct(minus)));
  return parts;
}

enum class Cone { positive, negative };

/// Upper-bound surrogate for dist(u, P_m) (or dist(u, -P_m)), where P_m is the
/// set of elements of Y_m that are nonnegative on the quadrature grid.
///
/// The candidate w = Pi_m[u+] is lifted by the smallest multiple of e_1 that
/// makes it nonnegative on the grid, so w is in P_m and ||u - w|| bounds the
/// exact distance from above. For u in P_m the lift vanishes and the proxy is
/// ||Pi_m[u-]||.
inline double cone_distance(const GalerkinVector& u, Cone cone) {
  const EigenBasis& basis = u.basis();
  const Eigen::VectorXd g = cone == Cone::positive ? to_grid(u) : Eigen::VectorXd(-to_grid(u));
  GalerkinVector candidate = project(u.basis_handle(), g.cwiseMax(0.0));
  const Eigen::VectorXd candidate_grid = to_grid(candidate);
  const auto ground = basis.mode_values().col(0);
  double lift = 0.0;
  for (int q = 0; q < g.size(); ++q) lift = std::max(lift, -candidate_grid[q] / ground[q]);
  candidate[0] += lift;
  GalerkinVector diff = cone == Cone::positive ? u - candidate : -u - candidate;
  return h1_norm(diff);
}

/// min(dist(u, P_m), dist(u, -P_m))
inline double cone_distance_min(const GalerkinVector& u) {
  return std::min(cone_distance(u, Cone::positive), cone_distance(u, Cone::negative));
}

struct ConeGeometry {
  double delta_m = 0.0;  // sampled dist(N_k^m, P_m u -P_m)
  double mu_m = 0.0;     // radius of the cone neighbourhoods D_m^0
};

inline ConeGeometry make_cone_geometry(double delta_m, double fraction = 0.4) {
  KIRCHHOFF_REQUIRE(delta_m > 0.0, NumericalFailure, "cone geometry: delta_m must be positive");
  KIRCHHOFF_REQUIRE(fraction > 0.0 && fraction < 1.0, InvalidInput,
                    "cone geometry: mu_m fraction must lie in (0, 1)");
  return {delta_m, fraction * delta_m};
}

/// Random point on {||u|| = radius} in span{e_k, ..., e_m} (k is 1-based).
/// `smoothing` = 0 draws H1-isotropically; smoothing = s weights mode j by
/// lambda_j^{-s/2} before normalising.
inline GalerkinVector sample_sphere(const BasisHandle& basis, int k, double radius,
                                    std::mt19937_64& rng, double smoothing = 0.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  GalerkinVector u(basis);
  for (int j = k - 1; j < basis->size(); ++j) {
    const double lambda = basis->eigenvalue(j);
    u[j] = normal(rng) / std::sqrt(lambda) * std::pow(lambda, -0.5 * smoothing);
  }
  const double n = h1_norm(u);
  KIRCHHOFF_REQUIRE(n > 0.0, NumericalFailure, "sample_sphere: degenerate draw");
  u *= radius / n;
  return u;
}

/// Estimate of dist(N_k^m, -P_m u P_m): minimum cone-distance proxy over the
/// axis vectors e_j/||e_j|| (j = k..m) and `samples` random points of the unit
/// sphere in Z_k^m, followed by a random local search on the sphere from the
/// best point. The proxy is positively homogeneous, so the unit-sphere value is
/// scaled by r_k.
inline double estimate_delta_m(const BasisHandle& basis, int k, double r_k, int samples = 2000,
                               std::uint64_t seed = 7) {
  const int m = basis->size();
  KIRCHHOFF_REQUIRE(k >= 2 && k <= m, InvalidInput,
                    "estimate_delta_m: need 2 <= k <= m, got k=" + std::to_string(k));
  KIRCHHOFF_REQUIRE(r_k > 0.0, InvalidInput, "estimate_delta_m: r_k must be positive");
  GalerkinVector best_point(basis);
  double best = std::numeric_limits<double>::infinity();
  const auto consider = [&](GalerkinVector u) {
    const double d = cone_distance_min(u);
    if (d < best) {
      best = d;
      best_point = std::move(u);
    }
  };
  for (int j = k - 1; j < m; ++j) {
    GalerkinVector axis = GalerkinVector::unit(basis, j);
    axis *= 1.0 / std::sqrt(basis->eigenvalue(j));
    consider(std::move(axis));
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) consider(sample_sphere(basis, k, 1.0, rng));

  double step = 0.2;
  int failures = 0;
  while (step > 1e-6) {
    GalerkinVector trial = best_point + step * sample_sphere(basis, k, 1.0, rng);
    trial *= 1.0 / h1_norm(trial);
    const double before = best;
    consider(std::move(trial));
    if (best < before) {
      failures = 0;
    } else if (++failures == 20) {
      step *= 0.5;
      failures = 0;
    }
  }
  best *= r_k;
  KIRCHHOFF_REQUIRE(std::isfinite(best) && best > 0.0, NumericalFailure,
                    "estimate_delta_m: sampled sphere touches a cone (delta_m = " +
                        std::to_string(best) + ")");
  return best;
}

}  // namespace kirchhoff
