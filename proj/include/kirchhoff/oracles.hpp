#pragma once

// Independent ground truth: 1D shooting for a u'' + f(u) = 0, the scaling
// transform for pure-power Kirchhoff problems, the exact distance to the grid
// cone for tiny m, and a central-difference gradient check.

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/functional.hpp"
#include "kirchhoff/nonlinearity.hpp"
#include "kirchhoff/spectral_basis.hpp"

namespace kirchhoff {

struct ShootingOptions {
  double tolerance = 1e-13;  // absolute and relative stepper tolerance
  double scan_min = 1e-3;
  double scan_max = 1e3;
  int scan_points = 241;     // logarithmic
  int profile_points = 2049; // uniform, endpoints included
};

struct ShootingSolution {
  double slope = 0.0;  // u'(0)
  int interior_zeros = 0;
  double length = 0.0;
  std::vector<double> x;
  std::vector<double> u;
  double energy = 0.0;        // a/2 int u'^2 - int F(u)
  double gradient_sq = 0.0;   // int u'^2
  double potential = 0.0;     // int F(u)
  double end_value = 0.0;     // u(L)

  [[nodiscard]] double max_abs() const {
    double out = 0.0;
    for (double v : u) out = std::max(out, std::abs(v));
    return out;
  }
};

namespace detail {

using ShootState = std::array<double, 4>;  // u, u', int u'^2, int F(u)

struct ShootSystem {
  double a;
  const Nonlinearity* nl;
  void operator()(const ShootState& y, ShootState& dy, double) const {
    const Point origin{0.0, 0.0};
    dy[0] = y[1];
    dy[1] = -nl->f(origin, y[0]) / a;
    dy[2] = y[1] * y[1];
    dy[3] = nl->F(origin, y[0]);
  }
};

struct ShotSummary {
  int zeros = 0;       // sign changes of u on (0, L]
  double end_value = 0.0;
  double peak = 0.0;   // max |u|
  ShootState end{};
};

inline ShotSummary shoot_once(double s, double a, const Nonlinearity& nl, double length,
                              const ShootingOptions& options) {
  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_controlled<odeint::runge_kutta_fehlberg78<ShootState>>(options.tolerance,
                                                                                     options.tolerance);
  ShootState y{0.0, s, 0.0, 0.0};
  ShotSummary out;
  double previous = 0.0;
  bool started = false;
  odeint::integrate_adaptive(stepper, ShootSystem{a, &nl}, y, 0.0, length, length * 1e-3,
                             [&](const ShootState& state, double) {
                               const double v = state[0];
                               out.peak = std::max(out.peak, std::abs(v));
                               if (started && v != 0.0 && previous != 0.0 && (v > 0.0) != (previous > 0.0)) ++out.zeros;
                               if (v != 0.0) {
                                 previous = v;
                                 started = true;
                               }
                             });
  out.end = y;
  out.end_value = y[0];
  return out;
}

}  // namespace detail

/// Solves a u'' + f(u) = 0 on (0, L), u(0) = u(L) = 0, with exactly j interior
/// zeros and u'(0) > 0, by bisection on the slope. f must be autonomous.
inline ShootingSolution shoot(const Nonlinearity& nl, double a, double length, int j,
                              const ShootingOptions& options = {}) {
  KIRCHHOFF_REQUIRE(nl.autonomous, InvalidInput, "shoot: nonlinearity must be autonomous");
  KIRCHHOFF_REQUIRE(a > 0.0 && length > 0.0, InvalidInput, "shoot: need a > 0 and L > 0");
  KIRCHHOFF_REQUIRE(j >= 0, InvalidInput, "shoot: zero count must be >= 0");
  KIRCHHOFF_REQUIRE(options.scan_points >= 2 && options.scan_min > 0.0 && options.scan_max > options.scan_min,
                    InvalidInput, "shoot: invalid slope scan");

  // Shots whose end value vanishes relative to their size at every scale
  // mean the linearisation is resonant: the slope is not determined.
  std::vector<double> scan(static_cast<std::size_t>(options.scan_points));
  std::vector<detail::ShotSummary> shots;
  bool degenerate = true;
  for (int i = 0; i < options.scan_points; ++i) {
    const double t = static_cast<double>(i) / (options.scan_points - 1);
    scan[static_cast<std::size_t>(i)] = options.scan_min * std::pow(options.scan_max / options.scan_min, t);
    shots.push_back(detail::shoot_once(scan[static_cast<std::size_t>(i)], a, nl, length, options));
    const auto& shot = shots.back();
    if (std::abs(shot.end_value) > 1e-9 * shot.peak) degenerate = false;
  }
  if (degenerate) {
    throw InvalidInput("shoot: u(L) vanishes for every scanned slope (resonant, slope undetermined)");
  }

  // N(s) counts sign changes on (0, L]; the solution sits where N steps from j to j+1.
  int upper = -1;
  for (int i = 1; i < options.scan_points; ++i) {
    if (shots[static_cast<std::size_t>(i - 1)].zeros <= j && shots[static_cast<std::size_t>(i)].zeros >= j + 1) {
      upper = i;
      break;
    }
  }
  if (upper < 0) {
    std::ostringstream msg;
    msg << "shoot: no slope bracket for " << j << " interior zeros; zero counts over s in [" << options.scan_min
        << ", " << options.scan_max << "] range from " << shots.front().zeros << " to " << shots.back().zeros;
    throw NumericalFailure(msg.str());
  }
  double lo = scan[static_cast<std::size_t>(upper - 1)];
  double hi = scan[static_cast<std::size_t>(upper)];
  for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (detail::shoot_once(mid, a, nl, length, options).zeros <= j ? lo : hi) = mid;
  }
  const detail::ShotSummary at_lo = detail::shoot_once(lo, a, nl, length, options);
  const detail::ShotSummary at_hi = detail::shoot_once(hi, a, nl, length, options);
  const bool use_lo = std::abs(at_lo.end_value) <= std::abs(at_hi.end_value);
  const double s = use_lo ? lo : hi;
  const detail::ShotSummary& best = use_lo ? at_lo : at_hi;

  ShootingSolution out;
  out.slope = s;
  out.interior_zeros = j;
  out.length = length;
  out.end_value = best.end_value;
  out.gradient_sq = best.end[2];
  out.potential = best.end[3];
  out.energy = 0.5 * a * out.gradient_sq - out.potential;

  namespace odeint = boost::numeric::odeint;
  const int n = std::max(options.profile_points, 2);
  std::vector<double> times(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) times[static_cast<std::size_t>(i)] = length * i / (n - 1);
  auto stepper = odeint::make_controlled<odeint::runge_kutta_fehlberg78<detail::ShootState>>(options.tolerance,
                                                                                            options.tolerance);
  detail::ShootState y{0.0, s, 0.0, 0.0};
  odeint::integrate_times(stepper, detail::ShootSystem{a, &nl}, y, times.begin(), times.end(), length * 1e-3,
                          [&](const detail::ShootState& state, double x) {
                            out.x.push_back(x);
                            out.u.push_back(state[0]);
                          });
  return out;
}

/// Root t > 0 of t^{p-2} = a + b S t^2.
struct ScalingFactor {
  double t = 0.0;
  double S = 0.0;
  double a = 0.0;
  double b = 0.0;
  double p = 0.0;

  [[nodiscard]] double defect() const { return std::pow(t, p - 2.0) - a - b * S * t * t; }
};

inline ScalingFactor scaling_factor(double S, const KirchhoffParams& params, double p) {
  params.validate();
  KIRCHHOFF_REQUIRE(S > 0.0 && std::isfinite(S), InvalidInput, "scaling_factor: S must be positive");
  KIRCHHOFF_REQUIRE(p > 4.0, InvalidInput, "scaling_factor: need p > 4 for a unique positive root, got p = " +
                                               std::to_string(p));
  auto h = [&](double t) { return std::pow(t, p - 2.0) - params.b * S * t * t - params.a; };
  double lo = 0.0;
  double hi = 1.0;
  while (h(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    KIRCHHOFF_REQUIRE(std::isfinite(hi), NumericalFailure, "scaling_factor: bracket overflow");
  }
  while (hi - lo > 1e-14 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (h(mid) > 0.0 ? hi : lo) = mid;
  }
  return {0.5 * (lo + hi), S, params.a, params.b, p};
}

/// Coefficients of the shooting profile in a basis on (0, L): c_j = int w e_j by
/// composite Simpson on the dense profile.
inline GalerkinVector project_profile(const ShootingSolution& w, const BasisHandle& basis) {
  KIRCHHOFF_REQUIRE(basis->domain().kind() == Domain::Kind::interval &&
                        std::abs(basis->domain().length(0) - w.length) <= 1e-12 * w.length,
                    InvalidInput, "project_profile: basis must live on the shooting interval");
  const std::size_t n = w.x.size();
  KIRCHHOFF_REQUIRE(n >= 3 && n % 2 == 1, InvalidInput, "project_profile: need an odd number of profile points");
  const double h = w.length / static_cast<double>(n - 1);
  GalerkinVector out(basis);
  for (int j = 0; j < basis->size(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double weight = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      sum += weight * w.u[i] * basis->evaluate_mode(j, {w.x[i], 0.0});
    }
    out[j] = sum * h / 3.0;
  }
  return out;
}

/// max_i |s u(x_i) - t w(x_i)| over the profile grid, minimised over s = +-1.
inline double profile_sup_error(const GalerkinVector& u, const ShootingSolution& w, double t = 1.0) {
  double plus = 0.0;
  double minus = 0.0;
  for (std::size_t i = 0; i < w.x.size(); ++i) {
    const double v = evaluate(u, {w.x[i], 0.0});
    plus = std::max(plus, std::abs(v - t * w.u[i]));
    minus = std::max(minus, std::abs(-v - t * w.u[i]));
  }
  return std::min(plus, minus);
}

/// Lawson-Hanson active-set solution of min ||A x - b|| subject to x >= 0.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iterations = 0) {
  const int n = static_cast<int>(A.cols());
  if (max_iterations <= 0) max_iterations = 30 * std::max(n, 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.norm() * std::max(A.rows(), A.cols());

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    z = Eigen::VectorXd::Zero(n);
    if (idx.empty()) return;
    Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
    const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(b);
    for (std::size_t c = 0; c < idx.size(); ++c) z[idx[c]] = sol[static_cast<Eigen::Index>(c)];
  };

  int iterations = 0;
  while (true) {
    const Eigen::VectorXd w = A.transpose() * (b - A * x);
    int best = -1;
    double best_value = tol;
    for (int i = 0; i < n; ++i) {
      if (!passive[static_cast<std::size_t>(i)] && w[i] > best_value) {
        best_value = w[i];
        best = i;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    while (true) {
      KIRCHHOFF_REQUIRE(++iterations <= max_iterations, NumericalFailure, "nnls: iteration limit reached");
      Eigen::VectorXd z;
      solve_passive(z);
      bool feasible = true;
      for (int i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && z[i] <= 0.0) feasible = false;
      }
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (int i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && z[i] <= 0.0) alpha = std::min(alpha, x[i] / (x[i] - z[i]));
      }
      x += alpha * (z - x);
      for (int i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && std::abs(x[i]) <= tol) {
          passive[static_cast<std::size_t>(i)] = false;
          x[i] = 0.0;
        }
      }
    }
  }
  return x;
}

/// Exact min { ||u - w|| : w in Y_m, w >= 0 on the grid } (or -w >= 0), m <= 6.
///
/// With y = Lambda^{1/2} c the H1 norm is Euclidean and the cone is
/// K = {y : G y >= 0}, G = E Lambda^{-1/2}. Its polar is {-G^T l : l >= 0}, so by
/// Moreau's decomposition the distance is ||G^T l*|| for l* = argmin_{l>=0} ||G^T l + y||.
inline double exact_cone_projection(const GalerkinVector& u, Cone cone = Cone::positive) {
  const EigenBasis& basis = u.basis();
  KIRCHHOFF_REQUIRE(basis.size() <= 6, InvalidInput,
                    "exact_cone_projection: m must be <= 6, got " + std::to_string(basis.size()));
  const Eigen::VectorXd root = basis.eigenvalues().cwiseSqrt();
  Eigen::VectorXd y = root.cwiseProduct(u.coefficients());
  if (cone == Cone::negative) y = -y;
  const Eigen::MatrixXd G = basis.mode_values() * root.cwiseInverse().asDiagonal();
  const Eigen::VectorXd lambda = nnls(G.transpose(), -y);
  const Eigen::VectorXd polar = G.transpose() * lambda;
  const double dist = polar.norm();
  KIRCHHOFF_REQUIRE(std::isfinite(dist), NumericalFailure, "exact_cone_projection: non-finite distance");
  // Optimality: y + polar must satisfy the cone constraints.
  const Eigen::VectorXd projected = G * (y + polar);
  KIRCHHOFF_REQUIRE(projected.minCoeff() >= -1e-9 * (1.0 + y.norm()), NumericalFailure,
                    "exact_cone_projection: projection violates the cone constraints");
  return dist;
}

/// |(Phi(u+hv) - Phi(u-hv)) / (2h) - <Phi'(u), v>| / (1 + |<Phi'(u), v>|)
///
/// The derivative is taken along the segment actually stored, <Phi'(mid),
/// (u+hv) - (u-hv)> / (2h), so rounding u +- hv does not enter the error.
inline double fd_gradient_check(const GalerkinVector& u, const GalerkinVector& v, const KirchhoffParams& params,
                                const Nonlinearity& nl, double h) {
  KIRCHHOFF_REQUIRE(h > 0.0, InvalidInput, "fd_gradient_check: h must be positive");
  const GalerkinVector plus = u + h * v;
  const GalerkinVector minus = u - h * v;
  const GalerkinVector mid = 0.5 * (plus + minus);
  const double exact = directional_derivative(mid, plus - minus, params, nl) / (2.0 * h);
  const double fd = energy_difference(minus, plus, params, nl) / (2.0 * h);
  return std::abs(fd - exact) / (1.0 + std::abs(exact));
}

/// Writes "x,u" rows with 17 significant digits.
inline void write_profile_csv(const std::string& path, const std::vector<double>& x, const std::vector<double>& u) {
  KIRCHHOFF_REQUIRE(x.size() == u.size(), InvalidInput, "write_profile_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << std::setprecision(17) << "x,u\n";
  for (std::size_t i = 0; i < x.size(); ++i) out << x[i] << ',' << u[i] << '\n';
  if (!out) throw IoFailure("write failed for " + path);
}

}  // namespace kirchhoff
