#pragma once

// Auxiliary operator A and the descending flow along V(u) = u - A u.
//
// A u is the unique minimiser in Y_m of
//   I_u(v) = 1/2 (a + b||u||^2) ||v||^2 - int v f(x, u),
// which the eigenbasis diagonalises. Fixed points of A are exactly the
// critical points of Phi_m, and Phi'_m(u) = (a + b||u||^2) (u - A u).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/functional.hpp"

namespace kirchhoff {

inline GalerkinVector apply_A(const GalerkinVector& u, const KirchhoffParams& params,
                              const Nonlinearity& nl) {
  const double s = params.stiffness(h1_norm_squared(u));
  Eigen::VectorXd c = load_vector(u, nl).cwiseQuotient(u.basis().eigenvalues()) / s;
  return GalerkinVector(u.basis_handle(), std::move(c));
}

struct Residual {
  GalerkinVector direction;  // V = u - A u
  double norm = 0.0;         // ||V||
};

inline Residual residual(const GalerkinVector& u, const KirchhoffParams& params,
                         const Nonlinearity& nl) {
  GalerkinVector v = u - apply_A(u, params, nl);
  const double n = h1_norm(v);
  return {std::move(v), n};
}

enum class StepRule { fixed, backtracking };

struct FlowConfig {
  StepRule rule = StepRule::backtracking;
  double initial_step = 1.0;
  double armijo = 1e-4;
  double min_step = 1e-14;
  int max_steps = 100000;
  double tolerance = 1e-9;  // converged when ||V|| <= tolerance (1 + ||u||)
  bool track_cone = false;
  bool keep_iterates = true;

  void validate() const {
    KIRCHHOFF_REQUIRE(initial_step > 0.0, InvalidInput, "FlowConfig: step must be > 0");
    KIRCHHOFF_REQUIRE(tolerance > 0.0, InvalidInput, "FlowConfig: tolerance must be > 0");
    KIRCHHOFF_REQUIRE(max_steps >= 0, InvalidInput, "FlowConfig: max_steps must be >= 0");
    KIRCHHOFF_REQUIRE(armijo > 0.0 && armijo < 1.0, InvalidInput,
                      "FlowConfig: Armijo constant must lie in (0, 1)");
  }

  [[nodiscard]] double threshold(double h1) const { return tolerance * (1.0 + h1); }
};

enum class Termination {
  converged,
  already_critical,
  max_steps,
  step_underflow,
  non_finite,
  peak_lost,
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::already_critical: return "already critical";
    case Termination::max_steps: return "max steps";
    case Termination::step_underflow: return "step underflow";
    case Termination::non_finite: return "non-finite energy";
    case Termination::peak_lost: return "peak selection lost";
  }
  return "unknown";
}

struct FlowPoint {
  Eigen::VectorXd coefficients;  // empty unless FlowConfig::keep_iterates
  double energy = 0.0;
  double residual = 0.0;
  double dist_positive = std::numeric_limits<double>::quiet_NaN();
  double dist_negative = std::numeric_limits<double>::quiet_NaN();
  double step = 0.0;  // step that produced this point (0 for the start)
};

struct FlowTrace {
  std::vector<FlowPoint> points;
  Termination reason = Termination::max_steps;
  std::string diagnostic;
  std::optional<GalerkinVector> final_state;

  [[nodiscard]] bool converged() const {
    return reason == Termination::converged || reason == Termination::already_critical;
  }
  [[nodiscard]] std::size_t steps() const { return points.empty() ? 0 : points.size() - 1; }
};

struct StepOutcome {
  bool taken = false;
  GalerkinVector next;
  double step = 0.0;
  double energy = 0.0;
};

/// One damped Euler step u' = u - h V(u). With backtracking, h is halved from
/// initial_step until Phi(u') <= Phi(u) - armijo * h * (a + b||u||^2) ||V||^2,
/// the difference being evaluated by energy_difference; the returned energy is
/// Phi(u) plus that difference.
/// throws NumericalFailure when h drops below min_step. No step is taken when
/// ||V(u)|| is already within tolerance.
inline StepOutcome flow_step(const GalerkinVector& u, const FlowConfig& config,
                             const KirchhoffParams& params, const Nonlinearity& nl) {
  const double n2 = h1_norm_squared(u);
  const Residual r = residual(u, params, nl);
  if (r.norm <= config.threshold(std::sqrt(n2))) return {false, u, 0.0, energy(u, params, nl)};

  double h = config.initial_step;
  if (config.rule == StepRule::fixed) {
    GalerkinVector next = u - h * r.direction;
    const double e = energy(next, params, nl);
    return {true, std::move(next), h, e};
  }
  const double e0 = energy(u, params, nl);
  const double slope = params.stiffness(n2) * r.norm * r.norm;  // <Phi'(u), V>
  while (h >= config.min_step) {
    GalerkinVector next = u - h * r.direction;
    const double change = energy_difference(u, next, params, nl);
    if (std::isfinite(change) && change <= -config.armijo * h * slope) {
      return {true, std::move(next), h, e0 + change};
    }
    h *= 0.5;
  }
  throw NumericalFailure("flow_step: backtracking exhausted (step below " +
                         std::to_string(config.min_step) + ")");
}

namespace detail {

inline FlowPoint make_point(const GalerkinVector& u, double e, double res, double step,
                            const FlowConfig& config) {
  FlowPoint point;
  if (config.keep_iterates) point.coefficients = u.coefficients();
  point.energy = e;
  point.residual = res;
  point.step = step;
  if (config.track_cone) {
    point.dist_positive = cone_distance(u, Cone::positive);
    point.dist_negative = cone_distance(u, Cone::negative);
  }
  return point;
}

}  // namespace detail

/// Integrate the descending flow from u0 until ||V|| <= tolerance (1+||u||),
/// max_steps, or step underflow. A non-finite energy aborts the run.
inline FlowTrace run_flow(const GalerkinVector& u0, const FlowConfig& config,
                          const KirchhoffParams& params, const Nonlinearity& nl) {
  config.validate();
  FlowTrace trace;
  GalerkinVector u = u0;
  double e = energy(u, params, nl);
  Residual r = residual(u, params, nl);
  trace.points.push_back(detail::make_point(u, e, r.norm, 0.0, config));
  if (!std::isfinite(e)) {
    trace.reason = Termination::non_finite;
    trace.diagnostic = "initial energy is not finite";
    trace.final_state = u;
    return trace;
  }
  if (r.norm <= config.threshold(h1_norm(u))) {
    trace.reason = Termination::already_critical;
    trace.final_state = u;
    return trace;
  }

  for (int step = 0; step < config.max_steps; ++step) {
    std::optional<StepOutcome> taken;
    try {
      taken = flow_step(u, config, params, nl);
    } catch (const NumericalFailure& failure) {
      trace.reason = Termination::step_underflow;
      trace.diagnostic = failure.what();
      trace.final_state = u;
      return trace;
    }
    StepOutcome& outcome = *taken;
    u = std::move(outcome.next);
    e = outcome.energy;
    if (!std::isfinite(e) || !u.coefficients().allFinite()) {
      trace.reason = Termination::non_finite;
      trace.diagnostic = "energy became non-finite after " + std::to_string(step + 1) + " steps";
      trace.points.push_back(detail::make_point(u, e, std::numeric_limits<double>::quiet_NaN(),
                                                outcome.step, config));
      trace.final_state = u;
      return trace;
    }
    r = residual(u, params, nl);
    trace.points.push_back(detail::make_point(u, e, r.norm, outcome.step, config));
    if (r.norm <= config.threshold(h1_norm(u))) {
      trace.reason = Termination::converged;
      trace.final_state = u;
      return trace;
    }
  }
  trace.reason = Termination::max_steps;
  trace.final_state = u;
  return trace;
}

/// Worst observed margins of the operator inequalities over a sample set.
struct LemmaReport {
  int samples = 0;
  // (i) <Phi'(u), u - Au> >= a ||u - Au||^2
  int descent_violations = 0;
  double min_descent_ratio = std::numeric_limits<double>::infinity();  // <Phi',V> / (a||V||^2)
  // (ii) ||Phi'(u)|| <= (a + b)(1 + ||u||^2) ||u - Au||
  int bound_violations = 0;
  double max_bound_ratio = 0.0;
  // (iii) dist(Au, +-P_m) <= dist(u, +-P_m) / 2 whenever dist(u, +-P_m) < mu_m,
  // up to a roundoff floor of 1e-12 (1 + ||u|| + ||Au||)
  int contraction_checked = 0;
  int contraction_violations = 0;
  double max_contraction_ratio = 0.0;

  [[nodiscard]] bool passed() const {
    return descent_violations == 0 && bound_violations == 0 && contraction_violations == 0;
  }
};

inline LemmaReport check_A_lemma(const std::vector<GalerkinVector>& samples,
                                 const KirchhoffParams& params, const Nonlinearity& nl,
                                 double mu_m) {
  LemmaReport report;
  for (const auto& u : samples) {
    ++report.samples;
    const double n2 = h1_norm_squared(u);
    const Residual r = residual(u, params, nl);
    const GalerkinVector g = gradient(u, params, nl);
    const double pairing = h1_inner(g, r.direction);
    const double v2 = r.norm * r.norm;
    if (v2 > 0.0) {
      const double ratio = pairing / (params.a * v2);
      report.min_descent_ratio = std::min(report.min_descent_ratio, ratio);
      if (ratio < 1.0 - 1e-12) ++report.descent_violations;
    }
    const double bound = (params.a + params.b) * (1.0 + n2) * r.norm;
    const double gnorm = h1_norm(g);
    if (bound > 0.0) report.max_bound_ratio = std::max(report.max_bound_ratio, gnorm / bound);
    if (gnorm > bound * (1.0 + 1e-12) + 1e-300) ++report.bound_violations;

    const GalerkinVector au = u - r.direction;
    // The proxy of a point on the cone is roundoff of order eps times the norm.
    const double floor = 1e-12 * (1.0 + std::sqrt(n2) + h1_norm(au));
    for (Cone cone : {Cone::positive, Cone::negative}) {
      const double before = cone_distance(u, cone);
      if (!(before < mu_m)) continue;
      ++report.contraction_checked;
      const double after = cone_distance(au, cone);
      if (before > floor) report.max_contraction_ratio = std::max(report.max_contraction_ratio, after / before);
      if (after > 0.5 * before + floor) ++report.contraction_violations;
    }
  }
  return report;
}

}  // namespace kirchhoff
