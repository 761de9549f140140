#pragma once

// Descending flow on a peak-selection manifold.
//
// Phi is unbounded below on every finite-dimensional subspace, so plain descent
// along -V leaves every saddle point. Given a support space W (previously found
// critical points) and a direction v orthogonal to W, the peak p(v) is the local
// maximiser of Phi over {t0 v + W t : t0 > 0}. Moving v along -V(p(v)) and
// re-selecting the peak realises the minimax inf_v max_{[W, v]} Phi; the limit
// is a critical point whose level sits above those spanning W.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/flow.hpp"
#include "kirchhoff/functional.hpp"

namespace kirchhoff {

/// Span of a list of Galerkin vectors with H1-orthogonal projection. Elements
/// are stored normalised to unit H1 norm.
class SupportSpace {
 public:
  explicit SupportSpace(BasisHandle basis) : basis_(std::move(basis)), columns_(basis_->size(), 0) {}

  SupportSpace(BasisHandle basis, const std::vector<GalerkinVector>& elements)
      : SupportSpace(std::move(basis)) {
    for (const auto& e : elements) add(e);
  }

  void add(const GalerkinVector& element) {
    KIRCHHOFF_REQUIRE(element.basis_handle() == basis_, InvalidInput,
                      "SupportSpace: element belongs to a different basis");
    columns_.conservativeResize(Eigen::NoChange, columns_.cols() + 1);
    const double n = h1_norm(element);
    KIRCHHOFF_REQUIRE(n > 0.0, InvalidInput, "SupportSpace: zero element");
    columns_.col(columns_.cols() - 1) = element.coefficients() / n;
    const Eigen::MatrixXd gram = columns_.transpose() * basis_->eigenvalues().asDiagonal() * columns_;
    gram_ = gram.ldlt();
    const Eigen::VectorXd pivots = gram_.vectorD();
    KIRCHHOFF_REQUIRE(gram_.info() == Eigen::Success && pivots.minCoeff() > 1e-12 * pivots.cwiseAbs().maxCoeff(),
                      NumericalFailure, "SupportSpace: support elements are linearly dependent");
  }

  [[nodiscard]] int dimension() const { return static_cast<int>(columns_.cols()); }
  [[nodiscard]] const Eigen::MatrixXd& columns() const { return columns_; }
  [[nodiscard]] const BasisHandle& basis_handle() const { return basis_; }

  /// Coefficients t of the H1-orthogonal projection W t of u onto the span.
  [[nodiscard]] Eigen::VectorXd projection_weights(const GalerkinVector& u) const {
    if (dimension() == 0) return {};
    const Eigen::VectorXd rhs = columns_.transpose() * basis_->eigenvalues().cwiseProduct(u.coefficients());
    return gram_.solve(rhs);
  }

  [[nodiscard]] GalerkinVector orthogonal_part(const GalerkinVector& u) const {
    if (dimension() == 0) return u;
    Eigen::VectorXd c = u.coefficients() - columns_ * projection_weights(u);
    return GalerkinVector(basis_, std::move(c));
  }

 private:
  BasisHandle basis_;
  Eigen::MatrixXd columns_;
  Eigen::LDLT<Eigen::MatrixXd> gram_;
};

struct PeakSelection {
  GalerkinVector peak;
  Eigen::VectorXd weights;  // (t0, t_1, ..., t_n)
  double energy = 0.0;
};

namespace detail {

inline Eigen::MatrixXd peak_frame(const GalerkinVector& v, const SupportSpace& support) {
  Eigen::MatrixXd frame(v.size(), support.dimension() + 1);
  frame.col(0) = v.coefficients();
  if (support.dimension() > 0) frame.rightCols(support.dimension()) = support.columns();
  return frame;
}

/// Maximiser s > 0 of Phi(s v) by bracketing the sign change of the radial
/// derivative.
inline std::optional<double> ray_peak(const GalerkinVector& v, const KirchhoffParams& params,
                                      const Nonlinearity& nl) {
  auto slope = [&](double s) { return directional_derivative(s * v, v, params, nl); };
  double lo = 1.0;
  double hi = 1.0;
  if (slope(1.0) > 0.0) {
    int guard = 0;
    while (slope(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 200) return std::nullopt;
    }
  } else {
    int guard = 0;
    while (slope(lo) <= 0.0) {
      hi = lo;
      lo *= 0.5;
      if (++guard > 200) return std::nullopt;
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Local maximiser of t -> Phi(t0 v + W t) near `start` (or from the radial peak
/// along v when no start is given). Returns nullopt when the maximiser is not
/// strict or leaves the half-space t0 > 0.
inline std::optional<PeakSelection> select_peak(const GalerkinVector& v, const SupportSpace& support,
                                                const KirchhoffParams& params, const Nonlinearity& nl,
                                                const Eigen::VectorXd* start = nullptr) {
  const Eigen::MatrixXd frame = detail::peak_frame(v, support);
  const int n = static_cast<int>(frame.cols());
  const BasisHandle& basis = v.basis_handle();
  const Eigen::VectorXd& lambda = basis->eigenvalues();

  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  if (start != nullptr && start->size() == n && (*start)[0] > 0.0) {
    t = *start;
  } else {
    const auto s = detail::ray_peak(v, params, nl);
    if (!s) return std::nullopt;
    t[0] = *s;
  }

  auto state = [&](const Eigen::VectorXd& weights) { return GalerkinVector(basis, frame * weights); };
  GalerkinVector u = state(t);
  double value = energy(u, params, nl);
  bool strict = false;

  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd grad = frame.transpose() * lambda.cwiseProduct(gradient(u, params, nl).coefficients());
    const Eigen::MatrixXd hess = compressed_hessian(u, frame, params, nl);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    strict = ev.maxCoeff() < -1e-10 * scale;

    // Newton step on the concave model; nonnegative curvature is reflected.
    Eigen::VectorXd coords = eig.eigenvectors().transpose() * grad;
    for (int i = 0; i < n; ++i) {
      coords[i] /= ev[i] < -1e-14 * scale ? ev[i] : -std::max(std::abs(ev[i]), 1e-8 * scale);
    }
    const Eigen::VectorXd step = -(eig.eigenvectors() * coords);

    // Predicted gain of the Newton step; below roundoff of Phi nothing is left to gain.
    const double predicted = 0.5 * std::abs(grad.dot(step));
    if (strict && (predicted <= 1e-26 * (1.0 + std::abs(value)) ||
                   step.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + t.cwiseAbs().maxCoeff()))) {
      break;
    }

    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = t + alpha * step;
      GalerkinVector candidate = state(trial);
      const double gain = energy_difference(u, candidate, params, nl);
      if (std::isfinite(gain) && gain >= 0.0) {
        moved = gain > 0.0 || (alpha == 1.0 && !strict);
        t = trial;
        u = std::move(candidate);
        value += gain;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }

  if (!strict || !(t[0] > 0.0) || !std::isfinite(value)) return std::nullopt;
  return PeakSelection{std::move(u), std::move(t), value};
}

/// How the start vector of run_minimax_flow is interpreted.
enum class MinimaxStart {
  direction,  // v0 = start projected off the support; peak found from scratch
  point,      // start is already near a peak; its decomposition warm-starts Newton
};

/// Armijo descent of v -> Phi(p(v)) along -V(p(v)). Trace points are peaks.
inline FlowTrace run_minimax_flow(const GalerkinVector& start, const SupportSpace& support,
                                  const FlowConfig& config, const KirchhoffParams& params,
                                  const Nonlinearity& nl, MinimaxStart mode = MinimaxStart::direction) {
  config.validate();
  FlowTrace trace;
  GalerkinVector v = support.orthogonal_part(start);
  const double v_norm = h1_norm(v);
  if (!(v_norm > 0.0)) {
    trace.reason = Termination::peak_lost;
    trace.diagnostic = "start direction lies in the support space";
    return trace;
  }
  v *= 1.0 / v_norm;

  std::optional<PeakSelection> peak;
  if (mode == MinimaxStart::point) {
    Eigen::VectorXd warm(support.dimension() + 1);
    warm[0] = v_norm;
    if (support.dimension() > 0) warm.tail(support.dimension()) = support.projection_weights(start);
    peak = select_peak(v, support, params, nl, &warm);
  } else {
    peak = select_peak(v, support, params, nl);
  }
  if (!peak) {
    trace.reason = Termination::peak_lost;
    trace.diagnostic = "no strict peak along the start direction";
    return trace;
  }

  double step_taken = 0.0;
  for (int step = 0;; ++step) {
    const GalerkinVector& u = peak->peak;
    const Residual r = residual(u, params, nl);
    trace.points.push_back(detail::make_point(u, peak->energy, r.norm, step_taken, config));
    trace.final_state = u;
    if (r.norm <= config.threshold(h1_norm(u))) {
      trace.reason = step == 0 ? Termination::already_critical : Termination::converged;
      return trace;
    }
    if (step >= config.max_steps) {
      trace.reason = Termination::max_steps;
      return trace;
    }

    const double t0 = peak->weights[0];
    const double slope = params.stiffness(h1_norm_squared(u)) * r.norm * r.norm;
    double h = config.initial_step;
    std::optional<PeakSelection> next;
    GalerkinVector next_v = v;
    while (h >= config.min_step) {
      GalerkinVector w = support.orthogonal_part(v - (h / t0) * r.direction);
      w *= 1.0 / h1_norm(w);
      Eigen::VectorXd warm = peak->weights;
      auto candidate = select_peak(w, support, params, nl, &warm);
      double change = 0.0;
      if (candidate) change = energy_difference(u, candidate->peak, params, nl);
      const bool accept = candidate && std::isfinite(change) &&
                          (config.rule == StepRule::fixed || change <= -config.armijo * h * slope);
      if (accept) {
        candidate->energy = peak->energy + change;
        next = std::move(candidate);
        next_v = std::move(w);
        break;
      }
      if (config.rule == StepRule::fixed) break;
      h *= 0.5;
    }
    if (!next) {
      trace.reason = config.rule == StepRule::fixed ? Termination::peak_lost : Termination::step_underflow;
      trace.diagnostic = "no admissible step from peak at energy " + std::to_string(peak->energy);
      return trace;
    }
    peak = std::move(next);
    v = std::move(next_v);
    step_taken = h;
  }
}

}  // namespace kirchhoff
