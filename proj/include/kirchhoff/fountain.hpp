#pragma once

// Multi-start search over the shells N_k = {u in Z_k : ||u|| = r_k}.
//
// Shell k seeds minimax flows from directions in Z_k = span{e_k, ..., e_m}.
// The peak manifold of shell k is spanned by the lowest new critical point of
// each earlier shell, so successive shells climb to higher critical levels.
// Converged peaks are deduplicated modulo u ~ -u and classified by sign.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/flow.hpp"
#include "kirchhoff/functional.hpp"
#include "kirchhoff/minimax_flow.hpp"

namespace kirchhoff {

struct BetaOptions {
  int starts = 8;
  int max_iterations = 400;
  double tolerance = 1e-13;
  std::uint64_t seed = 11;
};

namespace detail {

/// Ascent of J(v) = |v|_p^p on the unit sphere of Z_k: v <- normalise(Lambda^{-1} J'(v)).
/// J is convex, so each iterate maximises the linearisation and J never drops.
inline double beta_ascent(GalerkinVector v, int k, double p, const BetaOptions& options,
                          GalerkinVector* maximiser) {
  const EigenBasis& basis = v.basis();
  const Eigen::VectorXd& lambda = basis.eigenvalues();
  auto lp_power = [&](const Eigen::VectorXd& grid) {
    return basis.weights().dot(grid.cwiseAbs().array().pow(p).matrix());
  };
  v *= 1.0 / h1_norm(v);
  double value = lp_power(to_grid(v));
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd g = to_grid(v);
    Eigen::VectorXd pull(g.size());
    for (int q = 0; q < g.size(); ++q) pull[q] = std::pow(std::abs(g[q]), p - 2.0) * g[q];
    Eigen::VectorXd c = basis.mode_values().transpose() * basis.weights().cwiseProduct(pull);
    c = c.cwiseQuotient(lambda);
    c.head(k - 1).setZero();
    GalerkinVector next(v.basis_handle(), std::move(c));
    const double n = h1_norm(next);
    KIRCHHOFF_REQUIRE(std::isfinite(n) && n > 0.0, NumericalFailure,
                      "estimate_beta_k: ascent produced a degenerate iterate");
    next *= 1.0 / n;
    const double next_value = lp_power(to_grid(next));
    KIRCHHOFF_REQUIRE(std::isfinite(next_value), NumericalFailure,
                      "estimate_beta_k: non-finite objective");
    const bool done = next_value <= value * (1.0 + options.tolerance);
    if (next_value >= value) {
      v = std::move(next);
      value = next_value;
    }
    if (done) break;
  }
  if (maximiser != nullptr) *maximiser = v;
  return std::pow(value, 1.0 / p);
}

}  // namespace detail

struct BetaEstimate {
  int k = 0;
  double beta = 0.0;
  Eigen::VectorXd maximiser;
};

/// Lower estimate of sup { |v|_p : v in Z_k, ||v|| = 1 } by ascent from the
/// axis vector e_k, random draws and an optional extra start (projected to Z_k).
inline BetaEstimate estimate_beta_k(const BasisHandle& basis, int k, double p,
                                    const BetaOptions& options = {},
                                    const GalerkinVector* extra_start = nullptr) {
  const int m = basis->size();
  KIRCHHOFF_REQUIRE(k >= 1 && k <= m, InvalidInput,
                    "estimate_beta_k: need 1 <= k <= m, got k=" + std::to_string(k));
  KIRCHHOFF_REQUIRE(p >= 2.0, InvalidInput, "estimate_beta_k: exponent must be >= 2");
  std::vector<GalerkinVector> starts;
  starts.push_back(GalerkinVector::unit(basis, k - 1));
  if (extra_start != nullptr) {
    GalerkinVector e = *extra_start;
    e.coefficients().head(k - 1).setZero();
    if (h1_norm(e) > 0.0) starts.push_back(std::move(e));
  }
  std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(k));
  for (int s = 0; s < options.starts && k < m; ++s) starts.push_back(sample_sphere(basis, k, 1.0, rng, 1.0));

  BetaEstimate best{k, -1.0, {}};
  for (const auto& start : starts) {
    GalerkinVector arg(basis);
    const double beta = detail::beta_ascent(start, k, p, options, &arg);
    if (beta > best.beta) {
      best.beta = beta;
      best.maximiser = arg.coefficients();
    }
  }
  return best;
}

/// beta_k for k = k_min..k_max. Sweeps downward and passes each maximiser on as
/// a start, so the estimates are nonincreasing in k by construction.
inline std::vector<BetaEstimate> estimate_beta_sequence(const BasisHandle& basis, int k_min, int k_max,
                                                        double p, const BetaOptions& options = {}) {
  KIRCHHOFF_REQUIRE(k_min >= 1 && k_min <= k_max && k_max <= basis->size(), InvalidInput,
                    "estimate_beta_sequence: invalid k range");
  std::vector<BetaEstimate> out(static_cast<std::size_t>(k_max - k_min + 1));
  std::optional<GalerkinVector> previous;
  for (int k = k_max; k >= k_min; --k) {
    out[static_cast<std::size_t>(k - k_min)] =
        estimate_beta_k(basis, k, p, options, previous ? &*previous : nullptr);
    previous = GalerkinVector(basis, out[static_cast<std::size_t>(k - k_min)].maximiser);
  }
  return out;
}

/// Constants with F(x, u) <= c5 |u|^p + c6.
struct GrowthConstants {
  double c5 = 0.0;
  double c6 = 0.0;
};

/// Exact for the power nonlinearity (c5 = coefficient / p, c6 = 0); sampled
/// otherwise.
inline GrowthConstants fit_growth_constants(const Nonlinearity& nl, const Domain& domain) {
  if (nl.name == "power") return {nl.c / nl.p, 0.0};
  KIRCHHOFF_REQUIRE(nl.p > 2.0, InvalidInput, "fit_growth_constants: exponent must exceed 2");
  std::vector<Point> points{{0.5 * domain.length(0), domain.dimension() == 2 ? 0.5 * domain.length(1) : 0.0},
                            {0.2 * domain.length(0), domain.dimension() == 2 ? 0.7 * domain.length(1) : 0.0}};
  GrowthConstants g;
  std::vector<double> amplitudes;
  for (int e = -40; e <= 40; ++e) amplitudes.push_back(std::pow(10.0, e / 10.0));
  for (const auto& x : points) {
    for (double s : amplitudes) {
      if (s < 1.0) continue;
      for (double u : {s, -s}) g.c5 = std::max(g.c5, nl.F(x, u) / std::pow(s, nl.p));
    }
  }
  for (const auto& x : points) {
    for (double s : amplitudes) {
      for (double u : {s, -s}) g.c6 = std::max(g.c6, nl.F(x, u) - g.c5 * std::pow(s, nl.p));
    }
  }
  return g;
}

struct RadiusBound {
  double r_k = 0.0;
  double b_k_lower = 0.0;  // a (1/2 - 1/p) (c5 p beta^p / a)^{2/(2-p)} - c6
};

inline RadiusBound compute_r_k(double beta, double a, double p, const GrowthConstants& constants) {
  KIRCHHOFF_REQUIRE(p > 2.0, InvalidInput, "compute_r_k: exponent must exceed 2");
  KIRCHHOFF_REQUIRE(beta > 0.0 && std::isfinite(beta), InvalidInput, "compute_r_k: beta must be positive");
  KIRCHHOFF_REQUIRE(a > 0.0, InvalidInput, "compute_r_k: a must be positive");
  KIRCHHOFF_REQUIRE(constants.c5 > 0.0, InvalidInput, "compute_r_k: c5 must be positive");
  const double base = constants.c5 * p * std::pow(beta, p) / a;
  RadiusBound out;
  out.r_k = std::pow(base, 1.0 / (2.0 - p));
  out.b_k_lower = a * (0.5 - 1.0 / p) * std::pow(base, 2.0 / (2.0 - p)) - constants.c6;
  return out;
}

/// Smallest radius beyond which Phi <= 0 along every sampled unit direction of
/// Y_k = span{e_1..e_k}; also returns the largest sampled Phi on that sphere.
struct OuterRadius {
  double rho_k = 0.0;
  double a_k_sampled = 0.0;
};

inline OuterRadius estimate_rho_k(const BasisHandle& basis, int k, const KirchhoffParams& params,
                                  const Nonlinearity& nl, int samples = 64, std::uint64_t seed = 13) {
  KIRCHHOFF_REQUIRE(k >= 1 && k <= basis->size(), InvalidInput, "estimate_rho_k: invalid k");
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<GalerkinVector> directions;
  for (int j = 0; j < k; ++j) directions.push_back(GalerkinVector::unit(basis, j));
  for (int s = 0; s < samples; ++s) {
    GalerkinVector v(basis);
    for (int j = 0; j < k; ++j) v[j] = normal(rng) / std::sqrt(basis->eigenvalue(j));
    directions.push_back(std::move(v));
  }
  OuterRadius out;
  for (auto& v : directions) {
    v *= 1.0 / h1_norm(v);
    // last sign change of t -> Phi(t v) from + to -
    double hi = 1.0;
    int guard = 0;
    while (energy(hi * v, params, nl) > 0.0) {
      hi *= 2.0;
      KIRCHHOFF_REQUIRE(++guard < 200, NumericalFailure,
                        "estimate_rho_k: energy stays positive along a direction of Y_k");
    }
    double lo = hi;
    while (lo > 1e-12 && energy(lo * v, params, nl) <= 0.0) lo *= 0.5;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (energy(mid * v, params, nl) > 0.0 ? lo : hi) = mid;
    }
    out.rho_k = std::max(out.rho_k, hi);
  }
  out.rho_k *= 1.0 + 1e-12;
  out.a_k_sampled = -std::numeric_limits<double>::infinity();
  for (const auto& v : directions) out.a_k_sampled = std::max(out.a_k_sampled, energy(out.rho_k * v, params, nl));
  return out;
}

struct FountainGeometry {
  int k = 0;
  int m = 0;
  double beta_k = 0.0;
  double r_k = 0.0;
  double rho_k = 0.0;
  double b_k_lower = 0.0;

  void validate() const {
    KIRCHHOFF_REQUIRE(k >= 2, InvalidInput, "FountainGeometry: k must be >= 2");
    KIRCHHOFF_REQUIRE(m > k + 2, InvalidInput,
                      "FountainGeometry: need m > k+2, got m=" + std::to_string(m) + " k=" + std::to_string(k));
    KIRCHHOFF_REQUIRE(r_k > 0.0 && (rho_k == 0.0 || r_k < rho_k), InvalidInput,
                      "FountainGeometry: need 0 < r_k < rho_k");
  }
};

/// n_seeds points of N_k: the axis vector r_k e_k/||e_k|| first, then smoothed
/// random draws, each kept only if both cone distances reach mu_m.
inline std::vector<GalerkinVector> generate_seeds(const BasisHandle& basis, const FountainGeometry& geometry,
                                                  const ConeGeometry& cone, int n_seeds, std::uint64_t seed,
                                                  double smoothing = 1.0, int max_attempts = 0) {
  geometry.validate();
  KIRCHHOFF_REQUIRE(basis->size() == geometry.m, InvalidInput, "generate_seeds: basis size differs from m");
  KIRCHHOFF_REQUIRE(n_seeds >= 0, InvalidInput, "generate_seeds: negative seed count");
  if (max_attempts <= 0) max_attempts = 100 * std::max(n_seeds, 1);
  std::vector<GalerkinVector> seeds;
  if (n_seeds == 0) return seeds;
  auto admissible = [&](const GalerkinVector& u) {
    return cone_distance(u, Cone::positive) >= cone.mu_m && cone_distance(u, Cone::negative) >= cone.mu_m;
  };
  GalerkinVector axis = GalerkinVector::unit(basis, geometry.k - 1);
  axis *= geometry.r_k / std::sqrt(basis->eigenvalue(geometry.k - 1));
  if (admissible(axis)) seeds.push_back(std::move(axis));

  std::mt19937_64 rng(seed);
  int attempts = 0;
  while (static_cast<int>(seeds.size()) < n_seeds) {
    KIRCHHOFF_REQUIRE(attempts++ < max_attempts, NumericalFailure,
                      "generate_seeds: retries exhausted at k=" + std::to_string(geometry.k) +
                          " (mu_m = " + std::to_string(cone.mu_m) + " may be too large)");
    GalerkinVector u = sample_sphere(basis, geometry.k, geometry.r_k, rng, smoothing);
    if (admissible(u)) seeds.push_back(std::move(u));
  }
  return seeds;
}

struct SolutionRecord {
  Eigen::VectorXd coefficients;
  BasisHandle basis;
  double energy = 0.0;
  double residual = 0.0;
  SignParts signs;
  int nodal_domains = 0;
  bool sign_changing = false;
  double sign_tolerance = 0.0;
  int shell = 0;
  int m = 0;
  int flow_steps = 0;
  int seed_index = -1;
  int hits = 1;
  std::vector<Eigen::VectorXd> support;  // peak-manifold support used by the flow

  [[nodiscard]] GalerkinVector state() const { return GalerkinVector(basis, coefficients); }
  [[nodiscard]] int sign_changes() const { return std::max(nodal_domains - 1, 0); }
  [[nodiscard]] double min_sign_norm() const { return std::min(signs.h1_plus, signs.h1_minus); }
};

inline SolutionRecord make_record(const GalerkinVector& u, const KirchhoffParams& params, const Nonlinearity& nl,
                                  double sign_tolerance) {
  SolutionRecord rec;
  rec.coefficients = u.coefficients();
  rec.basis = u.basis_handle();
  rec.m = u.size();
  rec.energy = energy(u, params, nl);
  rec.residual = residual(u, params, nl).norm;
  rec.signs = positive_part_norms(u);
  rec.nodal_domains = count_nodal_domains(u);
  rec.sign_tolerance = sign_tolerance;
  rec.sign_changing = rec.min_sign_norm() > sign_tolerance && rec.nodal_domains >= 2;
  return rec;
}

/// u and w coincide modulo sign within tol (1 + ||u||).
inline bool same_modulo_sign(const GalerkinVector& u, const GalerkinVector& w, double tol) {
  const double bound = tol * (1.0 + h1_norm(u));
  return h1_norm(u - w) <= bound || h1_norm(u + w) <= bound;
}

struct SearchConfig {
  int k_min = 2;
  int k_max = 6;
  int seeds_per_shell = 32;
  std::uint64_t rng_seed = 1;
  double dedup_tolerance = 1e-6;
  double sign_tolerance_factor = 1e-6;  // sign tolerance = factor * r_k
  double mu_fraction = 0.4;
  double seed_smoothing = 1.0;
  int delta_samples = 500;
  int threads = 0;  // 0: hardware concurrency
  FlowConfig flow;
  BetaOptions beta;

  SearchConfig() {
    flow.keep_iterates = false;
    flow.max_steps = 3000;
  }

  void validate(int m) const {
    flow.validate();
    KIRCHHOFF_REQUIRE(seeds_per_shell >= 1, InvalidInput, "SearchConfig: seeds_per_shell must be >= 1");
    KIRCHHOFF_REQUIRE(dedup_tolerance > 0.0, InvalidInput, "SearchConfig: dedup_tolerance must be > 0");
    KIRCHHOFF_REQUIRE(sign_tolerance_factor > 0.0, InvalidInput,
                      "SearchConfig: sign_tolerance_factor must be > 0");
    KIRCHHOFF_REQUIRE(mu_fraction > 0.0 && mu_fraction < 1.0, InvalidInput,
                      "SearchConfig: mu_fraction must lie in (0, 1)");
    KIRCHHOFF_REQUIRE(delta_samples >= 0, InvalidInput, "SearchConfig: delta_samples must be >= 0");
    if (k_min <= k_max) {
      KIRCHHOFF_REQUIRE(k_min >= 2, InvalidInput, "SearchConfig: k_min must be >= 2");
      KIRCHHOFF_REQUIRE(m > k_max + 2, InvalidInput,
                        "SearchConfig: need m > k_max+2, got m=" + std::to_string(m) +
                            " k_max=" + std::to_string(k_max));
    }
  }
};

struct ShellReport {
  FountainGeometry geometry;
  ConeGeometry cone;
  double a_k_sampled = 0.0;  // max Phi on sampled directions of the sphere ||u|| = rho_k in Y_k
  double b_k_sampled = 0.0;  // min Phi over the seeds on N_k
  int support_dimension = 0;
  int seeds = 0;
  int converged = 0;
  int failed = 0;
  int new_records = 0;
  int duplicates = 0;
};

struct SearchResult {
  std::vector<SolutionRecord> records;  // sorted by energy
  std::vector<ShellReport> shells;
  std::optional<SolutionRecord> ground_state;
};

/// Runs body(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Ground state, then shells k_min..k_max. Empty k range returns no records.
inline SearchResult search(const BasisHandle& basis, const KirchhoffParams& params, const Nonlinearity& nl,
                           const SearchConfig& config) {
  params.validate();
  const int m = basis->size();
  config.validate(m);
  SearchResult result;
  if (config.k_min > config.k_max) return result;

  const GrowthConstants constants = fit_growth_constants(nl, basis->domain());
  const auto betas = estimate_beta_sequence(basis, 1, config.k_max, nl.p, config.beta);
  auto radius = [&](int k) { return compute_r_k(betas[static_cast<std::size_t>(k - 1)].beta, params.a, nl.p, constants); };

  std::vector<SolutionRecord> found;
  std::vector<GalerkinVector> support_elements;

  auto admit = [&](SolutionRecord rec) -> int {
    const GalerkinVector u = rec.state();
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (same_modulo_sign(u, found[i].state(), config.dedup_tolerance)) {
        ++found[i].hits;
        return -1;
      }
    }
    found.push_back(std::move(rec));
    return static_cast<int>(found.size()) - 1;
  };

  {
    const SupportSpace empty(basis);
    const FlowTrace trace = run_minimax_flow(GalerkinVector::unit(basis, 0), empty, config.flow, params, nl);
    if (trace.converged()) {
      SolutionRecord rec = make_record(*trace.final_state, params, nl, config.sign_tolerance_factor * radius(1).r_k);
      rec.shell = 1;
      rec.flow_steps = static_cast<int>(trace.steps());
      result.ground_state = rec;
      admit(rec);
      support_elements.push_back(*trace.final_state);
    }
  }

  for (int k = config.k_min; k <= config.k_max; ++k) {
    ShellReport report;
    const RadiusBound rb = radius(k);
    const OuterRadius outer = estimate_rho_k(basis, k, params, nl);
    report.geometry = {k, m, betas[static_cast<std::size_t>(k - 1)].beta, rb.r_k, std::max(outer.rho_k, rb.r_k * (1.0 + 1e-12)), rb.b_k_lower};
    report.a_k_sampled = outer.a_k_sampled;
    report.cone = make_cone_geometry(estimate_delta_m(basis, k, rb.r_k, config.delta_samples, config.rng_seed + 7919u * k),
                                     config.mu_fraction);
    const auto seeds = generate_seeds(basis, report.geometry, report.cone, config.seeds_per_shell,
                                      config.rng_seed * 1000003u + static_cast<std::uint64_t>(k), config.seed_smoothing);
    report.seeds = static_cast<int>(seeds.size());
    report.b_k_sampled = std::numeric_limits<double>::infinity();
    for (const auto& s : seeds) report.b_k_sampled = std::min(report.b_k_sampled, energy(s, params, nl));

    const SupportSpace support(basis, support_elements);
    report.support_dimension = support.dimension();
    std::vector<std::optional<FlowTrace>> traces(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), config.threads, [&](int i) {
      traces[static_cast<std::size_t>(i)] = run_minimax_flow(seeds[static_cast<std::size_t>(i)], support, config.flow, params, nl);
    });

    const double sign_tol = config.sign_tolerance_factor * rb.r_k;
    std::vector<Eigen::VectorXd> support_coefficients;
    for (const auto& e : support_elements) support_coefficients.push_back(e.coefficients());
    int lowest_new = -1;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const FlowTrace& trace = *traces[i];
      if (!trace.converged()) {
        ++report.failed;
        continue;
      }
      ++report.converged;
      SolutionRecord rec = make_record(*trace.final_state, params, nl, sign_tol);
      rec.shell = k;
      rec.flow_steps = static_cast<int>(trace.steps());
      rec.seed_index = static_cast<int>(i);
      rec.support = support_coefficients;
      const int index = admit(std::move(rec));
      if (index < 0) {
        ++report.duplicates;
        continue;
      }
      ++report.new_records;
      if (lowest_new < 0 || found[static_cast<std::size_t>(index)].energy < found[static_cast<std::size_t>(lowest_new)].energy) {
        lowest_new = index;
      }
    }
    if (lowest_new >= 0) support_elements.push_back(found[static_cast<std::size_t>(lowest_new)].state());
    result.shells.push_back(report);
  }

  result.records = std::move(found);
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const SolutionRecord& x, const SolutionRecord& y) { return x.energy < y.energy; });
  return result;
}

struct Refinement {
  SolutionRecord record;  // refined record, or the original when the flow failed
  bool converged = false;
  Termination reason = Termination::max_steps;
  double energy_drift = 0.0;  // |Phi_{m'} - Phi_m| / |Phi_m| (absolute when Phi_m = 0)
  double min_sign_norm = 0.0; // min over both levels of min(||u+||, ||u-||)
  bool classification_kept = false;
};

/// Embed the record and its support into `target` and rerun the peak flow from
/// the embedded point.
inline Refinement refine_in_m(const SolutionRecord& record, const BasisHandle& target,
                              const KirchhoffParams& params, const Nonlinearity& nl,
                              const FlowConfig& flow = SearchConfig().flow) {
  KIRCHHOFF_REQUIRE(target->size() >= record.m, InvalidInput, "refine_in_m: target dimension must not shrink");
  const GalerkinVector start = embed(record.state(), target);
  SupportSpace support(target);
  for (const auto& c : record.support) support.add(embed(GalerkinVector(record.basis, c), target));
  const FlowTrace trace = run_minimax_flow(start, support, flow, params, nl, MinimaxStart::point);

  Refinement out;
  out.reason = trace.reason;
  out.converged = trace.converged();
  if (!out.converged) {
    out.record = record;
    return out;
  }
  out.record = make_record(*trace.final_state, params, nl, record.sign_tolerance);
  out.record.shell = record.shell;
  out.record.seed_index = record.seed_index;
  out.record.flow_steps = static_cast<int>(trace.steps());
  for (const auto& c : record.support) out.record.support.push_back(embed(GalerkinVector(record.basis, c), target).coefficients());
  const double change = std::abs(out.record.energy - record.energy);
  out.energy_drift = record.energy == 0.0 ? change : change / std::abs(record.energy);
  out.min_sign_norm = std::min(record.min_sign_norm(), out.record.min_sign_norm());
  out.classification_kept = out.record.sign_changing == record.sign_changing;
  return out;
}

}  // namespace kirchhoff
