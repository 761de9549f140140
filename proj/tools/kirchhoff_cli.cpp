// kirchhoff: command-line driver for the sign-changing solution search.
//
//   kirchhoff run --config cfg.json [--output-dir DIR]
//   kirchhoff verify --bundle DIR/results.json [--threshold 1e-12]
//   kirchhoff oracle shoot --p 6 --zeros 1 [--a 1] [--b 0] [--length pi] [--csv out.csv]
//   kirchhoff oracle scaling --S 1 --a 1 --b 1 --p 6
//   kirchhoff check-lemmas --config cfg.json [--samples 500]
//
// Exit codes: 0 success, 1 usage, 2 invalid input, 3 numerical failure,
// 4 I/O failure, 5 verification failure.

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <string>

#include "CLI11.hpp"
#include "kirchhoff/kirchhoff.hpp"

namespace {

using namespace kirchhoff;

double parse_length(const std::string& text) {
  if (text == "pi") return std::numbers::pi;
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw InvalidInput("--length: expected a number or \"pi\", got '" + text + "'");
}

int cmd_run(const std::string& config_path, const std::string& output_dir) {
  RunConfig cfg = load_config(config_path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  const ResultBundle bundle = run(cfg);
  const auto dir = write_bundle(bundle);
  std::cout << summary_table(bundle);
  std::cout << "wrote " << (dir / "results.json").string() << " (" << bundle.search.records.size() << " records, "
            << std::fixed << std::setprecision(2) << bundle.elapsed_seconds << " s)\n";
  return 0;
}

int cmd_verify(const std::string& bundle_path, double threshold) {
  const VerifyReport report = verify(read_json_file(bundle_path));
  std::cout << std::setprecision(3) << "records            " << report.records << "\n"
            << "energy deviation   " << report.max_energy_deviation << "\n"
            << "residual deviation " << report.max_residual_deviation << "\n"
            << "max residual       " << report.max_residual << "\n"
            << "residual failures  " << report.residual_failures << "\n";
  if (report.max_deviation() > threshold || report.residual_failures > 0) {
    throw VerificationFailure("verify: max deviation " + std::to_string(report.max_deviation()) +
                              " exceeds threshold or residuals failed");
  }
  std::cout << "ok\n";
  return 0;
}

int cmd_shoot(double p, double a, double b, const std::string& length_text, int zeros, const std::string& csv) {
  const Nonlinearity nl = Nonlinearity::power(p);
  const double length = parse_length(length_text);
  const ShootingSolution w = shoot(nl, 1.0, length, zeros);
  std::cout << std::setprecision(17);
  const ScalingFactor sf = scaling_factor(w.gradient_sq, {a, b}, p);
  // w solves -w'' = f(w); t w solves the Kirchhoff problem with (a, b).
  const double t = sf.t;
  const double S = w.gradient_sq;
  const double kirchhoff_energy =
      0.5 * a * t * t * S + 0.25 * b * std::pow(t, 4) * S * S - std::pow(t, p) * w.potential;
  std::cout << "slope      " << w.slope << "\n"
            << "zeros      " << w.interior_zeros << "\n"
            << "u(L)       " << w.end_value << "\n"
            << "int w'^2   " << S << "\n"
            << "t          " << t << "\n"
            << "energy     " << kirchhoff_energy << "\n";
  if (!csv.empty()) {
    std::vector<double> scaled(w.u.size());
    for (std::size_t i = 0; i < w.u.size(); ++i) scaled[i] = t * w.u[i];
    write_profile_csv(csv, w.x, scaled);
  }
  return 0;
}

int cmd_scaling(double S, double a, double b, double p) {
  const ScalingFactor sf = scaling_factor(S, {a, b}, p);
  std::cout << std::setprecision(17) << "t       " << sf.t << "\n"
            << "defect  " << sf.defect() << "\n";
  return 0;
}

int cmd_check_lemmas(const std::string& config_path, int samples) {
  const RunConfig cfg = load_config(config_path);
  const BasisHandle basis = cfg.basis();
  const Nonlinearity nl = cfg.nonlinearity.build();
  const int k = std::max(cfg.k_min, 2);
  KIRCHHOFF_REQUIRE(basis->size() >= k, InvalidInput, "check-lemmas: m must be >= max(k_min, 2)");
  const auto beta = estimate_beta_k(basis, k, nl.p);
  const RadiusBound rb = compute_r_k(beta.beta, cfg.a, nl.p, fit_growth_constants(nl, basis->domain()));
  const ConeGeometry cone =
      make_cone_geometry(estimate_delta_m(basis, k, rb.r_k, cfg.delta_samples, cfg.rng_seed), cfg.mu_fraction);
  const auto points = lemma_samples(basis, samples, cone.mu_m, {}, cfg.rng_seed + 17);
  const LemmaReport r = check_A_lemma(points, cfg.params(), nl, cone.mu_m);
  std::cout << std::setprecision(6) << "samples               " << r.samples << "\n"
            << "mu_m                  " << cone.mu_m << " (delta_m " << cone.delta_m << ")\n"
            << "descent violations    " << r.descent_violations << "  min ratio " << r.min_descent_ratio << "\n"
            << "bound violations      " << r.bound_violations << "  max ratio " << r.max_bound_ratio << "\n"
            << "contraction checked   " << r.contraction_checked << "\n"
            << "contraction violations " << r.contraction_violations << "  max ratio " << r.max_contraction_ratio
            << "\n";
  if (!r.passed()) throw VerificationFailure("check-lemmas: operator inequalities violated");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-changing solutions of the Kirchhoff problem by spectral Galerkin descent"};
  app.require_subcommand(1);

  std::string config_path, output_dir, bundle_path, csv, length = "pi";
  double threshold = 1e-12, p = 6.0, a = 1.0, b = 0.0, S = 1.0;
  int zeros = 0, samples = 500;

  auto* run_cmd = app.add_subcommand("run", "search for solutions and write a result bundle");
  run_cmd->add_option("--config", config_path, "JSON config")->required();
  run_cmd->add_option("--output-dir", output_dir, "override the output directory");

  auto* verify_cmd = app.add_subcommand("verify", "recompute energies and residuals of a bundle");
  verify_cmd->add_option("--bundle", bundle_path, "path to results.json")->required();
  verify_cmd->add_option("--threshold", threshold, "largest accepted deviation");

  auto* oracle_cmd = app.add_subcommand("oracle", "independent reference solutions");
  oracle_cmd->require_subcommand(1);
  auto* shoot_cmd = oracle_cmd->add_subcommand("shoot", "1D shooting for f = |u|^{p-2} u, rescaled to (a, b)");
  shoot_cmd->add_option("--p", p, "exponent")->required();
  shoot_cmd->add_option("--zeros", zeros, "interior zeros")->required();
  shoot_cmd->add_option("--a", a, "a");
  shoot_cmd->add_option("--b", b, "b");
  shoot_cmd->add_option("--length", length, "interval length (number or pi)");
  shoot_cmd->add_option("--csv", csv, "write the profile x,u");
  auto* scaling_cmd = oracle_cmd->add_subcommand("scaling", "root of t^{p-2} = a + b S t^2");
  scaling_cmd->add_option("--S", S, "S = ||w||^2")->required();
  scaling_cmd->add_option("--a", a, "a");
  scaling_cmd->add_option("--b", b, "b");
  scaling_cmd->add_option("--p", p, "exponent")->required();

  auto* lemma_cmd = app.add_subcommand("check-lemmas", "sample the inequalities satisfied by A");
  lemma_cmd->add_option("--config", config_path, "JSON config")->required();
  lemma_cmd->add_option("--samples", samples, "random samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, output_dir);
    if (*verify_cmd) return cmd_verify(bundle_path, threshold);
    if (*shoot_cmd) return cmd_shoot(p, a, b, length, zeros, csv);
    if (*scaling_cmd) return cmd_scaling(S, a, b, p);
    if (*lemma_cmd) return cmd_check_lemmas(config_path, samples);
  } catch (const kirchhoff::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(kirchhoff::ErrorCategory::numerical);
  }
  return 1;
}
