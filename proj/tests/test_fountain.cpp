#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kirchhoff/fountain.hpp"

using namespace kirchhoff;

namespace {

constexpr double pi = std::numbers::pi;
const GrowthConstants kQuintic{1.0 / 6.0, 0.0};

FlowConfig quiet_flow() {
  FlowConfig flow;
  flow.keep_iterates = false;
  flow.max_steps = 3000;
  return flow;
}

}  // namespace

TEST(Beta, SingleModeClosedForm) {
  // enough nodes that |e_1|_6 is integrated to roundoff
  const auto basis = build_basis(Domain::interval(pi), 1, 64);
  const BetaEstimate est = estimate_beta_k(basis, 1, 6.0);
  EXPECT_NEAR(est.beta, std::pow(5.0 / (2.0 * pi * pi), 1.0 / 6.0), 1e-13);
  const auto four = build_basis(Domain::interval(pi), 4, 64);
  const BetaEstimate last = estimate_beta_k(four, 4, 6.0);
  EXPECT_NEAR(last.beta, lp_norm(GalerkinVector::unit(four, 3), 6.0) / 4.0, 1e-13);
}

TEST(Beta, NonincreasingInK) {
  const auto basis = build_basis(Domain::interval(pi), 24);
  const auto betas = estimate_beta_sequence(basis, 1, 12, 6.0);
  for (std::size_t i = 1; i < betas.size(); ++i) EXPECT_LE(betas[i].beta, betas[i - 1].beta);
  EXPECT_EQ(betas.front().k, 1);
  EXPECT_EQ(betas.back().k, 12);
}

TEST(Beta, DecaysAcrossShells) {
  const auto basis = build_basis(Domain::interval(pi), 64);
  const auto betas = estimate_beta_sequence(basis, 2, 16, 6.0);
  double previous = std::numeric_limits<double>::infinity();
  for (int k : {2, 4, 8, 16}) {
    const double beta = betas[static_cast<std::size_t>(k - 2)].beta;
    EXPECT_LT(beta, previous) << k;
    previous = beta;
  }
}

TEST(Beta, RejectsBadInput) {
  const auto basis = build_basis(Domain::interval(pi), 4);
  EXPECT_THROW(estimate_beta_k(basis, 0, 6.0), InvalidInput);
  EXPECT_THROW(estimate_beta_k(basis, 5, 6.0), InvalidInput);
  EXPECT_THROW(estimate_beta_k(basis, 2, 1.5), InvalidInput);
}

TEST(RadiusBound, PlugInValue) {
  const double beta = std::pow(5.0 / (2.0 * pi * pi), 1.0 / 6.0);
  EXPECT_NEAR(compute_r_k(beta, 1.0, 6.0, kQuintic).r_k, 1.4095806657155950956, 1e-14);
  EXPECT_NEAR(compute_r_k(0.7955, 1.0, 6.0, kQuintic).r_k, std::pow(0.7955, -1.5), 1e-14);
}

TEST(RadiusBound, HalvingBetaScalesRadius) {
  for (double p : {3.0, 5.0, 6.0}) {
    const GrowthConstants c{1.0 / p, 0.0};
    const double r1 = compute_r_k(0.4, 1.3, p, c).r_k;
    const double r2 = compute_r_k(0.2, 1.3, p, c).r_k;
    EXPECT_NEAR(r2 / r1, std::pow(2.0, p / (p - 2.0)), 1e-12 * r2 / r1);
  }
}

TEST(RadiusBound, LowerBoundGrowsAsBetaShrinks) {
  double previous = -std::numeric_limits<double>::infinity();
  for (double beta : {0.8, 0.6, 0.4, 0.2}) {
    const double b = compute_r_k(beta, 1.0, 6.0, kQuintic).b_k_lower;
    EXPECT_GT(b, previous);
    previous = b;
  }
}

TEST(RadiusBound, RejectsBadInput) {
  EXPECT_THROW(compute_r_k(0.5, 1.0, 2.0, kQuintic), InvalidInput);
  EXPECT_THROW(compute_r_k(0.0, 1.0, 6.0, kQuintic), InvalidInput);
  EXPECT_THROW(compute_r_k(0.5, 0.0, 6.0, kQuintic), InvalidInput);
}

TEST(RadiusBound, StrictlyIncreasingOverShells) {
  const auto basis = build_basis(Domain::interval(pi), 64);
  const auto betas = estimate_beta_sequence(basis, 2, 16, 6.0);
  for (std::size_t i = 1; i < betas.size(); ++i) {
    EXPECT_GT(compute_r_k(betas[i].beta, 1.0, 6.0, kQuintic).r_k,
              compute_r_k(betas[i - 1].beta, 1.0, 6.0, kQuintic).r_k);
  }
}

TEST(GrowthConstants, PowerIsExactAndSampledBoundHolds) {
  const auto exact = fit_growth_constants(Nonlinearity::power(6.0, 2.0), Domain::interval(1.0));
  EXPECT_DOUBLE_EQ(exact.c5, 2.0 / 6.0);
  EXPECT_EQ(exact.c6, 0.0);
  const auto table = Nonlinearity::tabulated({0.0, 1.0, 2.0}, {0.0, 1.0, 40.0}, 6.0, 5.0);
  const auto fitted = fit_growth_constants(table, Domain::interval(1.0));
  for (double u : {0.3, 1.0, 1.9, 5.0, 30.0}) {
    EXPECT_LE(table.F({0.5, 0.0}, u), fitted.c5 * std::pow(u, 6.0) + fitted.c6 + 1e-12);
  }
}

TEST(OuterRadius, EnergyNonpositiveBeyond) {
  const auto basis = build_basis(Domain::interval(pi), 16);
  const Nonlinearity nl = Nonlinearity::power(6.0);
  const OuterRadius outer = estimate_rho_k(basis, 3, {1.0, 1.0}, nl);
  EXPECT_LE(outer.a_k_sampled, 0.0);
  for (int j = 0; j < 3; ++j) {
    EXPECT_LE(energy((outer.rho_k / std::sqrt(basis->eigenvalue(j))) * GalerkinVector::unit(basis, j), {1.0, 1.0}, nl),
              0.0);
  }
}

TEST(Geometry, ValidateChecksInvariants) {
  FountainGeometry g{2, 8, 0.5, 1.0, 2.0, 0.1};
  EXPECT_NO_THROW(g.validate());
  g.m = 4;
  EXPECT_THROW(g.validate(), InvalidInput);
  g = {2, 8, 0.5, 3.0, 2.0, 0.1};
  EXPECT_THROW(g.validate(), InvalidInput);
  g = {1, 8, 0.5, 1.0, 2.0, 0.1};
  EXPECT_THROW(g.validate(), InvalidInput);
}

TEST(Seeds, OnSphereAndOutsideCones) {
  const auto basis = build_basis(Domain::interval(pi), 16);
  for (int k : {2, 3, 5}) {
    const double r = 1.5;
    const FountainGeometry geometry{k, 16, 0.0, r, 0.0, 0.0};
    const ConeGeometry cone = make_cone_geometry(estimate_delta_m(basis, k, r, 200));
    const auto seeds = generate_seeds(basis, geometry, cone, 12, 99);
    ASSERT_EQ(seeds.size(), 12u);
    for (const auto& u : seeds) {
      EXPECT_NEAR(h1_norm(u), r, 1e-12);
      EXPECT_LE(u.coefficients().head(k - 1).cwiseAbs().maxCoeff(), 0.0);
      for (const auto& s : {u, -u}) {
        EXPECT_GE(cone_distance(s, Cone::positive), cone.mu_m);
        EXPECT_GE(cone_distance(s, Cone::negative), cone.mu_m);
      }
    }
  }
}

TEST(Seeds, ExhaustedRetriesAreReported) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  const FountainGeometry geometry{2, 8, 0.0, 1.0, 0.0, 0.0};
  EXPECT_THROW(generate_seeds(basis, geometry, {100.0, 50.0}, 4, 1), NumericalFailure);
}

TEST(Seeds, GoldenTable) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  const FountainGeometry geometry{2, 8, 0.0, 1.0, 0.0, 0.0};
  const ConeGeometry cone = make_cone_geometry(estimate_delta_m(basis, 2, 1.0, 500, 7));
  const auto seeds = generate_seeds(basis, geometry, cone, 16, 2024);
  const std::filesystem::path path = std::filesystem::path(KIRCHHOFF_TEST_DATA) / "seeds_k2_m8.txt";

  if (std::getenv("KIRCHHOFF_REGENERATE_GOLDEN") != nullptr) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    out.precision(17);
    for (const auto& u : seeds) {
      for (int j = 0; j < u.size(); ++j) out << (j ? " " : "") << u[j];
      out << "\n";
    }
  }
  std::ifstream in(path);
  ASSERT_TRUE(in) << "missing golden file " << path;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(row, seeds.size());
    std::istringstream fields(line);
    for (int j = 0; j < 8; ++j) {
      double value = 0.0;
      ASSERT_TRUE(fields >> value);
      EXPECT_NEAR(seeds[row][j], value, 1e-15) << "seed " << row << " mode " << j;
    }
    ++row;
  }
  EXPECT_EQ(row, seeds.size());
}

TEST(Records, ClassificationOfModes) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  const Nonlinearity nl = Nonlinearity::power(6.0);
  const SolutionRecord one = make_record(GalerkinVector::unit(basis, 0), {1.0, 0.0}, nl, 1e-6);
  EXPECT_FALSE(one.sign_changing);
  EXPECT_LE(one.signs.h1_minus, 1e-8);
  EXPECT_EQ(one.sign_changes(), 0);
  const SolutionRecord two = make_record(GalerkinVector::unit(basis, 2), {1.0, 0.0}, nl, 1e-6);
  EXPECT_TRUE(two.sign_changing);
  EXPECT_EQ(two.sign_changes(), 2);
}

TEST(Records, FlowsFromOppositeSeedsDeduplicate) {
  const auto basis = build_basis(Domain::interval(pi), 32);
  const Nonlinearity nl = Nonlinearity::power(6.0);
  const KirchhoffParams params{1.0, 0.0};
  const FlowConfig flow = quiet_flow();
  const FlowTrace ground = run_minimax_flow(GalerkinVector::unit(basis, 0), SupportSpace(basis), flow, params, nl);
  ASSERT_TRUE(ground.converged());
  const SupportSpace support(basis, {*ground.final_state});
  const GalerkinVector u0 = GalerkinVector::unit(basis, 1) + 0.2 * GalerkinVector::unit(basis, 4);
  const FlowTrace plus = run_minimax_flow(u0, support, flow, params, nl);
  const FlowTrace minus = run_minimax_flow(-u0, support, flow, params, nl);
  ASSERT_TRUE(plus.converged());
  ASSERT_TRUE(minus.converged());
  EXPECT_TRUE(same_modulo_sign(*plus.final_state, *minus.final_state, 1e-6));
  EXPECT_FALSE(same_modulo_sign(*plus.final_state, *ground.final_state, 1e-6));
}

TEST(Search, EmptyRangeReturnsNothing) {
  const auto basis = build_basis(Domain::interval(pi), 16);
  SearchConfig config;
  config.k_min = 5;
  config.k_max = 4;
  const SearchResult result = search(basis, {1.0, 0.0}, Nonlinearity::power(6.0), config);
  EXPECT_TRUE(result.records.empty());
  EXPECT_TRUE(result.shells.empty());
}

TEST(Search, RejectsSmallGalerkinDimension) {
  const auto basis = build_basis(Domain::interval(pi), 6);
  SearchConfig config;
  config.k_max = 4;
  EXPECT_THROW(search(basis, {1.0, 0.0}, Nonlinearity::power(6.0), config), InvalidInput);
}

TEST(Search, SmallRunIsDeterministicAndClassified) {
  const auto basis = build_basis(Domain::interval(pi), 32);
  const Nonlinearity nl = Nonlinearity::power(6.0);
  SearchConfig config;
  config.k_min = 2;
  config.k_max = 3;
  config.seeds_per_shell = 4;
  config.delta_samples = 100;
  const SearchResult first = search(basis, {1.0, 0.0}, nl, config);
  const SearchResult second = search(basis, {1.0, 0.0}, nl, config);
  ASSERT_EQ(first.records.size(), second.records.size());
  ASSERT_FALSE(first.records.empty());
  ASSERT_TRUE(first.ground_state.has_value());
  EXPECT_FALSE(first.ground_state->sign_changing);
  for (std::size_t i = 0; i < first.records.size(); ++i) {
    EXPECT_EQ(first.records[i].coefficients, second.records[i].coefficients);
    const SolutionRecord& rec = first.records[i];
    EXPECT_LE(rec.residual, config.flow.threshold(h1_norm(rec.state())));
    const double n2 = h1_norm_squared(rec.state());
    const KirchhoffParams params{1.0, 0.0};
    EXPECT_LE(h1_norm(gradient(rec.state(), params, nl)),
              params.stiffness(n2) * config.flow.threshold(std::sqrt(n2)) * (1.0 + 1e-9));
    if (i > 0) EXPECT_LE(first.records[i - 1].energy, rec.energy);
    if (rec.sign_changing) {
      EXPECT_GE(rec.sign_changes(), 1);
      EXPECT_GT(rec.min_sign_norm(), rec.sign_tolerance);
    } else {
      EXPECT_LE(rec.min_sign_norm(), 1e-8);
    }
  }
  ASSERT_EQ(first.shells.size(), 2u);
  for (const auto& shell : first.shells) {
    EXPECT_EQ(shell.seeds, 4);
    EXPECT_EQ(shell.converged + shell.failed, shell.seeds);
    EXPECT_LT(shell.cone.mu_m, shell.cone.delta_m);
    EXPECT_LT(shell.geometry.r_k, shell.geometry.rho_k);
  }
}

TEST(Refine, ZeroNonlinearityKeepsRecord) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  const Nonlinearity zero = Nonlinearity::zero();
  const SolutionRecord rec = make_record(GalerkinVector(basis), {1.0, 0.0}, zero, 1e-6);
  const Refinement out = refine_in_m(rec, build_basis(Domain::interval(pi), 16), {1.0, 0.0}, zero);
  EXPECT_FALSE(out.converged);
  EXPECT_EQ(out.record.coefficients, rec.coefficients);
  EXPECT_EQ(out.record.energy, 0.0);
}

TEST(Refine, NodalSolutionDriftIsSmall) {
  const Nonlinearity nl = Nonlinearity::power(6.0);
  const KirchhoffParams params{1.0, 0.0};
  const FlowConfig flow = quiet_flow();
  const auto coarse = build_basis(Domain::interval(pi), 32);
  const FlowTrace ground = run_minimax_flow(GalerkinVector::unit(coarse, 0), SupportSpace(coarse), flow, params, nl);
  ASSERT_TRUE(ground.converged());
  const SupportSpace support(coarse, {*ground.final_state});
  const FlowTrace nodal = run_minimax_flow(GalerkinVector::unit(coarse, 1), support, flow, params, nl);
  ASSERT_TRUE(nodal.converged());
  SolutionRecord rec = make_record(*nodal.final_state, params, nl, 1e-6);
  rec.support.push_back(ground.final_state->coefficients());
  ASSERT_TRUE(rec.sign_changing);

  const Refinement out = refine_in_m(rec, build_basis(Domain::interval(pi), 64), params, nl, flow);
  ASSERT_TRUE(out.converged) << to_string(out.reason);
  EXPECT_LE(out.energy_drift, 1e-6);
  EXPECT_TRUE(out.classification_kept);
  EXPECT_GT(out.min_sign_norm, 1e-3);
  EXPECT_EQ(out.record.m, 64);
  EXPECT_THROW(refine_in_m(out.record, coarse, params, nl, flow), InvalidInput);
}
