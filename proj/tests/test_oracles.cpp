#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "kirchhoff/flow.hpp"
#include "kirchhoff/oracles.hpp"

using namespace kirchhoff;

namespace {

constexpr double pi = std::numbers::pi;

// Reference values for -w'' = w^5 on (0, pi) with j interior zeros, from the
// first integral w'^2/2 + w^6/6 = s^2/2 evaluated at 30 digits.
struct Reference {
  int zeros;
  double slope;
  double energy;
  double gradient_sq;
  double t_b1;
};

constexpr Reference kReferences[] = {
    {0, 0.89454681998792122676, 0.62848661625330630721, 1.8854598487599182815, 1.5221840209072200823},
    {1, 2.5301604900092837291, 5.0278929300264504978, 15.083678790079346252, 3.8922598520054473304},
    {2, 4.6482016259047501949, 16.969138638839265995, 50.9074159165177936, 7.1363192085292719094},
    {3, 7.1563745599033698141, 40.223143440211603733, 120.66943032063477001, 10.985340998558198095},
};

}  // namespace

TEST(Shooting, MatchesReferenceValues) {
  const Nonlinearity nl = Nonlinearity::power(6.0);
  for (const auto& ref : kReferences) {
    const ShootingSolution w = shoot(nl, 1.0, pi, ref.zeros);
    EXPECT_EQ(w.interior_zeros, ref.zeros);
    EXPECT_NEAR(w.slope, ref.slope, 1e-11 * ref.slope);
    EXPECT_NEAR(w.energy, ref.energy, 1e-10 * ref.energy);
    EXPECT_NEAR(w.gradient_sq, ref.gradient_sq, 1e-10 * ref.gradient_sq);
    EXPECT_LE(std::abs(w.end_value), 1e-10);
    EXPECT_EQ(w.u.front(), 0.0);
  }
}

TEST(Shooting, GroundStateSymmetricAndPositive) {
  const ShootingSolution w = shoot(Nonlinearity::power(6.0), 1.0, pi, 0);
  const std::size_t n = w.u.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    EXPECT_GT(w.u[i], 0.0);
    EXPECT_NEAR(w.u[i], w.u[n - 1 - i], 1e-8);
  }
}

TEST(Shooting, NodalProfileOddAboutMidpoint) {
  const ShootingSolution w = shoot(Nonlinearity::power(6.0), 1.0, pi, 1);
  const std::size_t n = w.u.size();
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(w.u[i], -w.u[n - 1 - i], 1e-8);
}

TEST(Shooting, ResonantLinearRejected) {
  EXPECT_THROW(shoot(Nonlinearity::linear(1.0), 1.0, pi, 0), InvalidInput);
}

TEST(Shooting, RejectsNegativeZeroCount) {
  EXPECT_THROW(shoot(Nonlinearity::power(6.0), 1.0, pi, -1), InvalidInput);
}

TEST(Shooting, ProjectionResidualDecaysWithM) {
  const Nonlinearity nl = Nonlinearity::power(6.0);
  const ShootingSolution w = shoot(nl, 1.0, pi, 0);
  std::vector<double> residuals;
  for (int m : {8, 16, 32}) {
    const auto basis = build_basis(Domain::interval(pi), m);
    residuals.push_back(residual(project_profile(w, basis), {1.0, 0.0}, nl).norm);
  }
  EXPECT_LT(residuals[1], 0.1 * residuals[0]);
  EXPECT_LT(residuals[2], 0.1 * residuals[1]);
}

TEST(Scaling, ClosedForms) {
  EXPECT_NEAR(scaling_factor(3.7, {1.0, 0.0}, 6.0).t, 1.0, 1e-14);
  EXPECT_NEAR(scaling_factor(3.7, {2.0, 0.0}, 6.0).t, std::pow(2.0, 0.25), 1e-14);
  const ScalingFactor sf = scaling_factor(1.0, {1.0, 1.0}, 6.0);
  EXPECT_NEAR(sf.t, 1.2720196495140689643, 1e-13);
  EXPECT_LE(std::abs(sf.defect()), 1e-12);
  for (const auto& ref : kReferences) {
    const ScalingFactor s = scaling_factor(ref.gradient_sq, {1.0, 1.0}, 6.0);
    EXPECT_NEAR(s.t, ref.t_b1, 1e-12 * ref.t_b1);
    EXPECT_LE(std::abs(s.defect()), 1e-12 * std::pow(s.t, 4));
  }
}

TEST(Scaling, RejectsLowExponent) {
  EXPECT_THROW(scaling_factor(1.0, {1.0, 1.0}, 4.0), InvalidInput);
  EXPECT_THROW(scaling_factor(0.0, {1.0, 1.0}, 6.0), InvalidInput);
}

TEST(Scaling, ScaledProfileIsKirchhoffCritical) {
  const Nonlinearity nl = Nonlinearity::power(6.0);
  const KirchhoffParams params{1.0, 1.0};
  const auto basis = build_basis(Domain::interval(pi), 64);
  const ShootingSolution w = shoot(nl, 1.0, pi, 0);
  const ScalingFactor sf = scaling_factor(w.gradient_sq, params, 6.0);
  const GalerkinVector u = sf.t * project_profile(w, basis);
  EXPECT_LE(residual(u, params, nl).norm, 1e-8);
  const double t = sf.t;
  const double S = w.gradient_sq;
  const double formula = 0.5 * t * t * S + 0.25 * std::pow(t, 4) * S * S - std::pow(t, 6) * w.potential;
  EXPECT_NEAR(energy(u, params, nl), formula, 1e-10 * std::abs(formula));
  EXPECT_NEAR(formula, 3.0466883875080173411, 1e-10 * formula);
}

TEST(ExactCone, ConeMembersHaveZeroDistance) {
  const auto basis = build_basis(Domain::interval(pi), 4);
  const GalerkinVector u = GalerkinVector::unit(basis, 0) + 0.2 * GalerkinVector::unit(basis, 2);
  EXPECT_LE(exact_cone_projection(u, Cone::positive), 1e-10);
  EXPECT_LE(exact_cone_projection(-u, Cone::negative), 1e-10);
}

TEST(ExactCone, NegativeFirstMode) {
  const auto basis = build_basis(Domain::interval(pi), 1);
  EXPECT_NEAR(exact_cone_projection(-GalerkinVector::unit(basis, 0)), 1.0, 1e-12);
}

TEST(ExactCone, SecondModeBelowProxy) {
  for (int m : {2, 3, 4}) {
    const auto basis = build_basis(Domain::interval(pi), m);
    const GalerkinVector e2 = GalerkinVector::unit(basis, 1);
    EXPECT_LE(exact_cone_projection(e2), cone_distance(e2, Cone::positive) + 1e-12);
  }
  const auto two = build_basis(Domain::interval(pi), 2);
  EXPECT_NEAR(exact_cone_projection(GalerkinVector::unit(two, 1)), 1.41361930952101, 1e-9);
}

TEST(ExactCone, RejectsLargeM) {
  const auto basis = build_basis(Domain::interval(pi), 7);
  EXPECT_THROW(exact_cone_projection(GalerkinVector::unit(basis, 0)), InvalidInput);
}

TEST(Nnls, MatchesKnownSolution) {
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd b(3);
  b << 2, -1, 1;
  const Eigen::VectorXd x = nnls(A, b);
  // unconstrained optimum has x2 < 0; the active-set answer is x = (1.5, 0)
  EXPECT_NEAR(x[0], 1.5, 1e-14);
  EXPECT_EQ(x[1], 0.0);
}

TEST(FdCheck, QuadraticIsExact) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  std::mt19937_64 rng(1);
  const GalerkinVector u = sample_sphere(basis, 1, 1.0, rng);
  const GalerkinVector v = sample_sphere(basis, 1, 1.0, rng);
  EXPECT_LE(fd_gradient_check(u, v, {1.0, 0.0}, Nonlinearity::zero(), 1e-3), 1e-13);
  EXPECT_THROW(fd_gradient_check(u, v, {1.0, 0.0}, Nonlinearity::zero(), 0.0), InvalidInput);
}

TEST(FdCheck, SecondOrderConvergence) {
  const auto basis = build_basis(Domain::interval(pi), 16);
  const Nonlinearity nl = Nonlinearity::power(6.0);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const GalerkinVector u = sample_sphere(basis, 1, 1.5, rng, 1.0);
    const GalerkinVector v = sample_sphere(basis, 1, 1.0, rng, 1.0);
    EXPECT_LE(fd_gradient_check(u, v, {1.0, 1.0}, nl, 1e-5), 1e-6);
    const double coarse = fd_gradient_check(u, v, {1.0, 1.0}, nl, 1e-2);
    const double fine = fd_gradient_check(u, v, {1.0, 1.0}, nl, 5e-3);
    EXPECT_NEAR(coarse / fine, 4.0, 0.8);
  }
}

TEST(ProfileCsv, WritesHeaderAndRows) {
  const auto path = std::filesystem::temp_directory_path() / "kirchhoff_profile_test.csv";
  write_profile_csv(path.string(), {0.0, 0.5}, {0.0, 1.25});
  std::ifstream in(path);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(header, "x,u");
  EXPECT_EQ(first, "0,0");
  EXPECT_EQ(second, "0.5,1.25");
  std::filesystem::remove(path);
  EXPECT_THROW(write_profile_csv("/nonexistent-dir/x.csv", {0.0}, {0.0}), IoFailure);
}
