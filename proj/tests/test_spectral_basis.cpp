#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kirchhoff/spectral_basis.hpp"

using namespace kirchhoff;

namespace {

constexpr double pi = std::numbers::pi;

GalerkinVector random_vector(const BasisHandle& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  GalerkinVector u(basis);
  for (int j = 0; j < basis->size(); ++j) u[j] = normal(rng) / (1.0 + j);
  return u;
}

}  // namespace

TEST(Quadrature, IntegratesPolynomialsExactly) {
  const auto rule = gauss_legendre(7, -1.0, 2.0);
  for (int degree = 0; degree <= 13; ++degree) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * std::pow(rule.nodes[i], degree);
    const double exact = (std::pow(2.0, degree + 1) - std::pow(-1.0, degree + 1)) / (degree + 1);
    EXPECT_NEAR(sum, exact, 1e-12 * (1.0 + std::abs(exact))) << "degree " << degree;
  }
}

TEST(Quadrature, NodesAscendingAndSymmetric) {
  const auto rule = gauss_legendre(40, 0.0, pi);
  for (std::size_t i = 1; i < rule.size(); ++i) EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    EXPECT_NEAR(rule.nodes[i] + rule.nodes[rule.size() - 1 - i], pi, 1e-14);
    EXPECT_NEAR(rule.weights[i], rule.weights[rule.size() - 1 - i], 1e-15);
  }
}

TEST(Quadrature, RejectsBadInput) {
  EXPECT_THROW(gauss_legendre(0, 0.0, 1.0), InvalidInput);
  EXPECT_THROW(gauss_legendre(3, 1.0, 1.0), InvalidInput);
}

TEST(Domain, RejectsNonPositiveLengths) {
  EXPECT_THROW(Domain::interval(0.0), InvalidInput);
  EXPECT_THROW(Domain::interval(-1.0), InvalidInput);
  EXPECT_THROW(Domain::rectangle(1.0, std::numeric_limits<double>::infinity()), InvalidInput);
  EXPECT_NO_THROW(Domain::rectangle(1.0, 2.0));
}

TEST(BuildBasis, IntervalModeThree) {
  const auto basis = build_basis(Domain::interval(pi), 5);
  EXPECT_DOUBLE_EQ(basis->eigenvalue(2), 9.0);
  for (double x : {0.1, 0.7, 2.9}) {
    EXPECT_NEAR(basis->evaluate_mode(2, {x, 0.0}), std::sqrt(2.0 / pi) * std::sin(3.0 * x), 1e-15);
  }
}

TEST(BuildBasis, RectangleTensorModes) {
  const auto basis = build_basis(Domain::rectangle(pi, pi), 6);
  const int j = basis->position_of({1, 2});
  ASSERT_GE(j, 0);
  EXPECT_DOUBLE_EQ(basis->eigenvalue(j), 5.0);
  // ties broken lexicographically: (1,2) before (2,1)
  EXPECT_EQ(basis->modes()[1].index, (std::array<int, 2>{1, 2}));
  EXPECT_EQ(basis->modes()[2].index, (std::array<int, 2>{2, 1}));
  const auto groups = basis->eigenvalue_groups();
  ASSERT_GE(groups.size(), 2u);
  EXPECT_DOUBLE_EQ(groups[1].first, 5.0);
  EXPECT_EQ(groups[1].second, 2);
}

TEST(BuildBasis, EigenvaluesSortedAndPositive) {
  for (const auto& domain : {Domain::interval(2.5), Domain::rectangle(1.0, 3.0)}) {
    const auto basis = build_basis(domain, 30);
    for (int j = 0; j < basis->size(); ++j) {
      EXPECT_GT(basis->eigenvalue(j), 0.0);
      if (j > 0) EXPECT_LE(basis->eigenvalue(j - 1), basis->eigenvalue(j));
    }
  }
}

TEST(BuildBasis, RejectsTooFewNodesAndModes) {
  EXPECT_THROW(build_basis(Domain::interval(pi), 0), InvalidInput);
  EXPECT_THROW(build_basis(Domain::interval(pi), 10, 5), InvalidInput);
}

TEST(BuildBasis, DefaultGridSize) {
  const auto basis = build_basis(Domain::interval(pi), 64);
  EXPECT_EQ(basis->grid_size(), 258);
}

TEST(BuildBasis, GramMatrixIsIdentity) {
  for (const auto& domain : {Domain::interval(pi), Domain::interval(0.7), Domain::rectangle(pi, 2.0)}) {
    const auto basis = build_basis(domain, 24);
    const Eigen::MatrixXd gram =
        basis->mode_values().transpose() * basis->weights().asDiagonal() * basis->mode_values();
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(24, 24)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BuildBasis, ParsevalAgainstAnalyticGradient) {
  std::mt19937_64 rng(5);
  for (const auto& domain : {Domain::interval(pi), Domain::rectangle(pi, 1.5)}) {
    const auto basis = build_basis(domain, 20);
    const GalerkinVector u = random_vector(basis, rng);
    double integral = 0.0;
    for (int q = 0; q < basis->grid_size(); ++q) {
      Point grad{0.0, 0.0};
      for (int j = 0; j < basis->size(); ++j) {
        const Point g = basis->evaluate_mode_gradient(j, basis->nodes()[q]);
        grad[0] += u[j] * g[0];
        grad[1] += u[j] * g[1];
      }
      integral += basis->weights()[q] * (grad[0] * grad[0] + grad[1] * grad[1]);
    }
    EXPECT_NEAR(h1_norm_squared(u), integral, 1e-10 * (1.0 + integral));
  }
}

TEST(BuildBasis, WeakEigenRelation) {
  // int grad e_i . grad e_j - lambda_j e_i e_j = 0 for all i, j
  const auto basis = build_basis(Domain::rectangle(pi, 2.0), 12);
  for (int j = 0; j < basis->size(); ++j) {
    for (int i = 0; i < basis->size(); ++i) {
      double sum = 0.0;
      for (int q = 0; q < basis->grid_size(); ++q) {
        const Point x = basis->nodes()[q];
        const Point gi = basis->evaluate_mode_gradient(i, x);
        const Point gj = basis->evaluate_mode_gradient(j, x);
        sum += basis->weights()[q] * (gi[0] * gj[0] + gi[1] * gj[1] -
                                      basis->eigenvalue(j) * basis->evaluate_mode(i, x) * basis->evaluate_mode(j, x));
      }
      EXPECT_NEAR(sum, 0.0, 1e-10 * basis->eigenvalue(j)) << i << "," << j;
    }
  }
}

TEST(Transforms, ZeroAndFirstMode) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  EXPECT_EQ(to_grid(GalerkinVector(basis)).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::VectorXd g = to_grid(GalerkinVector::unit(basis, 0));
  for (int q = 0; q < basis->grid_size(); ++q) {
    EXPECT_NEAR(g[q], std::sqrt(2.0 / pi) * std::sin(basis->nodes()[q][0]), 1e-15);
  }
}

TEST(Transforms, ProjectIsLeftInverseOfToGrid) {
  std::mt19937_64 rng(9);
  for (const auto& domain : {Domain::interval(pi), Domain::rectangle(1.0, 2.0)}) {
    const auto basis = build_basis(domain, 32);
    for (int trial = 0; trial < 5; ++trial) {
      const GalerkinVector u = random_vector(basis, rng);
      const GalerkinVector back = project(basis, to_grid(u));
      EXPECT_LE((back.coefficients() - u.coefficients()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Transforms, ProjectSecondModeGivesUnitVector) {
  const auto basis = build_basis(Domain::interval(pi), 6);
  const GalerkinVector u = project(basis, basis->mode_values().col(1));
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(u[j], j == 1 ? 1.0 : 0.0, 1e-13);
}

TEST(Transforms, ProductToSumIdentity) {
  // sin x sin 2x = (cos x - cos 3x)/2 is odd about pi/2, so only even modes
  // appear: c_k = sqrt(2/pi) (k/(k^2-1) - k/(k^2-9)).
  const auto basis = build_basis(Domain::interval(pi), 6);
  Eigen::VectorXd g(basis->grid_size());
  for (int q = 0; q < g.size(); ++q) {
    const double x = basis->nodes()[q][0];
    g[q] = std::sin(x) * std::sin(2.0 * x);
  }
  const GalerkinVector u = project(basis, g);
  for (int k = 1; k <= 6; ++k) {
    const double expected =
        k % 2 == 1 ? 0.0 : std::sqrt(2.0 / pi) * (k / (k * k - 1.0) - k / (k * k - 9.0));
    EXPECT_NEAR(u[k - 1], expected, 1e-13) << k;
  }
  EXPECT_NEAR(u[1], std::sqrt(2.0 / pi) * 16.0 / 15.0, 1e-13);
}

TEST(Norms, BasicValues) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  const GalerkinVector e1 = GalerkinVector::unit(basis, 0);
  EXPECT_NEAR(h1_norm(e1), 1.0, 1e-15);
  EXPECT_NEAR(l2_norm(e1), 1.0, 1e-15);
  // |e_1|_6^6 = (2/pi)^3 * 5 pi / 16 = 5 / (2 pi^2)
  EXPECT_NEAR(std::pow(lp_norm(e1, 6.0), 6.0), 5.0 / (2.0 * pi * pi), 1e-13);
  std::mt19937_64 rng(1);
  const GalerkinVector u = random_vector(basis, rng);
  EXPECT_NEAR(h1_norm(2.0 * u), 2.0 * h1_norm(u), 1e-13);
  double weighted = 0.0;
  for (int j = 0; j < 8; ++j) weighted += basis->eigenvalue(j) * u[j] * u[j];
  EXPECT_NEAR(h1_norm_squared(u), weighted, 1e-13);
  EXPECT_THROW(lp_norm(u, 0.5), InvalidInput);
}

TEST(GalerkinVector, MixedBasesRejected) {
  const auto a = build_basis(Domain::interval(pi), 4);
  const auto b = build_basis(Domain::interval(pi), 4);
  EXPECT_THROW(GalerkinVector::unit(a, 0) + GalerkinVector::unit(b, 0), InvalidInput);
}

TEST(Embed, ZeroPadsByModeIndex) {
  const auto small = build_basis(Domain::rectangle(pi, pi), 5);
  const auto large = build_basis(Domain::rectangle(pi, pi), 20);
  std::mt19937_64 rng(3);
  const GalerkinVector u = random_vector(small, rng);
  const GalerkinVector v = embed(u, large);
  EXPECT_NEAR(h1_norm(u), h1_norm(v), 1e-14);
  for (const Point x : {Point{0.3, 1.1}, Point{2.0, 2.5}}) EXPECT_NEAR(evaluate(u, x), evaluate(v, x), 1e-14);
}

TEST(NodalDomains, CountsSineModes) {
  const auto basis = build_basis(Domain::interval(pi), 8);
  for (int j = 0; j < 6; ++j) EXPECT_EQ(count_nodal_domains(GalerkinVector::unit(basis, j)), j + 1);
  EXPECT_EQ(count_nodal_domains(GalerkinVector(basis)), 0);
  const auto square = build_basis(Domain::rectangle(pi, pi), 6);
  EXPECT_EQ(count_nodal_domains(GalerkinVector::unit(square, square->position_of({2, 2}))), 4);
}
