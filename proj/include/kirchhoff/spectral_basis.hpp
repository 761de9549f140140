#pragma once

// Dirichlet-Laplacian eigenbasis on intervals and rectangles, with a tensor
// Gauss-Legendre grid for integrating nonlinear terms, and the coefficient
// vectors (GalerkinVector) that live in the span of the first m modes.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/quadrature.hpp"

namespace kirchhoff {

using Point = std::array<double, 2>;

class Domain {
 public:
  enum class Kind { interval, rectangle };

  static Domain interval(double length) { return Domain(Kind::interval, {length, 0.0}); }
  static Domain rectangle(double lx, double ly) { return Domain(Kind::rectangle, {lx, ly}); }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] int dimension() const { return kind_ == Kind::interval ? 1 : 2; }
  [[nodiscard]] double length(int axis) const { return lengths_.at(axis); }

  [[nodiscard]] std::string describe() const {
    std::ostringstream out;
    out.precision(17);
    if (kind_ == Kind::interval) {
      out << "interval(0," << lengths_[0] << ")";
    } else {
      out << "rectangle(0," << lengths_[0] << ")x(0," << lengths_[1] << ")";
    }
    return out.str();
  }

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  Domain(Kind kind, std::array<double, 2> lengths) : kind_(kind), lengths_(lengths) {
    for (int axis = 0; axis < dimension(); ++axis) {
      const double L = lengths_[axis];
      KIRCHHOFF_REQUIRE(std::isfinite(L) && L > 0.0, InvalidInput,
                        "domain: side length must be positive and finite, got " +
                            std::to_string(L));
    }
  }

  Kind kind_;
  std::array<double, 2> lengths_;
};

struct Mode {
  std::array<int, 2> index{1, 0};  // second entry is 0 on intervals
  double eigenvalue = 0.0;
};

class EigenBasis;
using BasisHandle = std::shared_ptr<const EigenBasis>;

/// Nodes per axis needed so that products carrying the growth exponent are
/// resolved: ceil((p + 2) * max_index / 2) + 2.
inline int default_quadrature_nodes(int max_index, double growth_exponent) {
  return static_cast<int>(std::ceil((growth_exponent + 2.0) * max_index / 2.0)) + 2;
}

class EigenBasis {
 public:
  [[nodiscard]] const Domain& domain() const { return domain_; }
  [[nodiscard]] int size() const { return static_cast<int>(modes_.size()); }
  [[nodiscard]] const std::vector<Mode>& modes() const { return modes_; }
  [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  [[nodiscard]] double eigenvalue(int j) const { return eigenvalues_[j]; }

  [[nodiscard]] const QuadratureRule& axis_rule(int axis) const { return rules_.at(axis); }
  [[nodiscard]] std::array<int, 2> grid_shape() const { return shape_; }
  [[nodiscard]] int grid_size() const { return static_cast<int>(nodes_.size()); }
  [[nodiscard]] const std::vector<Point>& nodes() const { return nodes_; }
  [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }

  /// grid_size x m matrix of e_j(x_q).
  [[nodiscard]] const Eigen::MatrixXd& mode_values() const { return values_; }

  [[nodiscard]] int max_index(int axis) const {
    int best = 0;
    for (const auto& mode : modes_) best = std::max(best, mode.index[axis]);
    return best;
  }

  /// Position of a mode index tuple in this basis, or -1.
  [[nodiscard]] int position_of(const std::array<int, 2>& index) const {
    for (int j = 0; j < size(); ++j) {
      if (modes_[j].index == index) return j;
    }
    return -1;
  }

  [[nodiscard]] double evaluate_mode(int j, const Point& x) const {
    const Mode& mode = modes_.at(j);
    double value = 1.0;
    for (int axis = 0; axis < domain_.dimension(); ++axis) {
      const double L = domain_.length(axis);
      value *= std::sqrt(2.0 / L) * std::sin(mode.index[axis] * std::numbers::pi * x[axis] / L);
    }
    return value;
  }

  [[nodiscard]] Point evaluate_mode_gradient(int j, const Point& x) const {
    const Mode& mode = modes_.at(j);
    const int dim = domain_.dimension();
    std::array<double, 2> s{1.0, 1.0};
    std::array<double, 2> ds{0.0, 0.0};
    for (int axis = 0; axis < dim; ++axis) {
      const double L = domain_.length(axis);
      const double freq = mode.index[axis] * std::numbers::pi / L;
      s[axis] = std::sqrt(2.0 / L) * std::sin(freq * x[axis]);
      ds[axis] = std::sqrt(2.0 / L) * freq * std::cos(freq * x[axis]);
    }
    if (dim == 1) return {ds[0], 0.0};
    return {ds[0] * s[1], s[0] * ds[1]};
  }

  /// Distinct eigenvalues with their multiplicities (the eigenspaces X_j).
  [[nodiscard]] std::vector<std::pair<double, int>> eigenvalue_groups(double rel_tol = 1e-12) const {
    std::vector<std::pair<double, int>> groups;
    for (const auto& mode : modes_) {
      if (!groups.empty() &&
          std::abs(mode.eigenvalue - groups.back().first) <= rel_tol * mode.eigenvalue) {
        ++groups.back().second;
      } else {
        groups.emplace_back(mode.eigenvalue, 1);
      }
    }
    return groups;
  }

  friend BasisHandle build_basis(const Domain& domain, int m, int quadrature_nodes,
                                 double growth_exponent);

 private:
  explicit EigenBasis(Domain domain) : domain_(std::move(domain)) {}

  Domain domain_;
  std::vector<Mode> modes_;
  Eigen::VectorXd eigenvalues_;
  std::array<QuadratureRule, 2> rules_;
  std::array<int, 2> shape_{0, 1};
  std::vector<Point> nodes_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd values_;
};

/// First m Dirichlet eigenpairs of the domain, sorted by eigenvalue with ties
/// broken lexicographically on the index tuple. quadrature_nodes = 0 picks the
/// per-axis default for the given growth exponent.
inline BasisHandle build_basis(const Domain& domain, int m, int quadrature_nodes = 0,
                               double growth_exponent = 6.0) {
  KIRCHHOFF_REQUIRE(m >= 1, InvalidInput, "build_basis: mode count must be >= 1");
  KIRCHHOFF_REQUIRE(quadrature_nodes >= 0, InvalidInput,
                    "build_basis: quadrature node count must be >= 0");
  auto basis = std::shared_ptr<EigenBasis>(new EigenBasis(domain));
  const int dim = domain.dimension();
  const double pi = std::numbers::pi;

  std::vector<Mode> candidates;
  if (dim == 1) {
    for (int n = 1; n <= m; ++n) {
      const double k = n * pi / domain.length(0);
      candidates.push_back({{n, 0}, k * k});
    }
  } else {
    for (int n1 = 1; n1 <= m; ++n1) {
      for (int n2 = 1; n2 <= m; ++n2) {
        const double k1 = n1 * pi / domain.length(0);
        const double k2 = n2 * pi / domain.length(1);
        candidates.push_back({{n1, n2}, k1 * k1 + k2 * k2});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Mode& lhs, const Mode& rhs) {
    if (lhs.eigenvalue != rhs.eigenvalue) return lhs.eigenvalue < rhs.eigenvalue;
    return lhs.index < rhs.index;
  });
  candidates.resize(m);
  basis->modes_ = std::move(candidates);
  basis->eigenvalues_.resize(m);
  for (int j = 0; j < m; ++j) basis->eigenvalues_[j] = basis->modes_[j].eigenvalue;

  for (int axis = 0; axis < dim; ++axis) {
    const int top = basis->max_index(axis);
    const int nodes =
        quadrature_nodes > 0 ? quadrature_nodes : default_quadrature_nodes(top, growth_exponent);
    KIRCHHOFF_REQUIRE(nodes >= top + 2, InvalidInput,
                      "build_basis: " + std::to_string(nodes) +
                          " quadrature nodes cannot resolve mode index " + std::to_string(top));
    basis->rules_[axis] = gauss_legendre(nodes, 0.0, domain.length(axis));
    basis->shape_[axis] = nodes;
  }
  if (dim == 1) {
    basis->rules_[1] = QuadratureRule{{0.0}, {1.0}};
    basis->shape_[1] = 1;
  }

  const auto& rx = basis->rules_[0];
  const auto& ry = basis->rules_[1];
  const int total = basis->shape_[0] * basis->shape_[1];
  basis->nodes_.resize(total);
  basis->weights_.resize(total);
  for (int i = 0; i < basis->shape_[0]; ++i) {
    for (int k = 0; k < basis->shape_[1]; ++k) {
      const int q = i * basis->shape_[1] + k;
      basis->nodes_[q] = {rx.nodes[i], ry.nodes[k]};
      basis->weights_[q] = rx.weights[i] * ry.weights[k];
    }
  }
  basis->values_.resize(total, m);
  for (int q = 0; q < total; ++q) {
    for (int j = 0; j < m; ++j) basis->values_(q, j) = basis->evaluate_mode(j, basis->nodes_[q]);
  }
  return basis;
}

/// Coefficients of u in Y_m with respect to the L2-orthonormal eigenbasis.
class GalerkinVector {
 public:
  explicit GalerkinVector(BasisHandle basis)
      : basis_(std::move(basis)), coefficients_(Eigen::VectorXd::Zero(basis_->size())) {}

  GalerkinVector(BasisHandle basis, Eigen::VectorXd coefficients)
      : basis_(std::move(basis)), coefficients_(std::move(coefficients)) {
    KIRCHHOFF_REQUIRE(coefficients_.size() == basis_->size(), InvalidInput,
                      "GalerkinVector: coefficient count does not match basis size");
  }

  static GalerkinVector unit(BasisHandle basis, int j) {
    GalerkinVector u(std::move(basis));
    u.coefficients_[j] = 1.0;
    return u;
  }

  [[nodiscard]] const EigenBasis& basis() const { return *basis_; }
  [[nodiscard]] const BasisHandle& basis_handle() const { return basis_; }
  [[nodiscard]] const Eigen::VectorXd& coefficients() const { return coefficients_; }
  [[nodiscard]] Eigen::VectorXd& coefficients() { return coefficients_; }
  [[nodiscard]] int size() const { return static_cast<int>(coefficients_.size()); }
  double operator[](int j) const { return coefficients_[j]; }
  double& operator[](int j) { return coefficients_[j]; }

  GalerkinVector& operator+=(const GalerkinVector& rhs) {
    check_same_basis(rhs);
    coefficients_ += rhs.coefficients_;
    return *this;
  }
  GalerkinVector& operator-=(const GalerkinVector& rhs) {
    check_same_basis(rhs);
    coefficients_ -= rhs.coefficients_;
    return *this;
  }
  GalerkinVector& operator*=(double s) {
    coefficients_ *= s;
    return *this;
  }

  friend GalerkinVector operator+(GalerkinVector lhs, const GalerkinVector& rhs) { return lhs += rhs; }
  friend GalerkinVector operator-(GalerkinVector lhs, const GalerkinVector& rhs) { return lhs -= rhs; }
  friend GalerkinVector operator*(double s, GalerkinVector u) { return u *= s; }
  friend GalerkinVector operator*(GalerkinVector u, double s) { return u *= s; }
  friend GalerkinVector operator-(GalerkinVector u) {
    u.coefficients_ = -u.coefficients_;
    return u;
  }

  void check_same_basis(const GalerkinVector& other) const {
    KIRCHHOFF_REQUIRE(basis_ == other.basis_, InvalidInput,
                      "GalerkinVector: operands belong to different bases");
  }

 private:
  BasisHandle basis_;
  Eigen::VectorXd coefficients_;
};

/// Pointwise values sum_j c_j e_j(x_q) at the quadrature nodes.
inline Eigen::VectorXd to_grid(const GalerkinVector& u) {
  return u.basis().mode_values() * u.coefficients();
}

/// Quadrature projection c_j = sum_q w_q g(x_q) e_j(x_q).
inline GalerkinVector project(const BasisHandle& basis, const Eigen::VectorXd& grid_values) {
  KIRCHHOFF_REQUIRE(grid_values.size() == basis->grid_size(), InvalidInput,
                    "project: grid value count does not match quadrature grid");
  Eigen::VectorXd c =
      basis->mode_values().transpose() * basis->weights().cwiseProduct(grid_values);
  return GalerkinVector(basis, std::move(c));
}

/// <u, v> = int grad u . grad v = sum_j lambda_j u_j v_j.
inline double h1_inner(const GalerkinVector& u, const GalerkinVector& v) {
  u.check_same_basis(v);
  return (u.basis().eigenvalues().array() * u.coefficients().array() * v.coefficients().array())
      .sum();
}

inline double h1_norm_squared(const GalerkinVector& u) { return h1_inner(u, u); }
inline double h1_norm(const GalerkinVector& u) { return std::sqrt(h1_norm_squared(u)); }
inline double l2_norm(const GalerkinVector& u) { return u.coefficients().norm(); }

inline double lp_norm(const GalerkinVector& u, double p) {
  KIRCHHOFF_REQUIRE(p >= 1.0, InvalidInput, "lp_norm: exponent must be >= 1");
  const Eigen::VectorXd g = to_grid(u);
  double sum = 0.0;
  for (int q = 0; q < g.size(); ++q) sum += u.basis().weights()[q] * std::pow(std::abs(g[q]), p);
  return std::pow(sum, 1.0 / p);
}

/// Pointwise evaluation away from the quadrature grid (plotting, oracles).
inline double evaluate(const GalerkinVector& u, const Point& x) {
  double value = 0.0;
  for (int j = 0; j < u.size(); ++j) value += u[j] * u.basis().evaluate_mode(j, x);
  return value;
}

/// Zero-pad (or truncate) coefficients into another basis on the same domain,
/// matching modes by index tuple.
inline GalerkinVector embed(const GalerkinVector& u, const BasisHandle& target) {
  KIRCHHOFF_REQUIRE(u.basis().domain() == target->domain(), InvalidInput,
                    "embed: bases live on different domains");
  GalerkinVector out(target);
  for (int j = 0; j < u.size(); ++j) {
    const int pos = target->position_of(u.basis().modes()[j].index);
    if (pos >= 0) out[pos] = u[j];
  }
  return out;
}

/// Number of connected sign components of u on the quadrature grid (4-neighbour
/// adjacency in 2D). Values below `zero_fraction * max|u|` are treated as nodal.
inline int count_nodal_domains(const GalerkinVector& u, double zero_fraction = 1e-9) {
  const Eigen::VectorXd g = to_grid(u);
  const double scale = g.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  const auto shape = u.basis().grid_shape();
  const int total = static_cast<int>(g.size());
  std::vector<int> sign(total, 0);
  for (int q = 0; q < total; ++q) {
    if (g[q] > zero_fraction * scale) sign[q] = 1;
    if (g[q] < -zero_fraction * scale) sign[q] = -1;
  }
  std::vector<char> seen(total, 0);
  std::vector<int> stack;
  int domains = 0;
  for (int start = 0; start < total; ++start) {
    if (seen[start] || sign[start] == 0) continue;
    ++domains;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      const int i = q / shape[1];
      const int k = q % shape[1];
      const std::array<std::array<int, 2>, 4> steps{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
      for (const auto& step : steps) {
        const int ni = i + step[0];
        const int nk = k + step[1];
        if (ni < 0 || nk < 0 || ni >= shape[0] || nk >= shape[1]) continue;
        const int nq = ni * shape[1] + nk;
        if (!seen[nq] && sign[nq] == sign[q]) {
          seen[nq] = 1;
          stack.push_back(nq);
        }
      }
    }
  }
  return domains;
}

}  // namespace kirchhoff
