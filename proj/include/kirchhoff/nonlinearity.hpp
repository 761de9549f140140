#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kirchhoff/error.hpp"
#include "kirchhoff/spectral_basis.hpp"

namespace kirchhoff {

/// Right-hand side f(x, u) with its antiderivative F and derivative f_u, plus
/// the growth data (p, mu, c) used by the fountain geometry.
namespace detail {

inline double ipow(double x, int n) {
  double result = 1.0;
  while (n > 0) {
    if (n & 1) result *= x;
    x *= x;
    n >>= 1;
  }
  return result;
}

}  // namespace detail

struct Nonlinearity {
  using Function = std::function<double(const Point&, double)>;

  std::string name;
  Function f;
  Function F;
  Function df;
  double p = 0.0;   // growth exponent in |f| <= c (1 + |u|^{p-1})
  double mu = 0.0;  // Ambrosetti-Rabinowitz exponent
  double c = 1.0;
  bool odd = true;
  bool autonomous = true;
  int even_power = 0;  // p when f = c |u|^{p-2} u with p an even integer, else 0

  /// f(u) = coefficient * |u|^{p-2} u, F = coefficient * |u|^p / p.
  static Nonlinearity power(double p, double coefficient = 1.0) {
    KIRCHHOFF_REQUIRE(p > 2.0, InvalidInput, "power nonlinearity: exponent must exceed 2");
    KIRCHHOFF_REQUIRE(coefficient > 0.0, InvalidInput,
                      "power nonlinearity: coefficient must be positive");
    Nonlinearity nl;
    nl.name = "power";
    nl.p = p;
    nl.mu = p;
    nl.c = coefficient;
    if (p == std::round(p) && p <= 64.0) {
      const int n = static_cast<int>(p);
      if (n % 2 == 0) nl.even_power = n;
      nl.f = [n, coefficient](const Point&, double u) { return coefficient * detail::ipow(std::abs(u), n - 2) * u; };
      nl.F = [n, coefficient](const Point&, double u) { return coefficient * detail::ipow(std::abs(u), n) / n; };
      nl.df = [n, coefficient](const Point&, double u) {
        return coefficient * (n - 1) * detail::ipow(std::abs(u), n - 2);
      };
      return nl;
    }
    nl.f = [p, coefficient](const Point&, double u) {
      return coefficient * std::pow(std::abs(u), p - 2.0) * u;
    };
    nl.F = [p, coefficient](const Point&, double u) {
      return coefficient * std::pow(std::abs(u), p) / p;
    };
    nl.df = [p, coefficient](const Point&, double u) {
      return coefficient * (p - 1.0) * std::pow(std::abs(u), p - 2.0);
    };
    return nl;
  }

  /// f(u) = slope * u. Outside the growth hypotheses; used for resonance and
  /// quadratic-functional checks.
  static Nonlinearity linear(double slope) {
    Nonlinearity nl;
    nl.name = "linear";
    nl.p = 2.0;
    nl.mu = 2.0;
    nl.c = std::abs(slope);
    nl.f = [slope](const Point&, double u) { return slope * u; };
    nl.F = [slope](const Point&, double u) { return 0.5 * slope * u * u; };
    nl.df = [slope](const Point&, double) { return slope; };
    return nl;
  }

  static Nonlinearity zero() {
    Nonlinearity nl = linear(0.0);
    nl.name = "zero";
    return nl;
  }

  /// Piecewise-linear f on a table u_0 = 0 < u_1 < ... with f(u_0) = 0,
  /// extended oddly to u < 0 and linearly past the last node.
  static Nonlinearity tabulated(std::vector<double> u_table, std::vector<double> f_table, double p,
                                double mu) {
    KIRCHHOFF_REQUIRE(u_table.size() >= 2 && u_table.size() == f_table.size(), InvalidInput,
                      "tabulated nonlinearity: need matching u/f tables with >= 2 entries");
    KIRCHHOFF_REQUIRE(u_table.front() == 0.0 && f_table.front() == 0.0, InvalidInput,
                      "tabulated nonlinearity: table must start at (0, 0)");
    for (std::size_t i = 1; i < u_table.size(); ++i) {
      KIRCHHOFF_REQUIRE(u_table[i] > u_table[i - 1], InvalidInput,
                        "tabulated nonlinearity: u table must be strictly increasing");
    }
    struct Table {
      std::vector<double> u, f, cumulative;
      [[nodiscard]] std::size_t segment(double s) const {
        auto it = std::upper_bound(u.begin(), u.end(), s);
        std::size_t i = it == u.begin() ? 0 : static_cast<std::size_t>(it - u.begin()) - 1;
        return std::min(i, u.size() - 2);
      }
      [[nodiscard]] double slope(std::size_t i) const { return (f[i + 1] - f[i]) / (u[i + 1] - u[i]); }
      [[nodiscard]] double value(double s) const {
        const std::size_t i = segment(s);
        return f[i] + slope(i) * (s - u[i]);
      }
      [[nodiscard]] double primitive(double s) const {
        const std::size_t i = segment(s);
        const double d = s - u[i];
        return cumulative[i] + f[i] * d + 0.5 * slope(i) * d * d;
      }
    };
    auto table = std::make_shared<Table>();
    table->u = std::move(u_table);
    table->f = std::move(f_table);
    table->cumulative.assign(table->u.size(), 0.0);
    for (std::size_t i = 1; i < table->u.size(); ++i) {
      const double d = table->u[i] - table->u[i - 1];
      table->cumulative[i] = table->cumulative[i - 1] + 0.5 * (table->f[i] + table->f[i - 1]) * d;
    }
    Nonlinearity nl;
    nl.name = "tabulated";
    nl.p = p;
    nl.mu = mu;
    double c = 0.0;
    for (std::size_t i = 0; i < table->u.size(); ++i) {
      c = std::max(c, std::abs(table->f[i]) / (1.0 + std::pow(table->u[i], p - 1.0)));
    }
    nl.c = c;
    nl.f = [table](const Point&, double u) {
      const double s = std::abs(u);
      return u < 0.0 ? -table->value(s) : table->value(s);
    };
    nl.F = [table](const Point&, double u) { return table->primitive(std::abs(u)); };
    nl.df = [table](const Point&, double u) { return table->slope(table->segment(std::abs(u))); };
    return nl;
  }
};

/// Sampled check of the growth, small-u, Ambrosetti-Rabinowitz and oddness
/// conditions. Returns one message per violated condition; empty means all
/// sampled points passed. Violations are advisory: the solver still runs.
inline std::vector<std::string> check_hypotheses(const Nonlinearity& nl, const Domain& domain) {
  std::vector<std::string> warnings;
  const int dim = domain.dimension();
  if (dim <= 2 && !(nl.p > 4.0)) {
    warnings.push_back("(f1) exponent outside p>4: p = " + std::to_string(nl.p));
  }
  if (dim == 3 && !(nl.p > 4.0 && nl.p < 6.0)) {
    warnings.push_back("(f1) exponent outside 4<p<6: p = " + std::to_string(nl.p));
  }
  if (!(nl.mu > 4.0)) {
    warnings.push_back("(f3) Ambrosetti-Rabinowitz exponent must exceed 4: mu = " +
                       std::to_string(nl.mu));
  }

  std::vector<Point> points;
  for (double sx : {0.13, 0.5, 0.91}) {
    if (dim == 1) {
      points.push_back({sx * domain.length(0), 0.0});
      continue;
    }
    for (double sy : {0.27, 0.5, 0.73}) points.push_back({sx * domain.length(0), sy * domain.length(1)});
  }
  std::vector<double> amplitudes;
  for (int e = -12; e <= 6; ++e) {
    for (double m : {1.0, 3.0}) amplitudes.push_back(m * std::pow(10.0, e / 2.0));
  }

  bool f1 = true, f2 = true, f3 = true, f4 = true;
  for (const auto& x : points) {
    for (double s : amplitudes) {
      for (double u : {s, -s}) {
        const double fu = nl.f(x, u);
        const double Fu = nl.F(x, u);
        if (std::abs(fu) > nl.c * (1.0 + std::pow(std::abs(u), nl.p - 1.0)) * (1.0 + 1e-12)) f1 = false;
        if (!(nl.mu * Fu > 0.0) || nl.mu * Fu > u * fu * (1.0 + 1e-12) + 1e-300) f3 = false;
        if (std::abs(nl.f(x, -u) + fu) > 1e-12 * (1.0 + std::abs(fu))) f4 = false;
      }
    }
    // f(u)/u must shrink as u -> 0.
    const double r1 = std::abs(nl.f(x, 1e-4)) / 1e-4;
    const double r2 = std::abs(nl.f(x, 1e-6)) / 1e-6;
    if (!(r2 < 1e-3 && r2 <= r1)) f2 = false;
  }
  if (!f1) warnings.push_back("(f1) growth bound |f| <= c(1+|u|^{p-1}) violated at sampled points");
  if (!f2) warnings.push_back("(f2) f(x,u)/u does not vanish as u -> 0");
  if (!f3) warnings.push_back("(f3) 0 < mu F(x,u) <= u f(x,u) violated at sampled points");
  if (!f4) warnings.push_back("(f4) f is not odd in u at sampled points");
  return warnings;
}

}  // namespace kirchhoff
