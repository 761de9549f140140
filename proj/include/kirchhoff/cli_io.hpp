#pragma once

// Run configuration, orchestration and persistence.
//
// Configs and result bundles are JSON. results.json is a pure function of the
// config; wall-clock timing goes to timing.json beside it.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kirchhoff/error.hpp"
#include "kirchhoff/flow.hpp"
#include "kirchhoff/fountain.hpp"
#include "kirchhoff/functional.hpp"
#include "kirchhoff/nonlinearity.hpp"
#include "kirchhoff/spectral_basis.hpp"

namespace kirchhoff {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "KIRCHHOFF_OUTPUT_DIR";

struct DomainSpec {
  std::string kind = "interval";
  std::vector<double> lengths{std::numbers::pi};

  [[nodiscard]] Domain build() const {
    if (kind == "interval") return Domain::interval(lengths.at(0));
    return Domain::rectangle(lengths.at(0), lengths.at(1));
  }
};

struct NonlinearitySpec {
  std::string kind = "power";
  double p = 6.0;
  double coefficient = 1.0;
  double mu = 0.0;  // tabulated only
  std::vector<double> u_table;
  std::vector<double> f_table;

  [[nodiscard]] Nonlinearity build() const {
    if (kind == "power") return Nonlinearity::power(p, coefficient);
    return Nonlinearity::tabulated(u_table, f_table, p, mu);
  }
};

struct RunConfig {
  DomainSpec domain;
  double a = 1.0;
  double b = 1.0;
  NonlinearitySpec nonlinearity;
  int m = 64;
  int quadrature_nodes = 0;  // 0: default for the growth exponent
  int k_min = 2;
  int k_max = 6;
  int seeds_per_shell = 32;
  std::uint64_t rng_seed = 1;
  double tolerance = 1e-9;
  int max_steps = 3000;
  double dedup_tolerance = 1e-6;
  double sign_tolerance_factor = 1e-6;
  double mu_fraction = 0.4;
  double seed_smoothing = 1.0;
  int delta_samples = 500;
  int lemma_samples = 200;
  int threads = 0;
  bool check_hypotheses = true;
  std::string output_dir = "kirchhoff_out";

  [[nodiscard]] KirchhoffParams params() const { return {a, b}; }

  [[nodiscard]] BasisHandle basis() const {
    return build_basis(domain.build(), m, quadrature_nodes, nonlinearity.p);
  }

  [[nodiscard]] SearchConfig search_config() const {
    SearchConfig s;
    s.k_min = k_min;
    s.k_max = k_max;
    s.seeds_per_shell = seeds_per_shell;
    s.rng_seed = rng_seed;
    s.dedup_tolerance = dedup_tolerance;
    s.sign_tolerance_factor = sign_tolerance_factor;
    s.mu_fraction = mu_fraction;
    s.seed_smoothing = seed_smoothing;
    s.delta_samples = delta_samples;
    s.threads = threads;
    s.flow.tolerance = tolerance;
    s.flow.max_steps = max_steps;
    return s;
  }

  void validate() const {
    params().validate();
    KIRCHHOFF_REQUIRE(domain.kind == "interval" || domain.kind == "rectangle", InvalidInput,
                      "config field 'domain.kind': expected \"interval\" or \"rectangle\"");
    const std::size_t sides = domain.kind == "interval" ? 1 : 2;
    KIRCHHOFF_REQUIRE(domain.lengths.size() == sides, InvalidInput,
                      "config field 'domain.length': expected " + std::to_string(sides) + " value(s)");
    (void)domain.build();
    KIRCHHOFF_REQUIRE(nonlinearity.kind == "power" || nonlinearity.kind == "tabulated", InvalidInput,
                      "config field 'nonlinearity.kind': expected \"power\" or \"tabulated\"");
    (void)nonlinearity.build();
    KIRCHHOFF_REQUIRE(m >= 1, InvalidInput, "config field 'm': must be >= 1");
    KIRCHHOFF_REQUIRE(quadrature_nodes >= 0, InvalidInput, "config field 'quadrature_nodes': must be >= 0");
    KIRCHHOFF_REQUIRE(tolerance > 0.0, InvalidInput, "config field 'tolerance': must be > 0");
    KIRCHHOFF_REQUIRE(max_steps >= 0, InvalidInput, "config field 'max_steps': must be >= 0");
    KIRCHHOFF_REQUIRE(lemma_samples >= 0, InvalidInput, "config field 'lemma_samples': must be >= 0");
    KIRCHHOFF_REQUIRE(threads >= 0, InvalidInput, "config field 'threads': must be >= 0");
    KIRCHHOFF_REQUIRE(!output_dir.empty(), InvalidInput, "config field 'output_dir': must not be empty");
    if (k_min <= k_max) {
      KIRCHHOFF_REQUIRE(k_min >= 2, InvalidInput, "config field 'k_min': must be >= 2");
      KIRCHHOFF_REQUIRE(m > k_max + 2, InvalidInput, "config field 'm': must exceed k_max + 2");
    }
    search_config().validate(m);
  }
};

namespace detail {

inline void reject_unknown(const Json& object, const std::set<std::string>& allowed, const std::string& where) {
  KIRCHHOFF_REQUIRE(object.is_object(), InvalidInput, "config field '" + where + "': expected an object");
  for (auto it = object.begin(); it != object.end(); ++it) {
    KIRCHHOFF_REQUIRE(allowed.count(it.key()) > 0, InvalidInput,
                      "config: unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
  }
}

template <class T>
void read_field(const Json& object, const std::string& key, T& target, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput("config field '" + (where.empty() ? "" : where + ".") + key + "': wrong type");
  }
}

/// A length may be a number or the string "pi".
inline double read_length(const Json& value, const std::string& field) {
  if (value.is_string() && value.get<std::string>() == "pi") return std::numbers::pi;
  KIRCHHOFF_REQUIRE(value.is_number(), InvalidInput, "config field '" + field + "': expected a number or \"pi\"");
  return value.get<double>();
}

}  // namespace detail

/// Parses a JSON config. 'domain' and 'nonlinearity' are required; every other
/// field falls back to the RunConfig default. m defaults to max(64, 16 k_max).
inline RunConfig parse_config(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("config: malformed JSON: ") + e.what());
  }
  detail::reject_unknown(doc,
                         {"domain", "a", "b", "nonlinearity", "m", "quadrature_nodes", "k_min", "k_max",
                          "seeds_per_shell", "rng_seed", "tolerance", "max_steps", "dedup_tolerance",
                          "sign_tolerance_factor", "mu_fraction", "seed_smoothing", "delta_samples",
                          "lemma_samples", "threads", "check_hypotheses", "output_dir"},
                         "");
  KIRCHHOFF_REQUIRE(doc.contains("domain"), InvalidInput, "config: missing required field 'domain'");
  KIRCHHOFF_REQUIRE(doc.contains("nonlinearity"), InvalidInput, "config: missing required field 'nonlinearity'");

  RunConfig cfg;
  const Json& dom = doc.at("domain");
  detail::reject_unknown(dom, {"kind", "length"}, "domain");
  detail::read_field(dom, "kind", cfg.domain.kind, "domain");
  KIRCHHOFF_REQUIRE(dom.contains("length"), InvalidInput, "config: missing required field 'domain.length'");
  cfg.domain.lengths.clear();
  if (dom.at("length").is_array()) {
    for (const auto& v : dom.at("length")) cfg.domain.lengths.push_back(detail::read_length(v, "domain.length"));
  } else {
    cfg.domain.lengths.push_back(detail::read_length(dom.at("length"), "domain.length"));
  }

  const Json& nl = doc.at("nonlinearity");
  detail::reject_unknown(nl, {"kind", "p", "coefficient", "mu", "u", "f"}, "nonlinearity");
  detail::read_field(nl, "kind", cfg.nonlinearity.kind, "nonlinearity");
  KIRCHHOFF_REQUIRE(nl.contains("p"), InvalidInput, "config: missing required field 'nonlinearity.p'");
  detail::read_field(nl, "p", cfg.nonlinearity.p, "nonlinearity");
  detail::read_field(nl, "coefficient", cfg.nonlinearity.coefficient, "nonlinearity");
  detail::read_field(nl, "mu", cfg.nonlinearity.mu, "nonlinearity");
  detail::read_field(nl, "u", cfg.nonlinearity.u_table, "nonlinearity");
  detail::read_field(nl, "f", cfg.nonlinearity.f_table, "nonlinearity");
  if (cfg.nonlinearity.kind == "tabulated") {
    KIRCHHOFF_REQUIRE(nl.contains("u") && nl.contains("f") && nl.contains("mu"), InvalidInput,
                      "config: tabulated nonlinearity needs 'u', 'f' and 'mu'");
  }

  detail::read_field(doc, "a", cfg.a, "");
  detail::read_field(doc, "b", cfg.b, "");
  detail::read_field(doc, "k_min", cfg.k_min, "");
  detail::read_field(doc, "k_max", cfg.k_max, "");
  cfg.m = std::max(64, 16 * cfg.k_max);
  detail::read_field(doc, "m", cfg.m, "");
  detail::read_field(doc, "quadrature_nodes", cfg.quadrature_nodes, "");
  detail::read_field(doc, "seeds_per_shell", cfg.seeds_per_shell, "");
  detail::read_field(doc, "rng_seed", cfg.rng_seed, "");
  detail::read_field(doc, "tolerance", cfg.tolerance, "");
  detail::read_field(doc, "max_steps", cfg.max_steps, "");
  detail::read_field(doc, "dedup_tolerance", cfg.dedup_tolerance, "");
  detail::read_field(doc, "sign_tolerance_factor", cfg.sign_tolerance_factor, "");
  detail::read_field(doc, "mu_fraction", cfg.mu_fraction, "");
  detail::read_field(doc, "seed_smoothing", cfg.seed_smoothing, "");
  detail::read_field(doc, "delta_samples", cfg.delta_samples, "");
  detail::read_field(doc, "lemma_samples", cfg.lemma_samples, "");
  detail::read_field(doc, "threads", cfg.threads, "");
  detail::read_field(doc, "check_hypotheses", cfg.check_hypotheses, "");
  detail::read_field(doc, "output_dir", cfg.output_dir, "");
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') cfg.output_dir = env;
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

/// Config echo with every default spelled out. output_dir and threads are
/// omitted: neither affects the numbers.
inline Json config_to_json(const RunConfig& cfg) {
  Json dom{{"kind", cfg.domain.kind}};
  dom["length"] = cfg.domain.kind == "interval" ? Json(cfg.domain.lengths.at(0)) : Json(cfg.domain.lengths);
  Json nl{{"kind", cfg.nonlinearity.kind}, {"p", cfg.nonlinearity.p}};
  if (cfg.nonlinearity.kind == "power") {
    nl["coefficient"] = cfg.nonlinearity.coefficient;
  } else {
    nl["mu"] = cfg.nonlinearity.mu;
    nl["u"] = cfg.nonlinearity.u_table;
    nl["f"] = cfg.nonlinearity.f_table;
  }
  return Json{{"domain", dom},
              {"a", cfg.a},
              {"b", cfg.b},
              {"nonlinearity", nl},
              {"m", cfg.m},
              {"quadrature_nodes", cfg.quadrature_nodes},
              {"k_min", cfg.k_min},
              {"k_max", cfg.k_max},
              {"seeds_per_shell", cfg.seeds_per_shell},
              {"rng_seed", cfg.rng_seed},
              {"tolerance", cfg.tolerance},
              {"max_steps", cfg.max_steps},
              {"dedup_tolerance", cfg.dedup_tolerance},
              {"sign_tolerance_factor", cfg.sign_tolerance_factor},
              {"mu_fraction", cfg.mu_fraction},
              {"seed_smoothing", cfg.seed_smoothing},
              {"delta_samples", cfg.delta_samples},
              {"lemma_samples", cfg.lemma_samples},
              {"check_hypotheses", cfg.check_hypotheses}};
}

inline Json record_to_json(const SolutionRecord& r) {
  Json support = Json::array();
  for (const auto& c : r.support) support.push_back(std::vector<double>(c.data(), c.data() + c.size()));
  return Json{{"shell", r.shell},
              {"m", r.m},
              {"seed_index", r.seed_index},
              {"hits", r.hits},
              {"flow_steps", r.flow_steps},
              {"energy", r.energy},
              {"residual", r.residual},
              {"h1_plus", r.signs.h1_plus},
              {"h1_minus", r.signs.h1_minus},
              {"l2_plus", r.signs.l2_plus},
              {"l2_minus", r.signs.l2_minus},
              {"nodal_domains", r.nodal_domains},
              {"sign_changes", r.sign_changes()},
              {"sign_changing", r.sign_changing},
              {"sign_tolerance", r.sign_tolerance},
              {"coefficients", std::vector<double>(r.coefficients.data(), r.coefficients.data() + r.coefficients.size())},
              {"support", support}};
}

inline SolutionRecord record_from_json(const Json& j, const BasisHandle& basis) {
  SolutionRecord r;
  try {
    r.basis = basis;
    r.shell = j.at("shell").get<int>();
    r.m = j.at("m").get<int>();
    r.seed_index = j.at("seed_index").get<int>();
    r.hits = j.at("hits").get<int>();
    r.flow_steps = j.at("flow_steps").get<int>();
    r.energy = j.at("energy").get<double>();
    r.residual = j.at("residual").get<double>();
    r.signs = {j.at("h1_plus").get<double>(), j.at("h1_minus").get<double>(), j.at("l2_plus").get<double>(),
               j.at("l2_minus").get<double>()};
    r.nodal_domains = j.at("nodal_domains").get<int>();
    r.sign_changing = j.at("sign_changing").get<bool>();
    r.sign_tolerance = j.at("sign_tolerance").get<double>();
    const auto c = j.at("coefficients").get<std::vector<double>>();
    r.coefficients = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
    for (const auto& s : j.at("support")) {
      const auto v = s.get<std::vector<double>>();
      r.support.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  } catch (const nlohmann::json::exception& e) {
    throw VerificationFailure(std::string("bundle: malformed record: ") + e.what());
  }
  KIRCHHOFF_REQUIRE(r.coefficients.size() == basis->size() && r.m == basis->size(), VerificationFailure,
                    "bundle: record coefficient count does not match the basis");
  return r;
}

struct ResultBundle {
  RunConfig config;
  SearchResult search;
  std::vector<std::string> warnings;
  std::optional<LemmaReport> lemmas;
  double elapsed_seconds = 0.0;  // not serialised into results.json
};

inline Json lemma_to_json(const LemmaReport& r) {
  return Json{{"samples", r.samples},
              {"descent_violations", r.descent_violations},
              {"min_descent_ratio", std::isfinite(r.min_descent_ratio) ? Json(r.min_descent_ratio) : Json(nullptr)},
              {"bound_violations", r.bound_violations},
              {"max_bound_ratio", r.max_bound_ratio},
              {"contraction_checked", r.contraction_checked},
              {"contraction_violations", r.contraction_violations},
              {"max_contraction_ratio", r.max_contraction_ratio},
              {"passed", r.passed()}};
}

inline Json bundle_to_json(const ResultBundle& bundle) {
  Json shells = Json::array();
  for (const auto& s : bundle.search.shells) {
    shells.push_back(Json{{"k", s.geometry.k},
                          {"beta_k", s.geometry.beta_k},
                          {"r_k", s.geometry.r_k},
                          {"rho_k", s.geometry.rho_k},
                          {"b_k_lower", s.geometry.b_k_lower},
                          {"a_k_sampled", s.a_k_sampled},
                          {"b_k_sampled", s.b_k_sampled},
                          {"delta_m", s.cone.delta_m},
                          {"mu_m", s.cone.mu_m},
                          {"support_dimension", s.support_dimension},
                          {"seeds", s.seeds},
                          {"converged", s.converged},
                          {"failed", s.failed},
                          {"new_records", s.new_records},
                          {"duplicates", s.duplicates}});
  }
  Json records = Json::array();
  for (const auto& r : bundle.search.records) records.push_back(record_to_json(r));
  Json diagnostics{{"shells", shells}, {"warnings", bundle.warnings}};
  diagnostics["lemma_check"] = bundle.lemmas ? lemma_to_json(*bundle.lemmas) : Json(nullptr);
  return Json{{"schema_version", kSchemaVersion},
              {"config", config_to_json(bundle.config)},
              {"records", records},
              {"diagnostics", diagnostics}};
}

/// Canonical text of a bundle: sorted keys, two-space indent, trailing newline.
inline std::string dump_bundle(const Json& doc) { return doc.dump(2) + "\n"; }

/// Lemma samples: random spheres of several radii in Y_m, near-cone points
/// (positive ground profile plus a small sign-changing perturbation) and the
/// records themselves.
inline std::vector<GalerkinVector> lemma_samples(const BasisHandle& basis, int count, double mu_m,
                                                 const std::vector<SolutionRecord>& records, std::uint64_t seed) {
  std::vector<GalerkinVector> samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    const double radius = std::pow(10.0, -1.0 + 2.5 * unit(rng));
    if (i % 2 == 0 || mu_m <= 0.0) {
      samples.push_back(sample_sphere(basis, 1, radius, rng, i % 4 == 0 ? 0.0 : 1.0));
    } else {
      GalerkinVector u = GalerkinVector::unit(basis, 0);
      u *= radius / std::sqrt(basis->eigenvalue(0));
      GalerkinVector kick = sample_sphere(basis, 2, 1.0, rng, 1.0);
      kick *= mu_m * unit(rng);
      samples.push_back(u + kick);
    }
  }
  for (const auto& r : records) samples.push_back(r.state());
  return samples;
}

inline ResultBundle run(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  ResultBundle bundle;
  bundle.config = config;
  const BasisHandle basis = config.basis();
  const Nonlinearity nl = config.nonlinearity.build();
  const KirchhoffParams params = config.params();
  if (config.check_hypotheses) bundle.warnings = check_hypotheses(nl, basis->domain());
  bundle.search = search(basis, params, nl, config.search_config());
  if (config.lemma_samples > 0) {
    const double mu = bundle.search.shells.empty() ? 0.0 : bundle.search.shells.front().cone.mu_m;
    const auto samples = lemma_samples(basis, config.lemma_samples, mu, bundle.search.records, config.rng_seed + 17);
    bundle.lemmas = check_A_lemma(samples, params, nl, mu);
  }
  bundle.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return bundle;
}

/// Uniform plot grid with `points` nodes per axis, endpoints included.
inline std::string profile_csv(const SolutionRecord& r, int points = 256) {
  const GalerkinVector u = r.state();
  const Domain& d = r.basis->domain();
  std::ostringstream out;
  out << std::setprecision(17);
  if (d.dimension() == 1) {
    out << "x,u\n";
    for (int i = 0; i < points; ++i) {
      const double x = d.length(0) * i / (points - 1);
      out << x << ',' << evaluate(u, {x, 0.0}) << '\n';
    }
  } else {
    out << "x,y,u\n";
    for (int i = 0; i < points; ++i) {
      for (int k = 0; k < points; ++k) {
        const double x = d.length(0) * i / (points - 1);
        const double y = d.length(1) * k / (points - 1);
        out << x << ',' << y << ',' << evaluate(u, {x, y}) << '\n';
      }
    }
  }
  return out.str();
}

inline std::string summary_table(const ResultBundle& bundle) {
  std::ostringstream out;
  out << "domain " << bundle.config.domain.build().describe() << "  a=" << bundle.config.a << " b=" << bundle.config.b
      << "  m=" << bundle.config.m << "  shells " << bundle.config.k_min << ".." << bundle.config.k_max << "\n";
  for (const auto& w : bundle.warnings) out << "warning: " << w << "\n";
  out << std::left << std::setw(4) << "#" << std::setw(6) << "k" << std::setw(24) << "energy" << std::setw(14)
      << "residual" << std::setw(14) << "|u+|" << std::setw(14) << "|u-|" << std::setw(7) << "zeros"
      << "sign-changing\n";
  int index = 0;
  for (const auto& r : bundle.search.records) {
    out << std::left << std::setw(4) << index++ << std::setw(6) << r.shell << std::setw(24) << std::setprecision(15)
        << r.energy << std::setw(14) << std::setprecision(4) << r.residual << std::setw(14) << r.signs.h1_plus
        << std::setw(14) << r.signs.h1_minus << std::setw(7) << r.sign_changes() << (r.sign_changing ? "yes" : "no")
        << "\n";
  }
  if (bundle.search.records.empty()) out << "(no records)\n";
  return out.str();
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoFailure("write failed for " + path.string());
}

}  // namespace detail

/// Writes results.json, timing.json, summary.txt and profiles/record_NNN.csv
/// under the config's output directory. Returns that directory.
inline std::filesystem::path write_bundle(const ResultBundle& bundle) {
  namespace fs = std::filesystem;
  const fs::path dir(bundle.config.output_dir);
  std::error_code ec;
  fs::create_directories(dir / "profiles", ec);
  if (ec) throw IoFailure("cannot create output directory " + dir.string() + ": " + ec.message());
  detail::write_text(dir / "results.json", dump_bundle(bundle_to_json(bundle)));
  detail::write_text(dir / "timing.json", Json{{"elapsed_seconds", bundle.elapsed_seconds}}.dump(2) + "\n");
  detail::write_text(dir / "summary.txt", summary_table(bundle));
  for (std::size_t i = 0; i < bundle.search.records.size(); ++i) {
    std::ostringstream name;
    name << "record_" << std::setw(3) << std::setfill('0') << i << ".csv";
    detail::write_text(dir / "profiles" / name.str(), profile_csv(bundle.search.records[i]));
  }
  return dir;
}

struct VerifyReport {
  int records = 0;
  double max_energy_deviation = 0.0;    // |Phi - stored| / (1 + |stored|)
  double max_residual_deviation = 0.0;  // |res - stored| / (1 + ||u||)
  double max_residual = 0.0;
  int residual_failures = 0;            // records whose recomputed residual exceeds the flow threshold

  [[nodiscard]] double max_deviation() const { return std::max(max_energy_deviation, max_residual_deviation); }
};

/// Parses a bundle and rebuilds its config from the echo.
inline std::pair<RunConfig, std::vector<SolutionRecord>> load_bundle(const Json& doc) {
  KIRCHHOFF_REQUIRE(doc.is_object() && doc.contains("schema_version"), VerificationFailure,
                    "bundle: missing schema_version");
  KIRCHHOFF_REQUIRE(doc.at("schema_version") == kSchemaVersion, VerificationFailure,
                    "bundle: schema version " + doc.at("schema_version").dump() + " is not supported (expected " +
                        std::to_string(kSchemaVersion) + ")");
  KIRCHHOFF_REQUIRE(doc.contains("config") && doc.contains("records"), VerificationFailure,
                    "bundle: missing config or records");
  RunConfig cfg = parse_config(doc.at("config").dump());
  const BasisHandle basis = cfg.basis();
  std::vector<SolutionRecord> records;
  for (const auto& r : doc.at("records")) records.push_back(record_from_json(r, basis));
  return {cfg, records};
}

/// Recomputes energy and residual of every record from its coefficients.
inline VerifyReport verify(const Json& doc) {
  const auto [cfg, records] = load_bundle(doc);
  const Nonlinearity nl = cfg.nonlinearity.build();
  const KirchhoffParams params = cfg.params();
  VerifyReport report;
  for (const auto& r : records) {
    ++report.records;
    const GalerkinVector u = r.state();
    const double e = energy(u, params, nl);
    const double res = residual(u, params, nl).norm;
    const double norm = h1_norm(u);
    report.max_energy_deviation = std::max(report.max_energy_deviation, std::abs(e - r.energy) / (1.0 + std::abs(r.energy)));
    report.max_residual_deviation = std::max(report.max_residual_deviation, std::abs(res - r.residual) / (1.0 + norm));
    report.max_residual = std::max(report.max_residual, res);
    if (res > cfg.tolerance * (1.0 + norm)) ++report.residual_failures;
  }
  return report;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw VerificationFailure("bundle " + path + ": malformed JSON: " + e.what());
  }
}

}  // namespace kirchhoff
