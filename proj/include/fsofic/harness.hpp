#pragma once

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fsofic/io.hpp"

namespace fsofic {

/// Settings that come from command-line flags rather than the config file.
struct RunOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::optional<std::uint64_t> cap_exact;   // n!^r bound for exhaustive action enumeration
  std::optional<std::uint64_t> cap_labels;  // |A|^n bound per action
};

struct Report {
  ExitCode code = ExitCode::kSuccess;
  std::string text;
};

constexpr int kMaxCliRank = 4;

namespace detail {

/// The config as hashed: flag overrides folded in, thread count left out.
inline Json effective_config(const std::string& command, Json config, const RunOptions& options) {
  if (!config.is_object()) throw InputError("config must be a JSON object");
  config["command"] = command;
  if (options.seed) config["seed"] = *options.seed;
  if (options.cap_exact) config["cap_exact"] = *options.cap_exact;
  if (options.cap_labels) config["cap_labels"] = *options.cap_labels;
  return config;
}

inline std::optional<std::uint64_t> seed_of(const Json& config) {
  if (!config.contains("seed")) return std::nullopt;
  return get_as<std::uint64_t>(config.at("seed"), "seed");
}

inline std::uint64_t require_seed(const Json& config, const std::string& why) {
  const auto seed = seed_of(config);
  if (!seed) throw InputError("a seed is required (" + why + "); pass --seed or set \"seed\"");
  return *seed;
}

inline CountCaps caps_of(const Json& config) {
  CountCaps caps;
  if (config.contains("cap_exact")) caps.actions = get_as<std::uint64_t>(config.at("cap_exact"), "cap_exact");
  if (config.contains("cap_labels")) caps.labels = get_as<std::uint64_t>(config.at("cap_labels"), "cap_labels");
  return caps;
}

inline void check_cli_rank(int rank) {
  if (rank > kMaxCliRank) {
    throw InputError("rank " + std::to_string(rank) + " exceeds the command-line limit of " + std::to_string(kMaxCliRank));
  }
}

template <class T>
T value_or(const Json& config, const char* key, T fallback) {
  return config.contains(key) ? get_as<T>(config.at(key), key) : fallback;
}

inline std::string header(const Json& config) {
  return "# config_hash: " + hex_hash(config_hash(config)) + "\ncommand: " + config.at("command").get<std::string>() + "\n";
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

inline FiniteAction action_for(const Json& config, int rank, std::uint64_t stream) {
  if (config.contains("sigma")) {
    FiniteAction sigma = action_from_json(config.at("sigma"));
    if (sigma.rank() != rank) throw InputError("sigma has " + std::to_string(sigma.rank()) + " generators, rank is " +
                                               std::to_string(rank));
    return sigma;
  }
  const auto n = get_as<std::size_t>(require(config, "n", "config"), "n");
  if (n == 0) throw InputError("n must be positive");
  return sample_action(n, rank, derive_seed(require_seed(config, "sigma is sampled"), stream));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// f-exact

struct FExactResult {
  EntropyValue f;
  std::optional<LogLinear> f_exact;
  double vertex_entropy = 0.0;
  std::vector<double> edge_entropy;  // per generator
  ConstancyReport constancy;
};

inline FExactResult compute_f_exact(const LoadedWeight& w, int rho_max, const EntropyOptions& options = {}) {
  FExactResult out;
  out.vertex_entropy = shannon_entropy(w.numeric.vertex);
  for (int i = 0; i < w.numeric.rank; ++i) {
    const auto q = w.numeric.symbols();
    const auto first = w.numeric.edge.begin() + static_cast<std::ptrdiff_t>(w.numeric.edge_index(0, 0, i));
    out.edge_entropy.push_back(shannon_entropy(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(q * q))));
  }
  out.constancy = constancy_check(w.numeric, rho_max, options);
  out.f = {out.constancy.values.front()};
  if (w.exact) out.f_exact = f_markov_exact(*w.exact);
  return out;
}

/// config: {"weight", "rho_max"?}.
inline Report cmd_f_exact(Json config, const RunOptions& options = {}) {
  config = detail::effective_config("f-exact", std::move(config), options);
  const LoadedWeight w = weight_from_json(detail::require(config, "weight", "f-exact config"));
  detail::check_cli_rank(w.numeric.rank);
  Report report;
  report.text = detail::header(config);

  auto issues = weight_issues(w.numeric);
  if (w.exact) issues = weight_issues(*w.exact, 0.0);
  if (!issues.empty()) {
    report.code = ExitCode::kInputError;
    report.text += "valid: false\n";
    for (const auto& issue : issues) report.text += "issue: " + issue + "\n";
    return report;
  }

  const int rho_max = detail::value_or<int>(config, "rho_max", 1);
  if (rho_max < 0) throw InputError("rho_max must be >= 0");
  const FExactResult r = compute_f_exact(w, rho_max, EntropyOptions{options.threads});
  std::ostringstream out;
  out << "rank: " << w.numeric.rank << "\n";
  out << "alphabet: " << detail::join(w.numeric.alphabet.names(), " ") << "\n";
  out << "f: " << format_entropy(r.f, 15) << "\n";
  if (r.f_exact) out << "f_exact: " << r.f_exact->format() << "\n";
  out << "H(vertex): " << format_double(r.vertex_entropy) << "\n";
  const FreeGroup group(w.numeric.rank);
  for (std::size_t i = 0; i < r.edge_entropy.size(); ++i) {
    out << "H(edge " << group.letter_char(generator_letter(static_cast<int>(i))) << "): "
        << format_double(r.edge_entropy[i]) << "\n";
  }
  for (std::size_t rho = 0; rho < r.constancy.values.size(); ++rho) {
    out << "F(rho=" << rho << "): " << format_double(r.constancy.values[rho]) << "\n";
  }
  out << "max_deviation: " << format_double(r.constancy.max_deviation) << "\n";
  out << "constant: " << (r.constancy.constant() ? "yes" : "no") << "\n";
  report.text += out.str();
  if (!r.constancy.constant()) report.code = ExitCode::kVerificationFailure;
  return report;
}

// ---------------------------------------------------------------------------
// f-estimate

struct EstimatePlan {
  Neighborhood neighborhood;
  int rank = 1;
  std::size_t alphabet_size = 0;
  std::vector<std::size_t> n_list;
  CountMode mode;
  CountCaps caps;
};

/// config: {"weight" | "marginals", "window": m | "edges", "epsilon", "n_list",
/// "mode": "exact" | "monte_carlo", "samples", "seed", "sft"?}.
inline EstimatePlan plan_f_estimate(const Json& config) {
  EstimatePlan plan;
  const double epsilon = detail::get_as<double>(detail::require(config, "epsilon", "f-estimate config"), "epsilon");
  Alphabet alphabet;
  if (config.contains("weight") == config.contains("marginals")) {
    throw InputError("f-estimate config needs exactly one of \"weight\" and \"marginals\"");
  }
  if (config.contains("weight")) {
    const LoadedWeight w = weight_from_json(config.at("weight"));
    validate_weight(w.numeric, 1e-9);
    if (w.exact) validate_weight(*w.exact, 0.0);
    plan.rank = w.numeric.rank;
    alphabet = w.numeric.alphabet;
    const Json window = config.contains("window") ? config.at("window") : Json(1);
    const bool edges = window.is_string();
    if (edges && window.get<std::string>() != "edges") throw InputError("window must be a radius or \"edges\"");
    const int m = edges ? 0 : detail::get_as<int>(window, "window");
    if (epsilon == 0 && !w.exact) throw InputError("epsilon = 0 needs a weight with exact rational entries");
    if (w.exact && epsilon == 0) {
      plan.neighborhood = edges ? Neighborhood::edges(*w.exact, epsilon) : Neighborhood::ball(*w.exact, m, epsilon);
    } else {
      plan.neighborhood = edges ? Neighborhood::edges(w.numeric, epsilon) : Neighborhood::ball(w.numeric, m, epsilon);
    }
  } else {
    const LoadedDistribution d = distribution_from_json(config.at("marginals"),
                                                        config.contains("rank")
                                                            ? std::optional<int>(rank_from_json(config.at("rank")))
                                                            : std::nullopt);
    plan.rank = d.rank;
    alphabet = d.alphabet;
    plan.neighborhood.epsilon = epsilon;
    if (d.exact) {
      plan.neighborhood.add(*d.exact);
    } else {
      plan.neighborhood.add(d.numeric);
    }
  }
  detail::check_cli_rank(plan.rank);
  plan.alphabet_size = alphabet.size();
  if (config.contains("sft")) {
    plan.neighborhood.restriction = sft_from_json(config.at("sft"), plan.rank, alphabet);
    if (plan.neighborhood.restriction->alphabet_size() != plan.alphabet_size) {
      throw InputError("sft alphabet size differs from the weight alphabet");
    }
  }
  plan.neighborhood.validate();

  plan.n_list = detail::get_as<std::vector<std::size_t>>(detail::require(config, "n_list", "f-estimate config"), "n_list");
  if (plan.n_list.empty()) throw InputError("n_list is empty");
  const auto mode = detail::value_or<std::string>(config, "mode", "monte_carlo");
  if (mode == "monte_carlo") {
    plan.mode.monte_carlo = MonteCarlo{detail::value_or<std::uint64_t>(config, "samples", 200),
                                       detail::require_seed(config, "Monte Carlo mode")};
  } else if (mode != "exact") {
    throw InputError("mode must be \"exact\" or \"monte_carlo\"");
  }
  plan.caps = detail::caps_of(config);
  return plan;
}

inline Report cmd_f_estimate(Json config, const RunOptions& options = {}) {
  config = detail::effective_config("f-estimate", std::move(config), options);
  const EstimatePlan plan = plan_f_estimate(config);
  const Estimate estimate = f_estimate(plan.neighborhood, plan.rank, plan.alphabet_size, plan.n_list, plan.mode,
                                       plan.caps, options.threads);
  return {ExitCode::kSuccess, estimate_csv(estimate, config_hash(config))};
}

// ---------------------------------------------------------------------------
// rearrange

struct Check {
  explicit Check(std::string check_name = {}) : name(std::move(check_name)) {}
  std::string name;
  bool passed = true;
  std::size_t cases = 0;
  std::string detail;  // first failure
};

struct RearrangementReport {
  FiniteAction tau;
  std::vector<Check> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

/// Builds tau from (sigma, x) and checks the identities that transport
/// microstates: multiplicativity of the formula for tau, the pullback identity
/// x^tau_v = F(E^-1(x^sigma_v)) on B(e, window), the labelled identity
/// y^tau_v = y^sigma_v o phi_v^-1, recovery of sigma, and equality of the
/// empirical distribution of (x, y) under tau with the pushforward of the one under sigma.
inline RearrangementReport verify_rearrangement(const FiniteAction& sigma, const Labeling& x, const Labeling& y,
                                                const OrbitAlphabet& alphabet, int window) {
  if (window < 0) throw InputError("window must be >= 0");
  const FreeGroup group(sigma.rank());
  const int rho = alphabet.rho();
  RearrangementReport report{tau_construct(sigma, x, alphabet), {}};
  const FiniteAction& tau = report.tau;
  const std::size_t n = sigma.size();
  auto fail = [](Check& c, std::string detail) {
    if (c.passed) c.detail = std::move(detail);
    c.passed = false;
  };

  Check hom{"homomorphism"};
  const Ball pairs = group.ball(std::min(window, 2));
  const Ball products = group.ball(2 * pairs.radius);
  for (Vertex v = 0; v < n; ++v) {
    std::vector<Vertex> table(products.size());
    for (std::size_t k = 0; k < products.size(); ++k) {
      table[k] = tau_formula(sigma, x, alphabet, v, products.words[k]);
      ++hom.cases;
      if (table[k] != tau.act(products.words[k], v)) {
        fail(hom, "tau(" + group.display(products.words[k]) + ") at vertex " + std::to_string(v) +
                      " differs from the generator product");
      }
    }
    for (const auto& g : pairs.words) {
      for (const auto& h : pairs.words) {
        ++hom.cases;
        const Vertex lhs = table[products.index_of(mul(g, h))];
        const Vertex rhs = tau_formula(sigma, x, alphabet, table[products.index_of(h)], g);
        if (lhs != rhs) {
          fail(hom, "tau(gh) != tau(g)tau(h) at vertex " + std::to_string(v) + " for g = " + group.display(g) +
                        ", h = " + group.display(h));
        }
      }
    }
  }

  Check pullback{"pullback_identity"};
  Check labeled{"labeled_identity"};
  Check pushforward{"pushforward"};
  std::vector<std::pair<Pattern, Pattern>> under_tau, pushed;
  const Ball ball = group.ball(window);
  for (Vertex v = 0; v < n; ++v) {
    ++pullback.cases;
    const Pattern lhs = pullback_name(group, tau, x, v, window);
    std::optional<LocalBijection> phi;
    try {
      phi = decode_E(pullback_name(group, sigma, x, v, rho * window), alphabet);
      if (encode_F(*phi, alphabet) != lhs) {
        fail(pullback, "x^tau_v != F(E^-1(x^sigma_v)) at vertex " + std::to_string(v));
      }
    } catch (const Error& e) {
      fail(pullback, "vertex " + std::to_string(v) + ": " + e.what());
    }
    if (y.empty()) continue;
    for (const auto& g : ball.words) {
      ++labeled.cases;
      const Vertex at_tau = tau.act_inverse(g, v);
      const Vertex at_sigma = sigma.act_inverse(phi_inverse_at(sigma, x, alphabet, v, g), v);
      if (y[at_tau] != y[at_sigma]) {
        fail(labeled, "y^tau_v(" + group.display(g) + ") != y^sigma_v(phi_v^-1(" + group.display(g) + ")) at vertex " +
                          std::to_string(v));
      }
    }
    under_tau.emplace_back(lhs, pullback_name(group, tau, y, v, window));
    if (phi) {
      const auto image = product_encode_F(*phi, pullback_name(group, sigma, y, v, rho * window), alphabet);
      pushed.emplace_back(image.x, image.y);
    }
  }
  if (!y.empty()) {
    pushforward.cases = n;
    std::sort(under_tau.begin(), under_tau.end());
    std::sort(pushed.begin(), pushed.end());
    if (under_tau != pushed) fail(pushforward, "P^tau differs from the pushforward of P^sigma on B(e, " +
                                                   std::to_string(window) + ")");
  }

  Check recon{"sigma_reconstruction"};
  recon.cases = n * static_cast<std::size_t>(sigma.rank());
  if (!(reconstruct_sigma(tau, x, alphabet) == sigma)) fail(recon, "reconstructed sigma differs from sigma");

  report.checks = {hom, pullback, labeled, pushforward, recon};
  if (y.empty()) {
    report.checks[2].detail = report.checks[3].detail = "skipped (no labels y)";
  }
  return report;
}

namespace detail {

inline std::string action_line(const FiniteAction& a) { return action_to_json(a).at("generators").dump(); }

inline std::string check_line(const Check& c) {
  std::string line = "check " + c.name + ": " + (c.passed ? "pass" : "FAIL") + " (" + std::to_string(c.cases) + " cases";
  if (!c.detail.empty()) line += "; " + c.detail;
  return line + ")\n";
}

}  // namespace detail

/// config: {"rank", "n" | "sigma", "automorphism" | "x" | (sampler), "rho",
/// "y" | "label_alphabet", "window", "seed", "budget"}.
inline Report cmd_rearrange(Json config, const RunOptions& options = {}) {
  config = detail::effective_config("rearrange", std::move(config), options);
  const int rank = detail::value_or<int>(config, "rank", 2);
  if (rank < 1) throw InputError("rank must be >= 1");
  detail::check_cli_rank(rank);
  const FreeGroup group(rank);
  const FiniteAction sigma = detail::action_for(config, rank, 0);
  const std::size_t n = sigma.size();

  std::optional<Automorphism> theta;
  if (config.contains("automorphism")) theta = automorphism_from_json(config.at("automorphism"), rank);
  const int rho = detail::value_or<int>(config, "rho", theta ? theta->displacement() : 1);
  if (rho < 1) throw InputError("rho must be >= 1");
  if (theta && rho < theta->displacement()) {
    throw InputError("rho = " + std::to_string(rho) + " is below the automorphism displacement " +
                     std::to_string(theta->displacement()));
  }
  if (rank == 2 && rho > 2) throw ResourceError("rho > 2 is beyond the command-line cap for rank 2");
  const OrbitAlphabet alphabet(group, rho);

  std::string source;
  Labeling x;
  if (theta) {
    source = "automorphism";
    x = theta->constant_configuration(alphabet, n);
  } else if (config.contains("x")) {
    source = "labels";
    x = labeling_from_json(config.at("x"), [&](const std::string& s) { return alphabet.parse(group, s); });
  } else {
    source = "sampler";
    SamplerOptions sampler;
    sampler.budget = detail::value_or<std::uint64_t>(config, "budget", sampler.budget);
    sampler.restarts = detail::value_or<unsigned>(config, "restarts", 4);
    const auto sampled = sample_sft_config(SftSpec::z_rho(rank, rho), sigma,
                                           derive_seed(detail::require_seed(config, "x is sampled"), 1), sampler);
    if (!sampled) throw ResourceError("SFT sampler exhausted its budget without finding a configuration");
    x = *sampled;
  }
  if (x.size() != n) throw InputError("x has " + std::to_string(x.size()) + " labels for n = " + std::to_string(n));

  Labeling y;
  if (config.contains("y")) {
    y = labeling_from_json(config.at("y"), [](const std::string& s) {
      try {
        return static_cast<Symbol>(std::stoul(s));
      } catch (const std::exception&) {
        throw InputError("y labels must be non-negative integers");
      }
    });
    if (y.size() != n) throw InputError("y has the wrong length");
  } else {
    const auto k = detail::value_or<std::uint64_t>(config, "label_alphabet", 2);
    if (k == 0) throw InputError("label_alphabet must be >= 1");
    y.assign(n, 0);
    if (k > 1) {
      Engine rng(derive_seed(detail::require_seed(config, "y is sampled"), 2));
      for (auto& s : y) s = static_cast<Symbol>(uniform_below(rng, k));
    }
  }
  const int window = detail::value_or<int>(config, "window", 2);

  Report report;
  report.text = detail::header(config);
  std::ostringstream out;
  out << "rank: " << rank << "\nn: " << n << "\nrho: " << rho << "\nsource: " << source << "\n";
  out << "sigma: " << detail::action_line(sigma) << "\n";
  std::vector<std::string> names;
  for (Symbol s : x) names.push_back(alphabet.format(group, s));
  out << "x: " << Json(names).dump() << "\n";
  out << "y: " << Json(y).dump() << "\n";

  std::optional<RearrangementReport> checked;
  try {
    checked = verify_rearrangement(sigma, x, y, alphabet, window);
  } catch (const VerificationError& e) {
    report.code = ExitCode::kVerificationFailure;
    report.text += out.str() + "error: " + e.what() + "\nresult: FAIL\n";
    return report;
  }
  const RearrangementReport& r = *checked;
  out << "tau: " << detail::action_line(r.tau) << "\n";
  out << "tau_equals_sigma: " << (r.tau == sigma ? "yes" : "no") << "\n";
  for (const auto& c : r.checks) out << detail::check_line(c);
  bool passed = r.passed();
  if (theta) {
    Check formula{"automorphism_formula"};
    for (int i = 0; i < rank; ++i) {
      const GroupWord s = GroupWord::from_reduced({generator_letter(i)});
      for (Vertex v = 0; v < n; ++v) {
        ++formula.cases;
        if (r.tau.act(s, v) != sigma.act(theta->inverse(s), v) && formula.passed) {
          formula.passed = false;
          formula.detail = "tau(" + group.display(s) + ") != sigma(theta^-1(" + group.display(s) + ")) at vertex " +
                           std::to_string(v);
        }
      }
    }
    out << detail::check_line(formula);
    passed = passed && formula.passed;
  }
  out << "result: " << (passed ? "pass" : "FAIL") << "\n";
  report.text += out.str();
  if (!passed) report.code = ExitCode::kVerificationFailure;
  return report;
}

// ---------------------------------------------------------------------------
// sft-verify

/// config: {"rank", "sft" | "rho", "n" | "sigma", "x" | "automorphism", "seed"}.
/// Without "sft" the spec is Z_rho.
inline Report cmd_sft_verify(Json config, const RunOptions& options = {}) {
  config = detail::effective_config("sft-verify", std::move(config), options);
  const int rank = detail::value_or<int>(config, "rank", 2);
  if (rank < 1) throw InputError("rank must be >= 1");
  detail::check_cli_rank(rank);
  const FreeGroup group(rank);

  std::optional<Automorphism> theta;
  if (config.contains("automorphism")) theta = automorphism_from_json(config.at("automorphism"), rank);
  std::optional<SftSpec> spec;
  if (config.contains("sft")) {
    spec = sft_from_json(config.at("sft"), rank);
  } else {
    const int rho = detail::value_or<int>(config, "rho", theta ? theta->displacement() : 1);
    if (rho < 1) throw InputError("rho must be >= 1");
    if (rank == 2 && rho > 2) throw ResourceError("rho > 2 is beyond the command-line cap for rank 2");
    spec = SftSpec::z_rho(rank, rho);
  }
  const bool z_rho = spec->kind() == SftSpec::Kind::kZRho;
  const FiniteAction sigma = detail::action_for(config, rank, 0);

  Labeling x;
  if (theta) {
    if (!z_rho) throw InputError("an automorphism configuration needs the Z_rho spec");
    if (theta->displacement() > spec->rho()) {
      throw InputError("automorphism displacement " + std::to_string(theta->displacement()) + " exceeds rho");
    }
    x = theta->constant_configuration(spec->orbit_alphabet(), sigma.size());
  } else {
    x = labeling_from_json(detail::require(config, "x", "sft-verify config"), [&](const std::string& s) {
      return z_rho ? spec->orbit_alphabet().parse(group, s) : spec->alphabet().index_of(s);
    });
  }
  if (x.size() != sigma.size()) throw InputError("x and sigma disagree on n");

  std::ostringstream out;
  out << "rank: " << rank << "\nn: " << sigma.size() << "\n";
  out << "spec: " << (z_rho ? "z_rho (rho = " + std::to_string(spec->rho()) + ")"
                            : std::string(spec->nearest_neighbor() ? "explicit, nearest-neighbour" : "explicit"))
      << "\n";
  std::size_t failures = 0;
  for (Vertex v = 0; v < sigma.size(); ++v) {
    const PullbackConfig view(sigma, x, v);
    std::string reason;
    bool ok;
    if (z_rho) {
      const AxiomReport a = axioms_check(spec->orbit_alphabet(), view);
      ok = a.passed();
      if (!ok) reason = std::string(to_string(a.failure)) + (a.detail.empty() ? "" : ": " + a.detail);
    } else {
      ok = local_check(*spec, view) == Verdict::kPass;
      if (!ok) reason = "forbidden pattern at e";
    }
    if (!ok && ++failures <= 20) out << "vertex " << v << ": FAIL (" << reason << ")\n";
  }
  const bool all = sft_check_all(*spec, sigma, x);
  if (all != (failures == 0)) throw VerificationError("per-vertex and whole-configuration checks disagree");
  out << "failures: " << failures << "\nresult: " << (failures == 0 ? "pass" : "FAIL") << "\n";
  return {failures == 0 ? ExitCode::kSuccess : ExitCode::kVerificationFailure, detail::header(config) + out.str()};
}

// ---------------------------------------------------------------------------
// weight tools

/// config: {"action": "validate" | "rationalize" | "markovize" | "distance",
/// "weight" | "marginals", "other", "q", "m", "sft"}. The report is JSON.
inline Report cmd_weight(Json config, const RunOptions& options = {}) {
  config = detail::effective_config("weight", std::move(config), options);
  const auto action = detail::get_as<std::string>(detail::require(config, "action", "weight config"), "action");
  Json out{{"config_hash", hex_hash(config_hash(config))}, {"action", action}};
  ExitCode code = ExitCode::kSuccess;
  const EntropyOptions entropy{options.threads};

  if (action == "validate") {
    const LoadedWeight w = weight_from_json(detail::require(config, "weight", "weight config"));
    const auto issues = w.exact ? weight_issues(*w.exact, 0.0) : weight_issues(w.numeric);
    out["exact"] = w.exact.has_value();
    out["valid"] = issues.empty();
    out["issues"] = issues;
    if (!issues.empty()) code = ExitCode::kInputError;
  } else if (action == "rationalize") {
    const LoadedWeight w = weight_from_json(detail::require(config, "weight", "weight config"));
    detail::check_cli_rank(w.numeric.rank);
    const auto q = detail::get_as<std::uint64_t>(detail::require(config, "q", "weight config"), "q");
    std::optional<EdgeMask> support;
    if (config.contains("sft")) {
      const SftSpec spec = sft_from_json(config.at("sft"), w.numeric.rank, w.numeric.alphabet);
      if (!spec.nearest_neighbor()) throw InputError("rationalize support needs a nearest-neighbour SFT");
      support = spec.allowed_edges();
    }
    const ExactWeight wq = rationalize_weight(w.numeric, q, support ? &*support : nullptr);
    const Weight numeric = to_numeric(wq);
    out["q"] = q;
    out["distance"] = weight_distance(w.numeric, numeric);
    out["f"] = f_markov(w.numeric, entropy).value;
    out["f_rational"] = f_markov(numeric, entropy).value;
    out["f_rational_exact"] = f_markov_exact(wq).format();
    out["weight"] = weight_to_json(wq);
  } else if (action == "markovize") {
    Json result;
    if (config.contains("weight")) {
      const LoadedWeight w = weight_from_json(config.at("weight"));
      detail::check_cli_rank(w.numeric.rank);
      validate_weight(w.numeric, 1e-9);
      const FreeGroup group(w.numeric.rank);
      const int m = detail::value_or<int>(config, "m", 0);
      if (m < 0) throw InputError("m must be >= 0");
      const Window window = group.ball(m + 1).words;
      const double f_source = f_markov(w.numeric, entropy).value;
      double f_result;
      bool match;
      if (w.exact) {
        auto d = marginal(*w.exact, window);
        d.ball_radius = m + 1;
        const ExactWeight wm = markovize(d, group, w.exact->alphabet, 0.0);
        const LogLinear exact_source = f_markov_exact(*w.exact);
        const LogLinear exact_result = f_markov_exact(wm);
        f_result = exact_result.to_double();
        match = exact_source == exact_result;
        out["f_source_exact"] = exact_source.format();
        out["f_markovized_exact"] = exact_result.format();
        result = weight_to_json(wm);
      } else {
        auto d = marginal(w.numeric, window);
        d.ball_radius = m + 1;
        const Weight wm = markovize(d, group, w.numeric.alphabet, 1e-9);
        f_result = f_markov(wm, entropy).value;
        match = std::abs(f_result - f_source) <= 1e-9;
        result = weight_to_json(wm);
      }
      out["m"] = m;
      out["f_source"] = f_source;
      out["f_markovized"] = f_result;
      out["match"] = match;
      if (!match) code = ExitCode::kVerificationFailure;
    } else {
      const LoadedDistribution d = distribution_from_json(detail::require(config, "marginals", "weight config"));
      detail::check_cli_rank(d.rank);
      const FreeGroup group(d.rank);
      if (d.exact) {
        const ExactWeight wm = markovize(*d.exact, group, d.alphabet, 0.0);
        out["f_markovized"] = f_markov_exact(wm).to_double();
        out["f_markovized_exact"] = f_markov_exact(wm).format();
        result = weight_to_json(wm);
      } else {
        const Weight wm = markovize(d.numeric, group, d.alphabet, 1e-9);
        out["f_markovized"] = f_markov(wm, entropy).value;
        result = weight_to_json(wm);
      }
    }
    out["weight"] = result;
  } else if (action == "distance") {
    const LoadedWeight a = weight_from_json(detail::require(config, "weight", "weight config"));
    const LoadedWeight b = weight_from_json(detail::require(config, "other", "weight config"));
    if (a.exact && b.exact) {
      const Rational d = weight_distance(*a.exact, *b.exact);
      out["distance"] = to_double(d);
      out["distance_exact"] = rational_to_json(d);
    } else {
      out["distance"] = weight_distance(a.numeric, b.numeric);
    }
  } else {
    throw InputError("unknown weight action '" + action + "'");
  }
  return {code, out.dump(2) + "\n"};
}

}  // namespace fsofic
