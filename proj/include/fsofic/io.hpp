#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fsofic/error.hpp"
#include "fsofic/markov.hpp"
#include "fsofic/microstates.hpp"
#include "fsofic/orbit.hpp"
#include "fsofic/rational.hpp"
#include "fsofic/sft.hpp"
#include "fsofic/shift_space.hpp"

namespace fsofic {

using Json = nlohmann::json;

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

/// 64-bit FNV-1a of the canonical (key-sorted, compact) dump.
inline std::uint64_t config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

/// Shortest round-trip decimal, with "inf"/"-inf"/"nan" spelled out.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x < 0 ? "-inf" : "inf";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

namespace detail {

inline const Json& require(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw InputError(what + ": missing \"" + key + "\"");
  return j.at(key);
}

template <class T>
T get_as(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw InputError(what + ": wrong type (" + j.dump() + ")");
  }
}

inline BigInt big_from_json(const Json& j, const std::string& what) {
  if (j.is_number_integer()) return BigInt(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return BigInt(j.get<std::uint64_t>());
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    const std::size_t start = !s.empty() && s[0] == '-' ? 1 : 0;
    if (s.size() == start || !std::all_of(s.begin() + static_cast<std::ptrdiff_t>(start), s.end(),
                                          [](unsigned char c) { return std::isdigit(c); })) {
      throw InputError(what + ": '" + s + "' is not an integer");
    }
    return BigInt(s);
  }
  throw InputError(what + ": expected an integer");
}

inline Json big_to_json(const BigInt& x) {
  if (x >= std::numeric_limits<std::int64_t>::min() && x <= std::numeric_limits<std::int64_t>::max()) {
    return x.convert_to<std::int64_t>();
  }
  return x.str();
}

}  // namespace detail

/// A probability read from JSON: floats are inexact; integers, {"num","den"}
/// objects and "p/q" strings are exact.
struct Probability {
  double value = 0.0;
  std::optional<Rational> exact;
};

inline Probability probability_from_json(const Json& j, const std::string& what) {
  Probability p;
  if (j.is_number_float()) {
    p.value = j.get<double>();
  } else if (j.is_number_integer()) {
    p.exact = Rational(detail::big_from_json(j, what));
  } else if (j.is_object()) {
    const BigInt num = detail::big_from_json(detail::require(j, "num", what), what);
    const BigInt den = detail::big_from_json(detail::require(j, "den", what), what);
    if (den == 0) throw InputError(what + ": zero denominator");
    p.exact = Rational(num, den);
  } else if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) {
      p.exact = Rational(detail::big_from_json(s, what));
    } else {
      const BigInt num = detail::big_from_json(s.substr(0, slash), what);
      const BigInt den = detail::big_from_json(s.substr(slash + 1), what);
      if (den == 0) throw InputError(what + ": zero denominator");
      p.exact = Rational(num, den);
    }
  } else {
    throw InputError(what + ": expected a probability");
  }
  if (p.exact) p.value = to_double(*p.exact);
  if (!std::isfinite(p.value)) throw InputError(what + ": probability is not finite");
  return p;
}

inline Json rational_to_json(const Rational& q) {
  return Json{{"num", detail::big_to_json(numerator(q))}, {"den", detail::big_to_json(denominator(q))}};
}

inline Json scalar_to_json(double x) { return x; }
inline Json scalar_to_json(const Rational& q) { return rational_to_json(q); }

// ---------------------------------------------------------------------------
// Alphabets and words

inline Alphabet alphabet_from_json(const Json& j) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto k = j.get<std::int64_t>();
    if (k < 1) throw InputError("alphabet size must be >= 1");
    return Alphabet::numbered(static_cast<std::size_t>(k));
  }
  if (!j.is_array()) throw InputError("alphabet: expected a list of symbol names or a size");
  std::vector<std::string> names;
  for (const auto& e : j) {
    if (e.is_string()) {
      names.push_back(e.get<std::string>());
    } else if (e.is_number_integer()) {
      names.push_back(std::to_string(e.get<std::int64_t>()));
    } else {
      throw InputError("alphabet: symbol names must be strings");
    }
    if (names.back().empty()) throw InputError("alphabet: empty symbol name");
  }
  return Alphabet(std::move(names));
}

inline std::string symbol_name_from_json(const Json& j, const std::string& what) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  throw InputError(what + ": symbol must be a string");
}

/// Parses a word; "e" is the identity while no generator is named e (rank < 5).
inline GroupWord parse_word(const FreeGroup& group, const std::string& text) {
  if (text == "e" && group.rank() < 5) return {};
  return group.parse(text);
}

inline int rank_from_json(const Json& j) {
  const auto r = detail::get_as<int>(j, "rank");
  if (r < 1 || r > 26) throw InputError("rank must be in [1, 26]");
  return r;
}

/// Pattern {"word": "symbol", ...}; "" or "e" is the identity.
inline Pattern pattern_from_json(const Json& j, const FreeGroup& group, const Alphabet& alphabet) {
  if (!j.is_object()) throw InputError("pattern: expected an object {word: symbol}");
  Pattern p;
  for (const auto& [word, symbol] : j.items()) {
    const GroupWord g = parse_word(group, word);
    if (!p.emplace(g, alphabet.index_of(symbol_name_from_json(symbol, "pattern"))).second) {
      throw InputError("pattern: duplicate domain element " + group.display(g));
    }
  }
  return p;
}

inline Json pattern_to_json(const Pattern& p, const FreeGroup& group, const Alphabet& alphabet) {
  Json j = Json::object();
  for (const auto& [g, s] : p) j[group.format(g)] = alphabet.name(s);
  return j;
}

// ---------------------------------------------------------------------------
// Weights

struct LoadedWeight {
  Weight numeric;
  std::optional<ExactWeight> exact;  // present when every entry is exact
};

/// {"rank", "alphabet", "vertex": {name: p}, "edge": [{"from", "to", "gen", "p"}]};
/// gen is 1-based and omitted entries are 0. A wrapper {"weight": {...}} is accepted.
inline LoadedWeight weight_from_json(const Json& input) {
  const Json& j = input.is_object() && input.contains("weight") && !input.contains("vertex") ? input.at("weight") : input;
  const std::string what = "weight";
  const int rank = rank_from_json(detail::require(j, "rank", what));
  const Alphabet alphabet = alphabet_from_json(detail::require(j, "alphabet", what));
  const std::size_t q = alphabet.size();

  LoadedWeight out;
  out.numeric = Weight::zeros(rank, alphabet);
  ExactWeight exact = ExactWeight::zeros(rank, alphabet);
  bool all_exact = true;
  auto take = [&](const Json& value, double& numeric, Rational& rational, const std::string& where) {
    const Probability p = probability_from_json(value, where);
    numeric = p.value;
    if (p.exact) {
      rational = *p.exact;
    } else {
      all_exact = false;
    }
  };

  const Json& vertex = detail::require(j, "vertex", what);
  if (vertex.is_array()) {
    if (vertex.size() != q) throw InputError("weight: vertex list length differs from alphabet size");
    for (std::size_t a = 0; a < q; ++a) take(vertex[a], out.numeric.vertex[a], exact.vertex[a], "vertex");
  } else if (vertex.is_object()) {
    for (const auto& [name, value] : vertex.items()) {
      const Symbol a = alphabet.index_of(name);
      take(value, out.numeric.vertex[a], exact.vertex[a], "vertex(" + name + ")");
    }
  } else {
    throw InputError("weight: \"vertex\" must be an object or list");
  }

  const Json& edges = detail::require(j, "edge", what);
  if (!edges.is_array()) throw InputError("weight: \"edge\" must be a list");
  std::vector<bool> seen(out.numeric.edge.size(), false);
  for (const auto& e : edges) {
    const Symbol a = alphabet.index_of(symbol_name_from_json(detail::require(e, "from", "edge"), "edge"));
    const Symbol b = alphabet.index_of(symbol_name_from_json(detail::require(e, "to", "edge"), "edge"));
    const int gen = detail::get_as<int>(detail::require(e, "gen", "edge"), "edge gen");
    if (gen < 1 || gen > rank) throw InputError("edge: gen must be in [1, " + std::to_string(rank) + "]");
    const std::size_t k = out.numeric.edge_index(a, b, gen - 1);
    if (seen[k]) throw InputError("edge: duplicate entry for (" + alphabet.name(a) + "," + alphabet.name(b) + ")");
    seen[k] = true;
    take(detail::require(e, "p", "edge"), out.numeric.edge[k], exact.edge[k], "edge");
  }
  if (all_exact) out.exact = std::move(exact);
  return out;
}

template <class Scalar>
Json weight_to_json(const BasicWeight<Scalar>& w) {
  Json vertex = Json::object();
  for (Symbol a = 0; a < w.symbols(); ++a) vertex[w.alphabet.name(a)] = scalar_to_json(w.vertex[a]);
  Json edges = Json::array();
  for (int i = 0; i < w.rank; ++i) {
    for (Symbol a = 0; a < w.symbols(); ++a) {
      for (Symbol b = 0; b < w.symbols(); ++b) {
        if (w.at(a, b, i) == Scalar(0)) continue;
        edges.push_back({{"from", w.alphabet.name(a)},
                         {"to", w.alphabet.name(b)},
                         {"gen", i + 1},
                         {"p", scalar_to_json(w.at(a, b, i))}});
      }
    }
  }
  return Json{{"rank", w.rank}, {"alphabet", w.alphabet.names()}, {"vertex", vertex}, {"edge", edges}};
}

// ---------------------------------------------------------------------------
// Pattern distributions

struct LoadedDistribution {
  PatternDistribution numeric;
  std::optional<BasicPatternDistribution<Rational>> exact;
  Alphabet alphabet;
  int rank = 1;
};

/// {"rank", "alphabet"?, "window_radius": m | "window": [words], "entries": [{"pattern", "p"}]}.
/// Without "alphabet", symbol names that are all decimal become 0..max, otherwise they are sorted.
inline LoadedDistribution distribution_from_json(const Json& j, std::optional<int> default_rank = std::nullopt) {
  const std::string what = "distribution";
  LoadedDistribution out;
  if (j.contains("rank")) {
    out.rank = rank_from_json(j.at("rank"));
  } else if (default_rank) {
    out.rank = *default_rank;
  } else {
    throw InputError("distribution: missing \"rank\"");
  }
  const FreeGroup group(out.rank);
  Window window;
  std::optional<int> radius;
  if (j.contains("window_radius")) {
    radius = detail::get_as<int>(j.at("window_radius"), "window_radius");
    window = group.ball(*radius).words;
  } else if (j.contains("window")) {
    std::vector<GroupWord> words;
    for (const auto& w : j.at("window")) {
      const auto s = detail::get_as<std::string>(w, "window");
      words.push_back(parse_word(group, s));
    }
    window = make_window(std::move(words));
  } else {
    throw InputError("distribution: missing \"window_radius\"");
  }
  const Json& entries = detail::require(j, "entries", what);
  if (!entries.is_array()) throw InputError("distribution: \"entries\" must be a list");

  if (j.contains("alphabet")) {
    out.alphabet = alphabet_from_json(j.at("alphabet"));
  } else {
    std::set<std::string> names;
    for (const auto& e : entries) {
      for (const auto& [word, symbol] : detail::require(e, "pattern", "entry").items()) {
        names.insert(symbol_name_from_json(symbol, "entry"));
      }
    }
    const bool numeric_names = std::all_of(names.begin(), names.end(), [](const std::string& s) {
      return !s.empty() && s.size() < 10 && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
    });
    if (numeric_names && !names.empty()) {
      std::size_t top = 0;
      for (const auto& s : names) top = std::max<std::size_t>(top, std::stoul(s));
      out.alphabet = Alphabet::numbered(top + 1);
    } else if (!names.empty()) {
      out.alphabet = Alphabet(std::vector<std::string>(names.begin(), names.end()));
    } else {
      throw InputError("distribution: no entries");
    }
  }

  out.numeric.window = window;
  out.numeric.ball_radius = radius;
  BasicPatternDistribution<Rational> exact;
  exact.window = window;
  exact.ball_radius = radius;
  bool all_exact = true;
  for (const auto& e : entries) {
    const Pattern p = pattern_from_json(detail::require(e, "pattern", "entry"), group, out.alphabet);
    const PatternKey key = out.numeric.key(p);
    const Probability prob = probability_from_json(detail::require(e, "p", "entry"), "entry");
    if (out.numeric.mass.count(key)) throw InputError("distribution: duplicate pattern");
    out.numeric.mass.emplace(key, prob.value);
    if (prob.exact) {
      exact.mass.emplace(key, *prob.exact);
    } else {
      all_exact = false;
    }
  }
  validate_distribution(out.numeric);
  if (all_exact) {
    validate_distribution(exact);
    out.exact = std::move(exact);
  }
  return out;
}

template <class Scalar>
Json distribution_to_json(const BasicPatternDistribution<Scalar>& d, const FreeGroup& group, const Alphabet& alphabet) {
  Json entries = Json::array();
  for (const auto& [key, p] : d.mass) {
    entries.push_back({{"pattern", pattern_to_json(d.pattern(key), group, alphabet)}, {"p", scalar_to_json(p)}});
  }
  Json j{{"rank", group.rank()}, {"alphabet", alphabet.names()}, {"entries", entries}};
  if (d.ball_radius) {
    j["window_radius"] = *d.ball_radius;
  } else {
    Json words = Json::array();
    for (const auto& g : d.window) words.push_back(group.display(g));
    j["window"] = words;
  }
  return j;
}

// ---------------------------------------------------------------------------
// SFT specs, orbit maps, actions

/// {"builtin": "z_rho", "rho"}, {"builtin": "full"} or
/// {"alphabet", "forbidden": [pattern...], "nearest_neighbor"}.
inline SftSpec sft_from_json(const Json& j, int rank, const std::optional<Alphabet>& default_alphabet = std::nullopt) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "full" || name == "full_shift") {
      if (!default_alphabet) throw InputError("sft: the full shift needs an alphabet");
      return SftSpec::full_shift(rank, *default_alphabet);
    }
    throw InputError("sft: unknown builtin '" + name + "'");
  }
  if (!j.is_object()) throw InputError("sft: expected an object");
  if (j.contains("rank") && rank_from_json(j.at("rank")) != rank) throw InputError("sft: rank mismatch");
  if (j.contains("builtin")) {
    const auto name = detail::get_as<std::string>(j.at("builtin"), "builtin");
    if (name == "z_rho") {
      const int rho = detail::get_as<int>(detail::require(j, "rho", "sft"), "rho");
      if (rho < 1) throw InputError("sft: rho must be >= 1");
      return SftSpec::z_rho(rank, rho);
    }
    if (name == "full" || name == "full_shift") {
      if (j.contains("alphabet")) return SftSpec::full_shift(rank, alphabet_from_json(j.at("alphabet")));
      if (!default_alphabet) throw InputError("sft: the full shift needs an alphabet");
      return SftSpec::full_shift(rank, *default_alphabet);
    }
    throw InputError("sft: unknown builtin '" + name + "'");
  }
  std::optional<Alphabet> alphabet = default_alphabet;
  if (j.contains("alphabet")) alphabet = alphabet_from_json(j.at("alphabet"));
  if (!alphabet) throw InputError("sft: missing \"alphabet\"");
  const FreeGroup group(rank);
  std::vector<Pattern> forbidden;
  if (j.contains("forbidden")) {
    for (const auto& p : j.at("forbidden")) forbidden.push_back(pattern_from_json(p, group, *alphabet));
  }
  const bool nn = j.contains("nearest_neighbor") && detail::get_as<bool>(j.at("nearest_neighbor"), "nearest_neighbor");
  return SftSpec::explicit_spec(rank, *alphabet, std::move(forbidden), nn);
}

inline Json sft_to_json(const SftSpec& spec) {
  if (spec.kind() == SftSpec::Kind::kZRho) return Json{{"builtin", "z_rho"}, {"rho", spec.rho()}};
  const FreeGroup group(spec.rank());
  Json forbidden = Json::array();
  for (const auto& p : spec.forbidden()) forbidden.push_back(pattern_to_json(p, group, spec.alphabet()));
  return Json{{"alphabet", spec.alphabet().names()},
              {"forbidden", forbidden},
              {"nearest_neighbor", spec.nearest_neighbor()}};
}

/// {"window": R, "rho": rho, "map": {"word": "image", ...}} covering B(e, R).
inline LocalBijection local_bijection_from_json(const Json& j, int rank) {
  const FreeGroup group(rank);
  const int window = detail::get_as<int>(detail::require(j, "window", "local bijection"), "window");
  const int rho = detail::get_as<int>(detail::require(j, "rho", "local bijection"), "rho");
  if (window < 0) throw InputError("local bijection: window must be >= 0");
  const Ball ball = group.ball(window);
  std::vector<std::optional<GroupWord>> images(ball.size());
  for (const auto& [word, image] : detail::require(j, "map", "local bijection").items()) {
    const GroupWord g = parse_word(group, word);
    const auto it = ball.index.find(g);
    if (it == ball.index.end()) throw InputError("local bijection: " + group.display(g) + " is outside the window");
    const auto text = detail::get_as<std::string>(image, "map");
    images[it->second] = parse_word(group, text);
  }
  std::vector<GroupWord> table;
  for (std::size_t k = 0; k < images.size(); ++k) {
    if (!images[k]) throw InputError("local bijection: no image for " + group.display(ball.words[k]));
    table.push_back(*images[k]);
  }
  return LocalBijection(group, window, rho, std::move(table));
}

inline Json local_bijection_to_json(const LocalBijection& phi) {
  const FreeGroup group(phi.rank());
  Json map = Json::object();
  for (std::size_t k = 0; k < phi.ball().size(); ++k) map[group.format(phi.ball().words[k])] = group.format(phi.images()[k]);
  return Json{{"window", phi.window()}, {"rho", phi.rho()}, {"map", map}};
}

/// {"images": {"a": "ab", "b": "b"}}; every generator needs an image.
inline Automorphism automorphism_from_json(const Json& j, int rank) {
  const FreeGroup group(rank);
  const Json& images = detail::require(j, "images", "automorphism");
  if (!images.is_object()) throw InputError("automorphism: \"images\" must be an object");
  std::vector<std::optional<GroupWord>> table(static_cast<std::size_t>(rank));
  for (const auto& [name, image] : images.items()) {
    if (name.size() != 1) throw InputError("automorphism: key '" + name + "' is not a generator");
    const Letter s = group.parse_letter(name[0]);
    if (is_inverse(s)) throw InputError("automorphism: give images of generators, not inverses");
    table[static_cast<std::size_t>(generator_of(s))] = group.parse(detail::get_as<std::string>(image, "image"));
  }
  std::vector<GroupWord> out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table[i]) {
      throw InputError(std::string("automorphism: no image for ") + group.letter_char(generator_letter(static_cast<int>(i))));
    }
    out.push_back(*table[i]);
  }
  return Automorphism(group, std::move(out));
}

inline Json automorphism_to_json(const Automorphism& theta) {
  const FreeGroup group(theta.rank());
  Json images = Json::object();
  for (int i = 0; i < theta.rank(); ++i) {
    images[std::string(1, group.letter_char(generator_letter(i)))] = group.format(theta.images()[static_cast<std::size_t>(i)]);
  }
  return Json{{"images", images}};
}

/// {"generators": [[...], ...]} with 0-based permutations, one per generator.
inline FiniteAction action_from_json(const Json& j) {
  const Json& gens = detail::require(j, "generators", "action");
  std::vector<Permutation> perms;
  for (const auto& g : gens) perms.push_back(detail::get_as<Permutation>(g, "generator permutation"));
  if (perms.empty()) throw InputError("action: needs at least one generator");
  FiniteAction sigma(std::move(perms));
  if (j.contains("n") && detail::get_as<std::size_t>(j.at("n"), "n") != sigma.size()) {
    throw InputError("action: \"n\" does not match the permutation length");
  }
  return sigma;
}

inline Json action_to_json(const FiniteAction& sigma) {
  Json gens = Json::array();
  for (int i = 0; i < sigma.rank(); ++i) {
    Permutation p(sigma.size());
    for (Vertex v = 0; v < sigma.size(); ++v) p[v] = sigma.act(generator_letter(i), v);
    gens.push_back(p);
  }
  return Json{{"n", sigma.size()}, {"generators", gens}};
}

/// A labeling as a list of symbol names (or integer indices).
inline Labeling labeling_from_json(const Json& j, const std::function<Symbol(const std::string&)>& parse) {
  if (!j.is_array()) throw InputError("labeling: expected a list");
  Labeling x;
  for (const auto& e : j) x.push_back(parse(symbol_name_from_json(e, "labeling")));
  return x;
}

// ---------------------------------------------------------------------------
// Results

inline std::string estimate_csv(const Estimate& estimate, std::uint64_t hash) {
  std::string out = "# config_hash: " + hex_hash(hash) + "\n";
  for (const auto& w : estimate.warnings) out += "# warning: " + w + "\n";
  out += "n,samples,mean_count,log_mean_over_n,stderr\n";
  for (const auto& row : estimate.rows) {
    out += std::to_string(row.n) + "," + std::to_string(row.samples) + "," + format_double(row.mean_count) + "," +
           format_double(row.log_mean_over_n.value) + "," + format_double(row.std_error) + "\n";
  }
  return out;
}

}  // namespace fsofic
