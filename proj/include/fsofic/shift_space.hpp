#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsofic/action.hpp"
#include "fsofic/error.hpp"
#include "fsofic/free_group.hpp"

namespace fsofic {

/// Finite list of distinct, non-empty symbol names; symbols are their indices.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw InputError("alphabet must be non-empty");
    std::vector<std::string> sorted = names_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InputError("alphabet symbol names must be distinct");
    }
  }

  /// Symbols named "0", "1", ..., "k-1".
  static Alphabet numbered(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back(std::to_string(i));
    return Alphabet(std::move(names));
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(Symbol s) const { return names_.at(s); }
  const std::vector<std::string>& names() const { return names_; }

  Symbol index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw InputError("unknown symbol '" + name + "'");
    return static_cast<Symbol>(it - names_.begin());
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<std::string> names_;
};

/// A map w: D_w -> A on a finite domain, ordered shortlex by domain element.
using Pattern = std::map<GroupWord, Symbol>;

/// (g p)(f) = p(g^-1 f); the domain becomes g D.
inline Pattern shift(const GroupWord& g, const Pattern& p) {
  Pattern out;
  for (const auto& [f, symbol] : p) out.emplace(mul(g, f), symbol);
  return out;
}

/// Restriction of p to the given domain; every element must be present.
inline Pattern restrict(const Pattern& p, const std::vector<GroupWord>& domain) {
  Pattern out;
  for (const GroupWord& g : domain) {
    auto it = p.find(g);
    if (it == p.end()) throw WindowError("pattern is not defined on the requested domain");
    out.emplace(g, it->second);
  }
  return out;
}

using Window = std::vector<GroupWord>;   // sorted shortlex, distinct
using PatternKey = std::vector<Symbol>;  // symbols in window order

inline Window make_window(std::vector<GroupWord> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

/// Probability vector over patterns on a fixed window K. Scalar is double or an exact rational.
template <class Scalar>
struct BasicPatternDistribution {
  Window window;
  std::map<PatternKey, Scalar> mass;
  std::optional<int> ball_radius;  // set when window == B(e, radius)

  Scalar probability(const PatternKey& key) const {
    auto it = mass.find(key);
    return it == mass.end() ? Scalar(0) : it->second;
  }

  Pattern pattern(const PatternKey& key) const {
    Pattern p;
    for (std::size_t i = 0; i < window.size(); ++i) p.emplace(window[i], key[i]);
    return p;
  }

  PatternKey key(const Pattern& p) const {
    PatternKey k;
    k.reserve(window.size());
    for (const GroupWord& g : window) {
      auto it = p.find(g);
      if (it == p.end()) throw InputError("pattern domain does not match distribution window");
      k.push_back(it->second);
    }
    if (p.size() != window.size()) throw InputError("pattern domain does not match distribution window");
    return k;
  }
};

using PatternDistribution = BasicPatternDistribution<double>;

/// Checks non-negativity, key shape and total mass 1 (within `tolerance`).
template <class Scalar>
void validate_distribution(const BasicPatternDistribution<Scalar>& d, double tolerance = 1e-12) {
  Scalar total(0);
  for (const auto& [key, p] : d.mass) {
    if (key.size() != d.window.size()) throw InputError("pattern key does not match window size");
    if (p < Scalar(0)) throw InputError("negative pattern probability");
    total += p;
  }
  if constexpr (std::is_floating_point_v<Scalar>) {
    if (std::abs(total - 1.0) > tolerance) {
      throw InputError("pattern distribution sums to " + std::to_string(total) + ", not 1");
    }
  } else {
    if (total != Scalar(1)) throw InputError("exact pattern distribution does not sum to 1");
  }
}

/// Marginal of d on a sub-window.
template <class Scalar>
BasicPatternDistribution<Scalar> project(const BasicPatternDistribution<Scalar>& d, const Window& sub) {
  std::vector<std::size_t> positions;
  positions.reserve(sub.size());
  for (const GroupWord& g : sub) {
    auto it = std::lower_bound(d.window.begin(), d.window.end(), g);
    if (it == d.window.end() || *it != g) throw WindowError("projection window is not a sub-window");
    positions.push_back(static_cast<std::size_t>(it - d.window.begin()));
  }
  BasicPatternDistribution<Scalar> out;
  out.window = sub;
  for (const auto& [key, p] : d.mass) {
    PatternKey k;
    k.reserve(positions.size());
    for (std::size_t pos : positions) k.push_back(key[pos]);
    out.mass[k] += p;
  }
  return out;
}

/// l1 distance between two distributions on the same window (in [0, 2]).
inline double l1_distance(const PatternDistribution& p, const PatternDistribution& q) {
  if (p.window != q.window) throw InputError("l1_distance: mismatched windows");
  double total = 0.0;
  auto a = p.mass.begin();
  auto b = q.mass.begin();
  while (a != p.mass.end() || b != q.mass.end()) {
    if (b == q.mass.end() || (a != p.mass.end() && a->first < b->first)) {
      total += std::abs(a->second);
      ++a;
    } else if (a == p.mass.end() || b->first < a->first) {
      total += std::abs(b->second);
      ++b;
    } else {
      total += std::abs(a->second - b->second);
      ++a;
      ++b;
    }
  }
  return total;
}

/// Table of sigma(g)^-1 v for every vertex v and window element g:
/// the vertex whose label x^sigma_v reads at g.
inline std::vector<std::vector<Vertex>> pullback_sites(const FiniteAction& sigma, const Window& window) {
  std::vector<std::vector<Vertex>> sites(sigma.size(), std::vector<Vertex>(window.size()));
  for (Vertex v = 0; v < sigma.size(); ++v) {
    for (std::size_t j = 0; j < window.size(); ++j) sites[v][j] = sigma.act_inverse(window[j], v);
  }
  return sites;
}

/// Pullback name x^sigma_v restricted to B(e, m): g -> x(sigma(g)^-1 v).
inline Pattern pullback_name(const FreeGroup& group, const FiniteAction& sigma, const Labeling& x, Vertex v,
                             int m) {
  if (x.size() != sigma.size()) throw InputError("labeling and action disagree on n");
  if (v >= sigma.size()) throw InputError("vertex out of range");
  const Ball ball = group.ball(m);
  std::vector<Vertex> site(ball.size());
  site[0] = v;
  Pattern out;
  out.emplace(ball.words[0], x[v]);
  for (std::size_t i = 1; i < ball.size(); ++i) {
    // sigma(g s)^-1 v = sigma(s)^-1 sigma(g)^-1 v
    site[i] = sigma.act(inverse_letter(ball.last[i]), site[ball.parent[i]]);
    out.emplace(ball.words[i], x[site[i]]);
  }
  return out;
}

/// Histogram of pullback patterns on `window`, as integer counts summing to n.
inline std::map<PatternKey, std::size_t> empirical_counts(const FiniteAction& sigma, const Labeling& x,
                                                         const Window& window) {
  if (x.size() != sigma.size()) throw InputError("labeling and action disagree on n");
  const auto sites = pullback_sites(sigma, window);
  std::map<PatternKey, std::size_t> counts;
  PatternKey key(window.size());
  for (Vertex v = 0; v < sigma.size(); ++v) {
    for (std::size_t j = 0; j < window.size(); ++j) key[j] = x[sites[v][j]];
    ++counts[key];
  }
  return counts;
}

/// P^sigma_x projected to `window`; all masses are multiples of 1/n.
inline PatternDistribution empirical_distribution(const FiniteAction& sigma, const Labeling& x,
                                                  const Window& window) {
  PatternDistribution d;
  d.window = window;
  const double n = static_cast<double>(sigma.size());
  for (const auto& [key, count] : empirical_counts(sigma, x, window)) {
    d.mass.emplace(key, static_cast<double>(count) / n);
  }
  return d;
}

inline PatternDistribution empirical_distribution(const FreeGroup& group, const FiniteAction& sigma,
                                                  const Labeling& x, int m) {
  PatternDistribution d = empirical_distribution(sigma, x, group.ball(m).words);
  d.ball_radius = m;
  return d;
}

/// A continuous observable phi: A^G -> C given by a dense table over the
/// patterns on B(e, radius), indexed in base-|A| with the first ball element
/// as the least significant digit.
class BlockCode {
 public:
  BlockCode(const FreeGroup& group, int radius, std::size_t input_alphabet, std::size_t output_alphabet,
            std::vector<Symbol> table)
      : radius_(radius),
        input_alphabet_(input_alphabet),
        output_alphabet_(output_alphabet),
        window_(group.ball(radius).words),
        table_(std::move(table)) {
    const double expected = std::pow(static_cast<double>(input_alphabet_), static_cast<double>(window_.size()));
    if (expected > 1e8) throw ResourceError("block code table too large");
    if (static_cast<double>(table_.size()) != expected) {
      throw InputError("block code table must be total: expected " + std::to_string(static_cast<std::size_t>(expected)) +
                       " entries, got " + std::to_string(table_.size()));
    }
    for (Symbol c : table_) {
      if (c >= output_alphabet_) throw InputError("block code output symbol out of range");
    }
  }

  /// Builds the table by evaluating `rule` on every pattern over the window.
  template <class Rule>
  static BlockCode from_rule(const FreeGroup& group, int radius, std::size_t input_alphabet,
                             std::size_t output_alphabet, Rule&& rule) {
    const Window window = group.ball(radius).words;
    std::size_t count = 1;
    for (std::size_t i = 0; i < window.size(); ++i) {
      count *= input_alphabet;
      if (count > 100'000'000) throw ResourceError("block code table too large");
    }
    std::vector<Symbol> table(count);
    PatternKey key(window.size(), 0);
    for (std::size_t code = 0; code < count; ++code) {
      std::size_t rest = code;
      for (auto& k : key) {
        k = static_cast<Symbol>(rest % input_alphabet);
        rest /= input_alphabet;
      }
      table[code] = rule(key);
    }
    return BlockCode(group, radius, input_alphabet, output_alphabet, std::move(table));
  }

  int radius() const { return radius_; }
  const Window& window() const { return window_; }
  std::size_t output_alphabet() const { return output_alphabet_; }

  Symbol operator()(const PatternKey& key) const {
    std::size_t code = 0;
    for (std::size_t i = key.size(); i-- > 0;) {
      if (key[i] >= input_alphabet_) throw InputError("block code input symbol out of range");
      code = code * input_alphabet_ + key[i];
    }
    return table_[code];
  }

 private:
  int radius_;
  std::size_t input_alphabet_;
  std::size_t output_alphabet_;
  Window window_;
  std::vector<Symbol> table_;
};

/// y(v) = phi(x^sigma_v): the recoding map x -> y induced by a block code.
inline Labeling apply_block_code(const BlockCode& phi, const FiniteAction& sigma, const Labeling& x) {
  if (x.size() != sigma.size()) throw InputError("labeling and action disagree on n");
  const auto sites = pullback_sites(sigma, phi.window());
  Labeling y(sigma.size());
  PatternKey key(phi.window().size());
  for (Vertex v = 0; v < sigma.size(); ++v) {
    for (std::size_t j = 0; j < key.size(); ++j) key[j] = x[sites[v][j]];
    y[v] = phi(key);
  }
  return y;
}

}  // namespace fsofic
