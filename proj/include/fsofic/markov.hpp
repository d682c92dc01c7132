#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "fsofic/error.hpp"
#include "fsofic/free_group.hpp"
#include "fsofic/parallel.hpp"
#include "fsofic/rational.hpp"
#include "fsofic/shift_space.hpp"

namespace fsofic {

/// Extended real in [-inf, inf); -inf is the log of an empty count.
struct EntropyValue {
  double value = 0.0;

  static EntropyValue negative_infinity() { return {-std::numeric_limits<double>::infinity()}; }
  bool finite() const { return std::isfinite(value); }
  friend bool operator==(const EntropyValue&, const EntropyValue&) = default;
};

inline std::string format_entropy(EntropyValue h, int precision = 12) {
  if (!h.finite()) return "-inf";
  std::ostringstream out;
  out.precision(precision);
  out << std::fixed << h.value;
  return out.str();
}

/// Vertex and edge probabilities of a Markov measure on A^G.
/// edge(a, b, i) is the probability of seeing a at g and b at g s_{i+1}.
template <class Scalar>
struct BasicWeight {
  int rank = 1;
  Alphabet alphabet;
  std::vector<Scalar> vertex;  // [a]
  std::vector<Scalar> edge;    // [(i * q + a) * q + b]

  static BasicWeight zeros(int rank, Alphabet alphabet) {
    BasicWeight w;
    w.rank = rank;
    const std::size_t q = alphabet.size();
    w.alphabet = std::move(alphabet);
    w.vertex.assign(q, Scalar(0));
    w.edge.assign(static_cast<std::size_t>(rank) * q * q, Scalar(0));
    return w;
  }

  std::size_t symbols() const { return vertex.size(); }
  std::size_t edge_index(Symbol a, Symbol b, int i) const {
    const std::size_t q = symbols();
    return (static_cast<std::size_t>(i) * q + a) * q + b;
  }
  const Scalar& at(Symbol a, Symbol b, int i) const { return edge[edge_index(a, b, i)]; }
  Scalar& at(Symbol a, Symbol b, int i) { return edge[edge_index(a, b, i)]; }

  friend bool operator==(const BasicWeight&, const BasicWeight&) = default;
};

using Weight = BasicWeight<double>;
using ExactWeight = BasicWeight<Rational>;

/// Allowed (a, b, i) edges of a nearest-neighbour SFT, indexed like BasicWeight::edge.
using EdgeMask = std::vector<bool>;

inline Weight to_numeric(const ExactWeight& w) {
  Weight out = Weight::zeros(w.rank, w.alphabet);
  for (std::size_t k = 0; k < w.vertex.size(); ++k) out.vertex[k] = to_double(w.vertex[k]);
  for (std::size_t k = 0; k < w.edge.size(); ++k) out.edge[k] = to_double(w.edge[k]);
  return out;
}

namespace detail {

template <class Scalar>
bool near(const Scalar& a, const Scalar& b, double tolerance) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return std::abs(a - b) <= tolerance;
  } else {
    return a == b;
  }
}

template <class Scalar>
std::string show(const Scalar& x) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    std::ostringstream out;
    out.precision(17);
    out << x;
    return out.str();
  } else {
    return to_string(x);
  }
}

}  // namespace detail

/// Every violated Balanced/Normalized/range condition, one message each.
template <class Scalar>
std::vector<std::string> weight_issues(const BasicWeight<Scalar>& w, double tolerance = 1e-12) {
  std::vector<std::string> issues;
  const std::size_t q = w.symbols();
  if (w.rank < 1) issues.push_back("rank must be >= 1");
  if (q == 0 || q != w.alphabet.size()) issues.push_back("vertex table does not match alphabet");
  if (w.edge.size() != static_cast<std::size_t>(std::max(w.rank, 0)) * q * q) {
    issues.push_back("edge table has wrong size");
    return issues;
  }
  auto in_range = [&](const Scalar& x) { return !(x < Scalar(0)) && !(Scalar(1) < x); };
  Scalar total(0);
  for (Symbol a = 0; a < q; ++a) {
    if (!in_range(w.vertex[a])) issues.push_back("vertex(" + w.alphabet.name(a) + ") outside [0,1]");
    total += w.vertex[a];
  }
  if (!detail::near(total, Scalar(1), tolerance)) {
    issues.push_back("Normalized fails: sum of vertex = " + detail::show(total));
  }
  for (int i = 0; i < w.rank; ++i) {
    for (Symbol a = 0; a < q; ++a) {
      Scalar out_sum(0), in_sum(0);
      for (Symbol b = 0; b < q; ++b) {
        if (!in_range(w.at(a, b, i))) {
          issues.push_back("edge(" + w.alphabet.name(a) + "," + w.alphabet.name(b) + ";" + std::to_string(i + 1) +
                           ") outside [0,1]");
        }
        out_sum += w.at(a, b, i);
        in_sum += w.at(b, a, i);
      }
      const std::string where = "(" + w.alphabet.name(a) + "; gen " + std::to_string(i + 1) + ")";
      if (!detail::near(out_sum, w.vertex[a], tolerance)) {
        issues.push_back("Balanced fails " + where + ": sum_b edge(a,b) = " + detail::show(out_sum) +
                         " but vertex = " + detail::show(w.vertex[a]));
      }
      if (!detail::near(in_sum, w.vertex[a], tolerance)) {
        issues.push_back("Balanced fails " + where + ": sum_b edge(b,a) = " + detail::show(in_sum) +
                         " but vertex = " + detail::show(w.vertex[a]));
      }
    }
  }
  return issues;
}

template <class Scalar>
void validate_weight(const BasicWeight<Scalar>& w, double tolerance = 1e-12) {
  const auto issues = weight_issues(w, tolerance);
  if (issues.empty()) return;
  std::string message = "invalid weight:";
  for (const auto& issue : issues) message += "\n  " + issue;
  throw InputError(message);
}

/// Product weight of the Bernoulli shift with base distribution `base`.
template <class Scalar>
BasicWeight<Scalar> bernoulli_weight(const std::vector<Scalar>& base, int rank,
                                     std::optional<Alphabet> alphabet = std::nullopt) {
  if (rank < 1) throw InputError("rank must be >= 1");
  Alphabet names = alphabet ? *alphabet : Alphabet::numbered(base.size());
  if (names.size() != base.size()) throw InputError("base distribution does not match alphabet");
  Scalar total(0);
  for (const Scalar& p : base) {
    if (p < Scalar(0)) throw InputError("negative base probability");
    total += p;
  }
  if (!detail::near(total, Scalar(1), 1e-12)) throw InputError("base distribution does not sum to 1");
  auto w = BasicWeight<Scalar>::zeros(rank, std::move(names));
  w.vertex = base;
  for (int i = 0; i < rank; ++i) {
    for (Symbol a = 0; a < base.size(); ++a) {
      for (Symbol b = 0; b < base.size(); ++b) w.at(a, b, i) = base[a] * base[b];
    }
  }
  return w;
}

/// l1 distance between the edge systems, summed over A x A x [r].
template <class Scalar>
Scalar weight_distance(const BasicWeight<Scalar>& w1, const BasicWeight<Scalar>& w2) {
  if (w1.rank != w2.rank || w1.alphabet != w2.alphabet) throw InputError("weights have different alphabets or ranks");
  Scalar total(0);
  for (std::size_t k = 0; k < w1.edge.size(); ++k) {
    const Scalar d = w1.edge[k] - w2.edge[k];
    total += d < Scalar(0) ? Scalar(-d) : d;
  }
  return total;
}

/// A connected finite subset of the right Cayley tree, listed breadth-first
/// from its shortlex-least element (the element nearest e).
struct TreeDomain {
  std::vector<GroupWord> nodes;
  std::vector<std::size_t> parent;  // parent[0] unused
  std::vector<Letter> step;         // nodes[k] = nodes[parent[k]] * step[k]

  static TreeDomain from(std::vector<GroupWord> domain) {
    if (domain.empty()) throw InputError("empty pattern domain");
    std::sort(domain.begin(), domain.end());
    domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
    std::unordered_map<GroupWord, bool, GroupWordHash> seen;
    for (const auto& g : domain) seen.emplace(g, false);
    int max_letter = 0;
    for (const auto& g : domain) {
      for (Letter s : g.letters()) max_letter = std::max<int>(max_letter, s | 1);
    }
    TreeDomain t;
    t.nodes.push_back(domain.front());
    t.parent.push_back(0);
    t.step.push_back(0);
    seen[domain.front()] = true;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      for (int s = 0; s <= max_letter; ++s) {
        GroupWord next = mul(t.nodes[k], static_cast<Letter>(s));
        auto it = seen.find(next);
        if (it == seen.end() || it->second) continue;
        it->second = true;
        t.nodes.push_back(std::move(next));
        t.parent.push_back(k);
        t.step.push_back(static_cast<Letter>(s));
      }
    }
    if (t.nodes.size() != domain.size()) throw InputError("pattern domain is not connected in the Cayley tree");
    return t;
  }

  std::size_t size() const { return nodes.size(); }
};

/// P(child = b | parent = a) along a tree step: via s_i it is edge(a,b;i)/vertex(a),
/// via s_i^-1 it is edge(b,a;i)/vertex(a).
template <class Scalar>
Scalar conditional(const BasicWeight<Scalar>& w, Letter step, Symbol a, Symbol b) {
  if (w.vertex[a] == Scalar(0)) return Scalar(0);
  const int i = generator_of(step);
  const Scalar& joint = is_inverse(step) ? w.at(b, a, i) : w.at(a, b, i);
  return joint / w.vertex[a];
}

/// mu([p]) for a pattern on a connected subtree: the product of edge weights
/// over tree edges times vertex(p(g))^(1 - deg(g)).
template <class Scalar>
Scalar pattern_probability(const BasicWeight<Scalar>& w, const Pattern& p) {
  std::vector<GroupWord> domain;
  for (const auto& [g, symbol] : p) {
    if (symbol >= w.symbols()) throw InputError("pattern symbol outside the weight alphabet");
    for (Letter s : g.letters()) {
      if (generator_of(s) >= w.rank) throw InputError("pattern domain uses a generator beyond the weight rank");
    }
    domain.push_back(g);
  }
  const TreeDomain t = TreeDomain::from(std::move(domain));
  Scalar prob = w.vertex[p.at(t.nodes[0])];
  for (std::size_t k = 1; k < t.size() && prob != Scalar(0); ++k) {
    prob *= conditional(w, t.step[k], p.at(t.nodes[t.parent[k]]), p.at(t.nodes[k]));
  }
  return prob;
}

struct EntropyOptions {
  unsigned threads = 1;
  std::uint64_t pattern_cap = std::uint64_t{1} << 28;  // bound on |supp(vertex)|^|D|
};

namespace detail {

inline void check_pattern_cap(std::size_t support, std::size_t nodes, std::uint64_t cap) {
  long double bound = 1.0L;
  for (std::size_t k = 0; k < nodes; ++k) bound *= static_cast<long double>(support);
  if (bound > static_cast<long double>(cap)) {
    throw ResourceError("pattern enumeration over " + std::to_string(nodes) + " sites would visit up to " +
                        std::to_string(support) + "^" + std::to_string(nodes) + " patterns, above cap " +
                        std::to_string(cap));
  }
}

struct Transition {
  Symbol to;
  double p;
  double log_p;
};

// Depth-first enumeration of all positive-probability patterns on a TreeDomain,
// carrying the probability and its logarithm incrementally.
class TreeEntropyWalker {
 public:
  TreeEntropyWalker(const Weight& w, const TreeDomain& t) : domain_(t), q_(w.symbols()) {
    moves_.resize(t.size());
    for (std::size_t k = 1; k < t.size(); ++k) {
      moves_[k].resize(q_);
      for (Symbol a = 0; a < q_; ++a) {
        for (Symbol b = 0; b < q_; ++b) {
          const double c = conditional(w, t.step[k], a, b);
          if (c > 0) moves_[k][a].push_back({b, c, std::log(c)});
        }
      }
    }
    symbols_.resize(t.size());
  }

  struct Prefix {
    std::vector<Symbol> symbols;
    double p;
    double log_p;
  };

  std::vector<Prefix> prefixes(const Weight& w, std::size_t depth) {
    std::vector<Prefix> out;
    for (Symbol a = 0; a < q_; ++a) {
      if (w.vertex[a] > 0) out.push_back({{a}, w.vertex[a], std::log(w.vertex[a])});
    }
    for (std::size_t k = 1; k < depth; ++k) {
      std::vector<Prefix> next;
      for (const Prefix& pre : out) {
        for (const Transition& m : moves_[k][pre.symbols[domain_.parent[k]]]) {
          Prefix ext = pre;
          ext.symbols.push_back(m.to);
          ext.p *= m.p;
          ext.log_p += m.log_p;
          next.push_back(std::move(ext));
        }
      }
      out = std::move(next);
    }
    return out;
  }

  // -sum p log p over completions of a prefix.
  double complete(const Prefix& pre) {
    std::copy(pre.symbols.begin(), pre.symbols.end(), symbols_.begin());
    sum_ = CompensatedSum{};
    descend(pre.symbols.size(), pre.p, pre.log_p);
    return sum_.value();
  }

 private:
  void descend(std::size_t k, double p, double log_p) {
    if (k == domain_.size()) {
      sum_.add(-p * log_p);
      return;
    }
    const auto& options = moves_[k][symbols_[domain_.parent[k]]];
    if (k + 1 == domain_.size()) {
      double leaf = 0.0;
      for (const Transition& m : options) {
        const double pp = p * m.p;
        leaf -= pp * (log_p + m.log_p);
      }
      sum_.add(leaf);
      return;
    }
    for (const Transition& m : options) {
      symbols_[k] = m.to;
      descend(k + 1, p * m.p, log_p + m.log_p);
    }
  }

  const TreeDomain& domain_;
  std::size_t q_;
  std::vector<std::vector<std::vector<Transition>>> moves_;  // [node][parent symbol]
  std::vector<Symbol> symbols_;
  CompensatedSum sum_;
};

}  // namespace detail

/// Shannon entropy (nats) of the Markov marginal on a connected domain, by
/// exhaustive pattern enumeration. The sum is split into fixed prefix chunks
/// reduced in order, so the result does not depend on `threads`.
inline double tree_entropy(const Weight& w, const TreeDomain& t, const EntropyOptions& options = {}) {
  std::size_t support = 0;
  for (double v : w.vertex) support += v > 0 ? 1 : 0;
  detail::check_pattern_cap(support, t.size(), options.pattern_cap);

  detail::TreeEntropyWalker root(w, t);
  std::size_t depth = 1;
  for (double chunks = static_cast<double>(support); chunks < 256 && depth < t.size(); ++depth) {
    chunks *= static_cast<double>(std::max<std::size_t>(support, 1));
  }
  const auto prefixes = root.prefixes(w, depth);
  std::vector<double> partial(prefixes.size(), 0.0);
  const unsigned threads = std::max(1u, options.threads);
  const std::size_t workers = std::min<std::size_t>(threads, std::max<std::size_t>(prefixes.size(), 1));
  parallel_for(workers, threads, [&](std::size_t worker) {
    detail::TreeEntropyWalker walker(w, t);
    for (std::size_t k = worker; k < prefixes.size(); k += workers) partial[k] = walker.complete(prefixes[k]);
  });
  CompensatedSum total;
  for (double x : partial) total.add(x);
  return total.value();
}

/// -sum p log p with 0 log 0 = 0.
inline double shannon_entropy(const std::vector<double>& p) {
  CompensatedSum h;
  for (double x : p) {
    if (x > 0) h.add(-x * std::log(x));
  }
  return h.value();
}

inline double shannon_entropy(const PatternDistribution& d) {
  CompensatedSum h;
  for (const auto& [key, x] : d.mass) {
    if (x > 0) h.add(-x * std::log(x));
  }
  return h.value();
}

inline LogLinear shannon_entropy_exact(const BasicPatternDistribution<Rational>& d) {
  LogLinear h;
  for (const auto& [key, x] : d.mass) h += LogLinear::entropy_term(x);
  return h;
}

/// B(e, rho) and, per generator, the union B(e, rho) u s_i B(e, rho).
inline std::vector<std::vector<GroupWord>> join_domains(const FreeGroup& group, int rho) {
  const Ball ball = group.ball(rho);
  std::vector<std::vector<GroupWord>> out{ball.words};
  for (int i = 0; i < group.rank(); ++i) {
    std::vector<GroupWord> joined = ball.words;
    const GroupWord s = GroupWord::from_reduced({generator_letter(i)});
    for (const auto& g : ball.words) joined.push_back(mul(s, g));
    out.push_back(make_window(std::move(joined)));
  }
  return out;
}

/// F(T, phi^{B_rho}) = (1 - 2r) H(B_rho) + sum_i H(B_rho u s_i B_rho).
inline EntropyValue F_value(const Weight& w, int rho, const EntropyOptions& options = {}) {
  if (rho < 0) throw InputError("join radius must be non-negative");
  const FreeGroup group(w.rank);
  const auto domains = join_domains(group, rho);
  CompensatedSum f;
  f.add((1.0 - 2.0 * w.rank) * tree_entropy(w, TreeDomain::from(domains[0]), options));
  for (std::size_t i = 1; i < domains.size(); ++i) f.add(tree_entropy(w, TreeDomain::from(domains[i]), options));
  return {f.value()};
}

/// Every positive-probability pattern on `window` (which must be connected), keyed in window order.
template <class Scalar>
BasicPatternDistribution<Scalar> marginal(const BasicWeight<Scalar>& w, const Window& window,
                                          std::uint64_t pattern_cap = 10'000'000) {
  const Window sorted = make_window(window);
  const TreeDomain t = TreeDomain::from(sorted);
  std::size_t support = 0;
  for (const auto& v : w.vertex) support += Scalar(0) < v ? 1 : 0;
  detail::check_pattern_cap(support, t.size(), pattern_cap);

  std::vector<std::size_t> position(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    position[k] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t.nodes[k]) - sorted.begin());
  }
  BasicPatternDistribution<Scalar> out;
  out.window = sorted;
  PatternKey key(t.size());
  std::vector<Symbol> symbols(t.size());
  auto descend = [&](auto&& self, std::size_t k, const Scalar& p) -> void {
    if (k == t.size()) {
      for (std::size_t j = 0; j < t.size(); ++j) key[position[j]] = symbols[j];
      out.mass.emplace(key, p);
      return;
    }
    for (Symbol b = 0; b < w.symbols(); ++b) {
      const Scalar c = conditional(w, t.step[k], symbols[t.parent[k]], b);
      if (c == Scalar(0)) continue;
      symbols[k] = b;
      self(self, k + 1, Scalar(p * c));
    }
  };
  for (Symbol a = 0; a < w.symbols(); ++a) {
    if (w.vertex[a] == Scalar(0)) continue;
    symbols[0] = a;
    descend(descend, 1, w.vertex[a]);
  }
  return out;
}

/// Exact F value as a Q-linear combination of logarithms.
inline LogLinear F_value_exact(const ExactWeight& w, int rho, std::uint64_t pattern_cap = std::uint64_t{1} << 16) {
  if (rho < 0) throw InputError("join radius must be non-negative");
  const FreeGroup group(w.rank);
  const auto domains = join_domains(group, rho);
  LogLinear f = shannon_entropy_exact(marginal(w, domains[0], pattern_cap)) * Rational(1 - 2 * w.rank);
  for (std::size_t i = 1; i < domains.size(); ++i) f += shannon_entropy_exact(marginal(w, domains[i], pattern_cap));
  return f;
}

/// For a Markov measure f = F at every join radius; the radius-0 value is returned.
inline EntropyValue f_markov(const Weight& w, const EntropyOptions& options = {}) { return F_value(w, 0, options); }
inline LogLinear f_markov_exact(const ExactWeight& w) { return F_value_exact(w, 0); }

struct ConstancyReport {
  std::vector<double> values;  // F_value(W, rho) for rho = 0..rho_max
  double max_deviation = 0.0;
  double tolerance = 1e-9;
  bool constant() const { return max_deviation <= tolerance; }
};

inline ConstancyReport constancy_check(const Weight& w, int rho_max, const EntropyOptions& options = {},
                                       double tolerance = 1e-9) {
  ConstancyReport report;
  report.tolerance = tolerance;
  for (int rho = 0; rho <= rho_max; ++rho) {
    report.values.push_back(F_value(w, rho, options).value);
    report.max_deviation = std::max(report.max_deviation, std::abs(report.values.back() - report.values.front()));
  }
  return report;
}

/// Weight on the alphabet of B(e, m)-patterns built from marginals on B(e, m+1):
/// vertex is the B(e, m) marginal, edge(c, c'; i) the mass of the pattern on
/// B(e, m) u s_i B(e, m) reading c at e and c' at s_i. Only patterns in the
/// support become symbols; names list base symbols in shortlex-domain order.
template <class Scalar>
BasicWeight<Scalar> markovize(const BasicPatternDistribution<Scalar>& d, const FreeGroup& group,
                              std::optional<Alphabet> base = std::nullopt, double tolerance = 1e-12) {
  std::size_t radius = 0;
  for (const auto& g : d.window) radius = std::max(radius, g.length());
  if (radius == 0) throw InputError("markovize needs marginals on B(e, m+1) with m >= 0");
  const int m = static_cast<int>(radius) - 1;
  if (d.window != group.ball(m + 1).words) throw InputError("markovize input window is not a ball");
  validate_distribution(d);

  const Window inner = group.ball(m).words;
  const auto vertex_marginal = project(d, inner);
  std::vector<PatternKey> keys;
  for (const auto& [key, p] : vertex_marginal.mass) {
    if (Scalar(0) < p) keys.push_back(key);
  }
  Symbol max_symbol = 0;
  for (const auto& [key, p] : d.mass) {
    for (Symbol s : key) max_symbol = std::max(max_symbol, s);
  }
  const Alphabet base_names = base ? *base : Alphabet::numbered(max_symbol + 1);
  std::vector<std::string> names;
  for (const auto& key : keys) {
    std::string name;
    for (std::size_t j = 0; j < key.size(); ++j) name += (j ? "," : "") + base_names.name(key[j]);
    names.push_back(name);
  }
  auto symbol_of = [&](const PatternKey& key) -> std::optional<Symbol> {
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) return std::nullopt;
    return static_cast<Symbol>(it - keys.begin());
  };

  auto w = BasicWeight<Scalar>::zeros(group.rank(), Alphabet(std::move(names)));
  for (std::size_t c = 0; c < keys.size(); ++c) w.vertex[c] = vertex_marginal.mass.at(keys[c]);

  for (int i = 0; i < group.rank(); ++i) {
    const GroupWord s = GroupWord::from_reduced({generator_letter(i)});
    std::vector<GroupWord> joined = inner;
    for (const auto& g : inner) joined.push_back(mul(s, g));
    const Window window = make_window(std::move(joined));
    auto locate = [&](const GroupWord& g) {
      return static_cast<std::size_t>(std::lower_bound(window.begin(), window.end(), g) - window.begin());
    };
    std::vector<std::size_t> at_e, at_s;
    for (const auto& g : inner) {
      at_e.push_back(locate(g));
      at_s.push_back(locate(mul(s, g)));
    }
    for (const auto& [key, p] : project(d, window).mass) {
      if (!(Scalar(0) < p)) continue;
      PatternKey left(inner.size()), right(inner.size());
      for (std::size_t j = 0; j < inner.size(); ++j) {
        left[j] = key[at_e[j]];
        right[j] = key[at_s[j]];
      }
      const auto a = symbol_of(left);
      const auto b = symbol_of(right);
      if (!a || !b) throw InputError("marginals are not shift-consistent: edge pattern leaves the vertex support");
      w.at(*a, *b, i) += p;
    }
  }
  const auto issues = weight_issues(w, tolerance);
  if (!issues.empty()) throw InputError("marginals are not shift-consistent: " + issues.front());
  return w;
}

namespace detail {

// Reduced row echelon form of an augmented rational matrix; returns pivot columns.
inline std::vector<std::size_t> rref(std::vector<std::vector<Rational>>& rows, std::size_t columns) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < columns && r < rows.size(); ++c) {
    std::size_t pick = r;
    while (pick < rows.size() && rows[pick][c] == 0) ++pick;
    if (pick == rows.size()) continue;
    std::swap(rows[r], rows[pick]);
    const Rational lead = rows[r][c];
    for (auto& x : rows[r]) x /= lead;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (k == r || rows[k][c] == 0) continue;
      const Rational factor = rows[k][c];
      for (std::size_t j = c; j < rows[k].size(); ++j) rows[k][j] -= factor * rows[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

inline std::optional<ExactWeight> as_exact(const Weight& w, std::uint64_t max_den) {
  auto exact = ExactWeight::zeros(w.rank, w.alphabet);
  auto convert = [&](double x, Rational& out) {
    out = best_rational(x, max_den);
    return std::abs(to_double(out) - x) <= 1e-12;
  };
  for (std::size_t k = 0; k < w.vertex.size(); ++k) {
    if (!convert(w.vertex[k], exact.vertex[k])) return std::nullopt;
  }
  for (std::size_t k = 0; k < w.edge.size(); ++k) {
    if (!convert(w.edge[k], exact.edge[k])) return std::nullopt;
  }
  if (!weight_issues(exact).empty()) return std::nullopt;
  return exact;
}

}  // namespace detail

/// Exactly Balanced/Normalized weight with denominators <= q near `w`, keeping
/// every zero entry (and so any nearest-neighbour support) in place.
///
/// Balance and normalization are solved exactly over the support; coordinates
/// left free by the row reduction are rounded to the grid 1/q0, q0 = floor(q/L),
/// where L is the lcm of the reduced system's denominators.
inline ExactWeight rationalize_weight(const Weight& w, std::uint64_t q, const EdgeMask* support = nullptr) {
  validate_weight(w, 1e-9);
  if (q == 0) throw InputError("denominator bound must be positive");
  if (support) {
    if (support->size() != w.edge.size()) throw InputError("support mask does not match weight shape");
    for (std::size_t k = 0; k < w.edge.size(); ++k) {
      if (!(*support)[k] && w.edge[k] != 0.0) throw InputError("weight is not a Y-weight: mass on a forbidden edge");
    }
  }
  if (auto exact = detail::as_exact(w, q)) return *exact;

  const std::size_t qa = w.symbols();
  std::vector<std::size_t> vars;  // edge indices with positive mass
  for (std::size_t k = 0; k < w.edge.size(); ++k) {
    if (w.edge[k] > 0) vars.push_back(k);
  }
  std::stable_sort(vars.begin(), vars.end(), [&](std::size_t x, std::size_t y) { return w.edge[x] > w.edge[y]; });
  std::vector<std::size_t> column(w.edge.size(), vars.size());
  for (std::size_t c = 0; c < vars.size(); ++c) column[vars[c]] = c;

  // vertex(a) := sum_b edge(a,b;1); every other row/column sum must match it, and the vertices sum to 1.
  std::vector<std::vector<Rational>> rows;
  auto blank = [&] { return std::vector<Rational>(vars.size() + 1, Rational(0)); };
  auto add = [&](std::vector<Rational>& row, std::size_t edge, int sign) {
    if (column[edge] < vars.size()) row[column[edge]] += sign;
  };
  for (int i = 0; i < w.rank; ++i) {
    for (Symbol a = 0; a < qa; ++a) {
      auto row_sum = blank();
      auto col_sum = blank();
      for (Symbol b = 0; b < qa; ++b) {
        add(row_sum, w.edge_index(a, b, i), 1);
        add(col_sum, w.edge_index(b, a, i), 1);
        add(row_sum, w.edge_index(a, b, 0), -1);
        add(col_sum, w.edge_index(a, b, 0), -1);
      }
      if (i > 0) rows.push_back(std::move(row_sum));
      rows.push_back(std::move(col_sum));
    }
  }
  auto norm = blank();
  for (Symbol a = 0; a < qa; ++a) {
    for (Symbol b = 0; b < qa; ++b) add(norm, w.edge_index(a, b, 0), 1);
  }
  norm.back() = 1;
  rows.push_back(std::move(norm));

  const auto pivots = detail::rref(rows, vars.size());
  for (std::size_t r = pivots.size(); r < rows.size(); ++r) {
    if (rows[r].back() != 0) throw InputError("balance equations are inconsistent on this support");
  }
  std::vector<bool> is_pivot(vars.size(), false);
  for (std::size_t c : pivots) is_pivot[c] = true;

  BigInt lcm = 1;
  for (std::size_t r = 0; r < pivots.size(); ++r) {
    for (const Rational& x : rows[r]) lcm = boost::multiprecision::lcm(lcm, denominator(x));
  }
  const BigInt q0 = BigInt(q) / lcm;
  if (q0 == 0) {
    throw InputError("denominator bound " + std::to_string(q) + " is below the lcm " + lcm.str() +
                     " of the reduced balance system");
  }

  std::vector<Rational> value(vars.size(), Rational(0));
  for (std::size_t c = 0; c < vars.size(); ++c) {
    if (is_pivot[c]) continue;
    const double scaled = w.edge[vars[c]] * q0.convert_to<double>();
    value[c] = Rational(BigInt(static_cast<std::int64_t>(std::llround(std::max(0.0, scaled)))), q0);
  }
  for (std::size_t r = 0; r < pivots.size(); ++r) {
    Rational x = rows[r].back();
    for (std::size_t c = 0; c < vars.size(); ++c) {
      if (!is_pivot[c] && rows[r][c] != 0) x -= rows[r][c] * value[c];
    }
    value[pivots[r]] = x;
  }

  auto out = ExactWeight::zeros(w.rank, w.alphabet);
  for (std::size_t c = 0; c < vars.size(); ++c) {
    const std::size_t k = vars[c];
    if (value[c] < 0 || value[c] > 1) {
      const std::size_t i = k / (qa * qa);
      const std::size_t a = (k / qa) % qa;
      const std::size_t b = k % qa;
      throw InputError("no rational weight with denominator <= " + std::to_string(q) + " on this grid: edge(" +
                       w.alphabet.name(static_cast<Symbol>(a)) + "," + w.alphabet.name(static_cast<Symbol>(b)) +
                       ";" + std::to_string(i + 1) + ") would be " + to_string(value[c]));
    }
    out.edge[k] = value[c];
  }
  for (Symbol a = 0; a < qa; ++a) {
    for (Symbol b = 0; b < qa; ++b) out.vertex[a] += out.at(a, b, 0);
  }
  validate_weight(out);
  return out;
}

}  // namespace fsofic
