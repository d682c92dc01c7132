#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "fsofic/action.hpp"
#include "fsofic/error.hpp"
#include "fsofic/free_group.hpp"
#include "fsofic/random.hpp"
#include "fsofic/shift_space.hpp"

namespace fsofic {

/// A_rho: maps S u S^-1 -> B(e, rho), encoded in mixed radix |B(e, rho)|
/// with the image of letter 0 (a) as the least significant digit.
class OrbitAlphabet {
 public:
  OrbitAlphabet(const FreeGroup& group, int rho) : rank_(group.rank()), rho_(rho), ball_(group.ball(rho)) {
    if (rho < 1) throw InputError("orbit alphabet needs rho >= 1");
    long double total = 1.0L;
    for (int s = 0; s < group.letter_count(); ++s) total *= static_cast<long double>(ball_.size());
    if (total > 4e9L) throw ResourceError("orbit alphabet |B(e,rho)|^(2r) does not fit 32-bit symbols");
    size_ = static_cast<std::size_t>(total);
  }

  int rank() const { return rank_; }
  int rho() const { return rho_; }
  const Ball& ball() const { return ball_; }
  std::size_t size() const { return size_; }

  /// x(s): the image of letter s under the symbol.
  const GroupWord& entry(Symbol x, Letter s) const {
    std::size_t rest = x;
    for (Letter k = 0; k < s; ++k) rest /= ball_.size();
    return ball_.words[rest % ball_.size()];
  }

  /// Symbol with the given image per letter (in letter order); every image must lie in B(e, rho).
  Symbol encode(const std::vector<GroupWord>& images) const {
    if (images.size() != static_cast<std::size_t>(2 * rank_)) throw InputError("orbit symbol needs 2r images");
    std::size_t code = 0;
    for (std::size_t s = images.size(); s-- > 0;) {
      if (images[s].length() > static_cast<std::size_t>(rho_)) {
        throw InputError("orbit symbol entry exceeds displacement bound rho = " + std::to_string(rho_));
      }
      code = code * ball_.size() + ball_.index_of(images[s]);
    }
    return static_cast<Symbol>(code);
  }

  /// The symbol s -> s of the identity orbit map.
  Symbol identity_symbol() const {
    std::vector<GroupWord> images;
    for (int s = 0; s < 2 * rank_; ++s) images.push_back(GroupWord::from_reduced({static_cast<Letter>(s)}));
    return encode(images);
  }

  /// "b,B,a,A": images in letter order, identity written "e".
  std::string format(const FreeGroup& group, Symbol x) const {
    std::string out;
    for (int s = 0; s < 2 * rank_; ++s) {
      if (s) out += ",";
      out += group.display(entry(x, static_cast<Letter>(s)));
    }
    return out;
  }

  Symbol parse(const FreeGroup& group, const std::string& text) const {
    std::vector<GroupWord> images;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = text.find(',', start);
      const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      images.push_back(part == "e" ? GroupWord{} : group.parse(part));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return encode(images);
  }

 private:
  int rank_;
  int rho_;
  Ball ball_;
  std::size_t size_;
};

/// Read access to a configuration around a base point: a cursor stands for a
/// group element g, step(c, s) moves to g s, and symbol(c) reads the label at g
/// (nullopt when it is outside the known part of the configuration).
template <class C>
concept ConfigAccessor = requires(const C& config, const typename C::Cursor& cursor, Letter s) {
  { config.root() } -> std::convertible_to<typename C::Cursor>;
  { config.step(cursor, s) } -> std::convertible_to<typename C::Cursor>;
  { config.symbol(cursor) } -> std::convertible_to<std::optional<Symbol>>;
};

/// A finite pattern read directly: the cursor is the group element itself.
class PatternConfig {
 public:
  using Cursor = GroupWord;
  explicit PatternConfig(const Pattern& pattern) : pattern_(&pattern) {}

  Cursor root() const { return {}; }
  Cursor step(const Cursor& g, Letter s) const { return mul(g, s); }
  std::optional<Symbol> symbol(const Cursor& g) const {
    auto it = pattern_->find(g);
    if (it == pattern_->end()) return std::nullopt;
    return it->second;
  }

 private:
  const Pattern* pattern_;
};

/// The pullback name x^sigma_v read lazily: the cursor for g is the vertex sigma(g)^-1 v.
/// With an `assigned` mask, unassigned vertices read as unknown.
class PullbackConfig {
 public:
  using Cursor = Vertex;
  PullbackConfig(const FiniteAction& sigma, const Labeling& x, Vertex v, const std::vector<bool>* assigned = nullptr)
      : sigma_(&sigma), x_(&x), v_(v), assigned_(assigned) {}

  Cursor root() const { return v_; }
  Cursor step(Cursor u, Letter s) const { return sigma_->act(inverse_letter(s), u); }
  std::optional<Symbol> symbol(Cursor u) const {
    if (assigned_ && !(*assigned_)[u]) return std::nullopt;
    return (*x_)[u];
  }

 private:
  const FiniteAction* sigma_;
  const Labeling* x_;
  Vertex v_;
  const std::vector<bool>* assigned_;
};

enum class Verdict { kPass, kFail, kUnknown };

enum class AxiomFailure {
  kNone,
  kAxiom1,             // z_e(s) z_s(s^-1) != e
  kMissingWitness,     // no sequence reaches h
  kDuplicateWitness,   // two sequences reach h
  kLooseWitness,       // the unique sequence is longer than rho |h|
  kSymbolOutOfRange,
};

inline const char* to_string(AxiomFailure f) {
  switch (f) {
    case AxiomFailure::kNone: return "none";
    case AxiomFailure::kAxiom1: return "axiom-1";
    case AxiomFailure::kMissingWitness: return "axiom-2-missing-witness";
    case AxiomFailure::kDuplicateWitness: return "axiom-2-duplicate-witness";
    case AxiomFailure::kLooseWitness: return "axiom-2-loose-witness";
    case AxiomFailure::kSymbolOutOfRange: return "symbol-out-of-range";
  }
  return "unknown";
}

struct AxiomReport {
  Verdict verdict = Verdict::kPass;
  AxiomFailure failure = AxiomFailure::kNone;
  std::string detail;
  std::vector<std::pair<GroupWord, GroupWord>> witnesses;  // (h, s_1...s_n), filled on request

  bool passed() const { return verdict == Verdict::kPass; }
};

/// Axioms 1 and 2 of Z_rho at the base point of `config`.
///
/// Axiom 2 enumerates every reduced word s_1...s_n with n <= rho^2 + 1, forms
/// z_e(s_1) z_{s_1}(s_2) ... z_{s_1...s_{n-1}}(s_n), and requires each h in
/// B(e, rho) to be reached by exactly one such word, of length <= rho |h|.
/// Unknown symbols give kUnknown unless a definite failure is already found.
template <ConfigAccessor C>
AxiomReport axioms_check(const OrbitAlphabet& alphabet, const C& config, bool collect_witnesses = false) {
  using Cursor = typename C::Cursor;
  const int rho = alphabet.rho();
  const int letters = 2 * alphabet.rank();
  const Ball& target = alphabet.ball();
  AxiomReport report;
  bool unknown = false;
  const FreeGroup group(alphabet.rank());

  auto read = [&](const Cursor& c) -> std::optional<Symbol> {
    auto sym = config.symbol(c);
    if (sym && *sym >= alphabet.size()) {
      throw InputError("orbit symbol " + std::to_string(*sym) + " outside A_rho");
    }
    return sym;
  };
  auto fail = [&](AxiomFailure f, std::string detail) {
    report.verdict = Verdict::kFail;
    report.failure = f;
    report.detail = std::move(detail);
    return report;
  };

  const Cursor root = config.root();
  const auto at_e = read(root);
  for (int s = 0; s < letters; ++s) {
    const Letter letter = static_cast<Letter>(s);
    const auto at_s = read(config.step(root, letter));
    if (!at_e || !at_s) {
      unknown = true;
      continue;
    }
    const GroupWord product = mul(alphabet.entry(*at_e, letter), alphabet.entry(*at_s, inverse_letter(letter)));
    if (!product.is_identity()) {
      return fail(AxiomFailure::kAxiom1, "z_e(" + std::string(1, group.letter_char(letter)) + ") z_" +
                                             group.letter_char(letter) + "(" +
                                             group.letter_char(inverse_letter(letter)) + ") = " +
                                             group.display(product));
    }
  }

  const std::size_t max_length = static_cast<std::size_t>(rho * rho + 1);
  std::vector<int> hits(target.size(), 0);
  std::vector<GroupWord> first(target.size());
  std::vector<Letter> path;
  auto visit = [&](auto&& self, const Cursor& cursor, const GroupWord& product) -> void {
    if (product.length() <= static_cast<std::size_t>(rho)) {
      const std::size_t h = target.index_of(product);
      if (hits[h]++ == 0) first[h] = GroupWord::from_reduced(path);
    }
    if (path.size() == max_length) return;
    const auto sym = read(cursor);
    if (!sym) {
      unknown = true;
      return;
    }
    for (int s = 0; s < letters; ++s) {
      const Letter letter = static_cast<Letter>(s);
      if (!path.empty() && path.back() == inverse_letter(letter)) continue;
      path.push_back(letter);
      self(self, config.step(cursor, letter), mul(product, alphabet.entry(*sym, letter)));
      path.pop_back();
    }
  };
  visit(visit, root, GroupWord{});

  for (std::size_t h = 0; h < target.size(); ++h) {
    const GroupWord& word = target.words[h];
    if (hits[h] >= 2) {
      return fail(AxiomFailure::kDuplicateWitness, "h = " + group.display(word) + " reached by " +
                                                       std::to_string(hits[h]) + " sequences");
    }
    if (hits[h] == 1 && first[h].length() > static_cast<std::size_t>(rho) * word.length()) {
      return fail(AxiomFailure::kLooseWitness, "h = " + group.display(word) + " only reached by " +
                                                   group.display(first[h]) + ", longer than rho|h|");
    }
  }
  for (std::size_t h = 0; h < target.size(); ++h) {
    if (hits[h] == 0 && !unknown) {
      return fail(AxiomFailure::kMissingWitness, "h = " + group.display(target.words[h]) + " has no witness");
    }
  }
  if (unknown) {
    report.verdict = Verdict::kUnknown;
    return report;
  }
  if (collect_witnesses) {
    for (std::size_t h = 0; h < target.size(); ++h) report.witnesses.emplace_back(target.words[h], first[h]);
  }
  return report;
}

/// Axioms on an explicit pattern, which must be defined on B(e, rho^2 + 1).
inline AxiomReport axioms_check(const OrbitAlphabet& alphabet, const Pattern& z, bool collect_witnesses = false) {
  return axioms_check(alphabet, PatternConfig(z), collect_witnesses);
}

/// A subshift of finite type, either by an explicit forbidden list or the
/// predicate-backed Z_rho = E(sym_rho(G)).
class SftSpec {
 public:
  enum class Kind { kExplicit, kZRho };

  static SftSpec explicit_spec(int rank, Alphabet alphabet, std::vector<Pattern> forbidden, bool nearest_neighbor) {
    SftSpec spec;
    spec.kind_ = Kind::kExplicit;
    spec.rank_ = rank;
    spec.alphabet_ = std::move(alphabet);
    spec.forbidden_ = std::move(forbidden);
    spec.nearest_neighbor_ = nearest_neighbor;
    const FreeGroup group(rank);
    for (const Pattern& w : spec.forbidden_) {
      if (w.empty()) throw InputError("forbidden pattern with empty domain");
      for (const auto& [g, symbol] : w) {
        group.reduce(g.letters());
        if (symbol >= spec.alphabet_.size()) throw InputError("forbidden pattern symbol outside alphabet");
        spec.radius_ = std::max(spec.radius_, static_cast<int>(g.length()));
      }
      if (nearest_neighbor) {
        const bool edge_shape = w.size() == 2 && w.begin()->first.is_identity() &&
                                std::next(w.begin())->first.length() == 1 &&
                                !is_inverse(std::next(w.begin())->first.front());
        if (!edge_shape) throw InputError("nearest-neighbour forbidden patterns must have domain {e, s_i}");
      }
    }
    if (nearest_neighbor) {
      const std::size_t q = spec.alphabet_.size();
      spec.edge_forbidden_.assign(static_cast<std::size_t>(rank) * q * q, false);
      for (const Pattern& w : spec.forbidden_) {
        const Symbol a = w.begin()->second;
        const auto& [g, b] = *std::next(w.begin());
        spec.edge_forbidden_[(static_cast<std::size_t>(generator_of(g.front())) * q + a) * q + b] = true;
      }
    }
    return spec;
  }

  static SftSpec z_rho(int rank, int rho) {
    SftSpec spec;
    spec.kind_ = Kind::kZRho;
    spec.rank_ = rank;
    spec.orbit_.emplace(FreeGroup(rank), rho);
    spec.radius_ = rho * rho;
    return spec;
  }

  /// The full shift (no forbidden patterns).
  static SftSpec full_shift(int rank, Alphabet alphabet) { return explicit_spec(rank, std::move(alphabet), {}, true); }

  Kind kind() const { return kind_; }
  int rank() const { return rank_; }
  bool nearest_neighbor() const { return kind_ == Kind::kExplicit && nearest_neighbor_; }
  const std::vector<Pattern>& forbidden() const { return forbidden_; }
  const Alphabet& alphabet() const { return alphabet_; }
  const OrbitAlphabet& orbit_alphabet() const { return *orbit_; }
  int rho() const { return orbit_ ? orbit_->rho() : 0; }
  std::size_t alphabet_size() const { return kind_ == Kind::kZRho ? orbit_->size() : alphabet_.size(); }

  /// Largest |g| at which a local check reads the configuration.
  int radius() const { return radius_; }

  /// True if edge (a at g, b at g s_{i+1}) is forbidden; nearest-neighbour specs only.
  bool edge_forbidden(Symbol a, Symbol b, int i) const {
    const std::size_t q = alphabet_.size();
    return edge_forbidden_[(static_cast<std::size_t>(i) * q + a) * q + b];
  }

  /// Allowed-edge mask shaped like a weight's edge table (for Y-weights).
  std::vector<bool> allowed_edges() const {
    if (!nearest_neighbor()) throw InputError("allowed-edge mask needs a nearest-neighbour spec");
    std::vector<bool> mask(edge_forbidden_.size());
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = !edge_forbidden_[k];
    return mask;
  }

 private:
  Kind kind_ = Kind::kExplicit;
  int rank_ = 1;
  Alphabet alphabet_;
  std::vector<Pattern> forbidden_;
  bool nearest_neighbor_ = false;
  std::vector<bool> edge_forbidden_;
  std::optional<OrbitAlphabet> orbit_;
  int radius_ = 0;
};

/// Whether the base point of `config` sees no forbidden pattern at e.
template <ConfigAccessor C>
Verdict local_check(const SftSpec& spec, const C& config) {
  if (spec.kind() == SftSpec::Kind::kZRho) return axioms_check(spec.orbit_alphabet(), config).verdict;
  bool unknown = false;
  for (const Pattern& w : spec.forbidden()) {
    bool matches = true;
    bool partial = false;
    for (const auto& [g, symbol] : w) {
      auto cursor = config.root();
      for (Letter s : g.letters()) cursor = config.step(cursor, s);
      const auto seen = config.symbol(cursor);
      if (!seen) {
        partial = true;
      } else if (*seen != symbol) {
        matches = false;
        break;
      }
    }
    if (matches && !partial) return Verdict::kFail;
    if (matches && partial) unknown = true;
  }
  return unknown ? Verdict::kUnknown : Verdict::kPass;
}

namespace detail {

inline void check_shapes(const SftSpec& spec, const FiniteAction& sigma, const Labeling& x) {
  if (x.size() != sigma.size()) throw InputError("labeling and action disagree on n");
  if (sigma.rank() != spec.rank()) throw InputError("action rank does not match the SFT");
  for (Symbol s : x) {
    if (s >= spec.alphabet_size()) throw InputError("label outside the SFT alphabet");
  }
}

}  // namespace detail

/// Local check at every vertex, i.e. x^sigma_u in Z for all u.
inline bool sft_check_all_general(const SftSpec& spec, const FiniteAction& sigma, const Labeling& x) {
  detail::check_shapes(spec, sigma, x);
  for (Vertex u = 0; u < sigma.size(); ++u) {
    if (local_check(spec, PullbackConfig(sigma, x, u)) != Verdict::kPass) return false;
  }
  return true;
}

/// Nearest-neighbour path: each Schreier edge u -> sigma(s_i)^-1 u is inspected once.
inline bool sft_check_all_nearest_neighbor(const SftSpec& spec, const FiniteAction& sigma, const Labeling& x) {
  if (!spec.nearest_neighbor()) throw InputError("nearest-neighbour check on a general SFT");
  detail::check_shapes(spec, sigma, x);
  for (int i = 0; i < sigma.rank(); ++i) {
    const Letter back = inverse_letter(generator_letter(i));
    for (Vertex u = 0; u < sigma.size(); ++u) {
      if (spec.edge_forbidden(x[u], x[sigma.act(back, u)], i)) return false;
    }
  }
  return true;
}

inline bool sft_check_all(const SftSpec& spec, const FiniteAction& sigma, const Labeling& x) {
  return spec.nearest_neighbor() ? sft_check_all_nearest_neighbor(spec, sigma, x) : sft_check_all_general(spec, sigma, x);
}

/// x^sigma_v in Z: no shift of a forbidden pattern occurs in the pullback name,
/// i.e. the local check passes on the whole sigma-orbit of v.
inline bool sft_check_vertex(const SftSpec& spec, const FiniteAction& sigma, const Labeling& x, Vertex v) {
  detail::check_shapes(spec, sigma, x);
  if (v >= sigma.size()) throw InputError("vertex out of range");
  std::vector<bool> seen(sigma.size(), false);
  std::deque<Vertex> queue{v};
  seen[v] = true;
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    if (local_check(spec, PullbackConfig(sigma, x, u)) != Verdict::kPass) return false;
    for (int s = 0; s < 2 * sigma.rank(); ++s) {
      const Vertex w = sigma.act(static_cast<Letter>(s), u);
      if (!seen[w]) {
        seen[w] = true;
        queue.push_back(w);
      }
    }
  }
  return true;
}

/// Vertices in breadth-first order over the Schreier graph, starting at 0 and
/// continuing from the least unvisited vertex.
inline std::vector<Vertex> schreier_bfs_order(const FiniteAction& sigma) {
  std::vector<Vertex> order;
  std::vector<bool> seen(sigma.size(), false);
  for (Vertex start = 0; start < sigma.size(); ++start) {
    if (seen[start]) continue;
    seen[start] = true;
    std::size_t head = order.size();
    order.push_back(start);
    while (head < order.size()) {
      const Vertex u = order[head++];
      for (int s = 0; s < 2 * sigma.rank(); ++s) {
        const Vertex w = sigma.act(static_cast<Letter>(s), u);
        if (!seen[w]) {
          seen[w] = true;
          order.push_back(w);
        }
      }
    }
  }
  return order;
}

struct SamplerOptions {
  std::uint64_t budget = 1'000'000;    // symbol assignments per attempt
  unsigned restarts = 1;               // attempts, each with a derived seed
  std::optional<Symbol> hint;          // tried first at every vertex
};

/// Backtracking search for x with sft_check_all(spec, sigma, x). Vertices are
/// filled in Schreier BFS order; each vertex tries its symbols in an order
/// shuffled by (seed, attempt, vertex). Returns nullopt once the budget of
/// every attempt is spent or the search space is exhausted.
inline std::optional<Labeling> sample_sft_config(const SftSpec& spec, const FiniteAction& sigma, std::uint64_t seed,
                                                 const SamplerOptions& options = {}) {
  if (sigma.rank() != spec.rank()) throw InputError("action rank does not match the SFT");
  const std::size_t n = sigma.size();
  const std::size_t q = spec.alphabet_size();
  if (options.hint && *options.hint >= q) throw InputError("hint symbol outside the alphabet");
  const auto order = schreier_bfs_order(sigma);

  // Vertices whose local check can read u: sigma(g) u for |g| <= radius.
  const FreeGroup group(spec.rank());
  const Ball reach = group.ball(spec.radius());
  std::vector<std::vector<Vertex>> watchers(n);
  for (Vertex u = 0; u < n; ++u) {
    for (const auto& g : reach.words) watchers[u].push_back(sigma.act(g, u));
    std::sort(watchers[u].begin(), watchers[u].end());
    watchers[u].erase(std::unique(watchers[u].begin(), watchers[u].end()), watchers[u].end());
  }

  for (unsigned attempt = 0; attempt < std::max(1u, options.restarts); ++attempt) {
    const std::uint64_t attempt_seed = derive_seed(seed, attempt);
    std::vector<std::vector<Symbol>> candidates(n);
    auto candidates_for = [&](Vertex u) -> const std::vector<Symbol>& {
      auto& list = candidates[u];
      if (list.empty()) {
        list.resize(q);
        for (std::size_t k = 0; k < q; ++k) list[k] = static_cast<Symbol>(k);
        Engine rng(derive_seed(attempt_seed, u));
        shuffle(list, rng);
        if (options.hint) std::iter_swap(list.begin(), std::find(list.begin(), list.end(), *options.hint));
      }
      return list;
    };

    Labeling x(n, 0);
    std::vector<bool> assigned(n, false);
    std::vector<std::size_t> next(n, 0);
    std::uint64_t budget = options.budget;
    std::size_t depth = 0;
    bool exhausted = false;
    while (depth < n) {
      const Vertex u = order[depth];
      const auto& list = candidates_for(u);
      if (next[depth] == list.size()) {
        assigned[u] = false;
        next[depth] = 0;
        if (depth == 0) {
          exhausted = true;
          break;
        }
        --depth;
        ++next[depth];
        continue;
      }
      if (budget-- == 0) break;
      x[u] = list[next[depth]];
      assigned[u] = true;
      bool ok = true;
      for (Vertex w : watchers[u]) {
        if (local_check(spec, PullbackConfig(sigma, x, w, &assigned)) == Verdict::kFail) {
          ok = false;
          break;
        }
      }
      if (ok) {
        ++depth;
      } else {
        assigned[u] = false;
        ++next[depth];
      }
    }
    if (depth == n && sft_check_all(spec, sigma, x)) return x;
    if (exhausted) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace fsofic
