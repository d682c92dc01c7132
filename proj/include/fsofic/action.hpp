#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fsofic/error.hpp"
#include "fsofic/free_group.hpp"
#include "fsofic/random.hpp"

namespace fsofic {

using Vertex = std::uint32_t;
using Symbol = std::uint32_t;
using Labeling = std::vector<Symbol>;
using Permutation = std::vector<Vertex>;

/// A homomorphism sigma: G -> Sym(n), stored as the images of the r free generators.
class FiniteAction {
 public:
  FiniteAction() = default;

  explicit FiniteAction(std::vector<Permutation> generators) : forward_(std::move(generators)) {
    if (forward_.empty()) throw InputError("finite action needs at least one generator");
    const std::size_t n = forward_.front().size();
    if (n == 0) throw InputError("finite action needs n >= 1");
    inverse_.resize(forward_.size());
    for (std::size_t i = 0; i < forward_.size(); ++i) {
      const Permutation& p = forward_[i];
      if (p.size() != n) throw InputError("generator permutations must share n");
      Permutation q(n, static_cast<Vertex>(n));
      for (Vertex v = 0; v < n; ++v) {
        if (p[v] >= n || q[p[v]] != n) {
          throw InputError("generator " + std::to_string(i + 1) + " is not a bijection of [n]");
        }
        q[p[v]] = v;
      }
      inverse_[i] = std::move(q);
    }
  }

  /// The trivial action (all generators act as the identity).
  static FiniteAction identity(std::size_t n, int rank) {
    Permutation id(n);
    std::iota(id.begin(), id.end(), Vertex{0});
    return FiniteAction(std::vector<Permutation>(static_cast<std::size_t>(rank), id));
  }

  std::size_t size() const { return forward_.empty() ? 0 : forward_.front().size(); }
  int rank() const { return static_cast<int>(forward_.size()); }
  const Permutation& generator(int i) const { return forward_.at(static_cast<std::size_t>(i)); }
  const std::vector<Permutation>& generators() const { return forward_; }

  /// sigma(s) v for a single letter.
  Vertex act(Letter s, Vertex v) const {
    const auto i = static_cast<std::size_t>(generator_of(s));
    return is_inverse(s) ? inverse_[i][v] : forward_[i][v];
  }

  /// sigma(g) v; the rightmost letter acts first.
  Vertex act(const GroupWord& g, Vertex v) const {
    auto letters = g.letters();
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) v = act(*it, v);
    return v;
  }

  /// sigma(g)^-1 v.
  Vertex act_inverse(const GroupWord& g, Vertex v) const {
    for (Letter s : g.letters()) v = act(inverse_letter(s), v);
    return v;
  }

  friend bool operator==(const FiniteAction& a, const FiniteAction& b) { return a.forward_ == b.forward_; }

 private:
  std::vector<Permutation> forward_;
  std::vector<Permutation> inverse_;
};

/// A labeling x: [n] -> A, optionally paired with a second labeling y: [n] -> B.
struct Microstate {
  Labeling x;
  Labeling y;  // empty when unpaired

  bool paired() const { return !y.empty(); }
};

/// Uniform element of Hom(G, Sym(n)): one Fisher-Yates shuffle per generator.
inline FiniteAction sample_action(std::size_t n, int rank, std::uint64_t seed) {
  if (n == 0 || rank < 1) throw InputError("sample_action needs n >= 1 and rank >= 1");
  Engine rng(seed);
  std::vector<Permutation> gens(static_cast<std::size_t>(rank), Permutation(n));
  for (auto& p : gens) {
    std::iota(p.begin(), p.end(), Vertex{0});
    shuffle(p, rng);
  }
  return FiniteAction(std::move(gens));
}

/// (n!)^r, saturating at UINT64_MAX.
inline std::uint64_t hom_count(std::size_t n, int rank) {
  std::uint64_t factorial = 1;
  for (std::size_t k = 2; k <= n; ++k) {
    if (factorial > std::numeric_limits<std::uint64_t>::max() / k) return std::numeric_limits<std::uint64_t>::max();
    factorial *= k;
  }
  std::uint64_t total = 1;
  for (int i = 0; i < rank; ++i) {
    if (factorial != 0 && total > std::numeric_limits<std::uint64_t>::max() / factorial) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    total *= factorial;
  }
  return total;
}

/// All of Hom(G, Sym(n)) in lexicographic order of the generator tuple
/// (first generator slowest). Throws ResourceError above `cap` actions.
inline std::vector<FiniteAction> enumerate_actions(std::size_t n, int rank, std::uint64_t cap = 1'000'000) {
  if (n == 0 || rank < 1) throw InputError("enumerate_actions needs n >= 1 and rank >= 1");
  const std::uint64_t total = hom_count(n, rank);
  if (total > cap) {
    throw ResourceError("enumerating " + std::to_string(n) + "!^" + std::to_string(rank) +
                        " actions exceeds cap " + std::to_string(cap));
  }
  std::vector<Permutation> perms;
  Permutation p(n);
  std::iota(p.begin(), p.end(), Vertex{0});
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));

  std::vector<FiniteAction> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<std::size_t> digits(static_cast<std::size_t>(rank), 0);
  for (std::uint64_t k = 0; k < total; ++k) {
    std::vector<Permutation> gens;
    gens.reserve(digits.size());
    for (std::size_t d : digits) gens.push_back(perms[d]);
    out.emplace_back(std::move(gens));
    for (std::size_t i = digits.size(); i-- > 0;) {
      if (++digits[i] < perms.size()) break;
      digits[i] = 0;
    }
  }
  return out;
}

}  // namespace fsofic
