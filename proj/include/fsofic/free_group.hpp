#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fsofic/error.hpp"

namespace fsofic {

/// Signed generator: 2*i encodes s_{i+1}, 2*i+1 encodes its inverse.
/// Numeric order of letters is the shortlex letter order a < A < b < B < ...
using Letter = std::uint8_t;

constexpr Letter generator_letter(int index) { return static_cast<Letter>(2 * index); }
constexpr Letter inverse_letter(Letter s) { return static_cast<Letter>(s ^ 1u); }
constexpr int generator_of(Letter s) { return s >> 1; }
constexpr bool is_inverse(Letter s) { return (s & 1u) != 0; }

/// A freely reduced word in a free group; the empty word is the identity.
class GroupWord {
 public:
  GroupWord() = default;

  /// Builds from an already reduced letter sequence (unchecked in release builds).
  static GroupWord from_reduced(std::vector<Letter> letters) {
    GroupWord w;
    w.letters_ = std::move(letters);
    return w;
  }

  std::span<const Letter> letters() const { return letters_; }
  std::size_t length() const { return letters_.size(); }
  bool is_identity() const { return letters_.empty(); }
  Letter front() const { return letters_.front(); }
  Letter back() const { return letters_.back(); }

  friend bool operator==(const GroupWord&, const GroupWord&) = default;

  /// Shortlex: shorter words first, then lexicographic in letter order.
  friend std::strong_ordering operator<=>(const GroupWord& lhs, const GroupWord& rhs) {
    if (auto c = lhs.letters_.size() <=> rhs.letters_.size(); c != 0) return c;
    return lhs.letters_ <=> rhs.letters_;
  }

 private:
  std::vector<Letter> letters_;
};

inline GroupWord reduce(std::span<const Letter> raw) {
  std::vector<Letter> out;
  out.reserve(raw.size());
  for (Letter s : raw) {
    if (!out.empty() && out.back() == inverse_letter(s)) {
      out.pop_back();
    } else {
      out.push_back(s);
    }
  }
  return GroupWord::from_reduced(std::move(out));
}

inline GroupWord mul(const GroupWord& g, const GroupWord& h) {
  auto a = g.letters();
  auto b = h.letters();
  std::size_t cancel = 0;
  while (cancel < a.size() && cancel < b.size() &&
         a[a.size() - 1 - cancel] == inverse_letter(b[cancel])) {
    ++cancel;
  }
  std::vector<Letter> out;
  out.reserve(a.size() + b.size() - 2 * cancel);
  out.insert(out.end(), a.begin(), a.end() - static_cast<std::ptrdiff_t>(cancel));
  out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(cancel), b.end());
  return GroupWord::from_reduced(std::move(out));
}

/// g * s for a single letter.
inline GroupWord mul(const GroupWord& g, Letter s) {
  std::vector<Letter> out(g.letters().begin(), g.letters().end());
  if (!out.empty() && out.back() == inverse_letter(s)) {
    out.pop_back();
  } else {
    out.push_back(s);
  }
  return GroupWord::from_reduced(std::move(out));
}

inline GroupWord inv(const GroupWord& g) {
  std::vector<Letter> out(g.letters().rbegin(), g.letters().rend());
  for (Letter& s : out) s = inverse_letter(s);
  return GroupWord::from_reduced(std::move(out));
}

inline GroupWord operator*(const GroupWord& g, const GroupWord& h) { return mul(g, h); }

inline std::size_t length(const GroupWord& g) { return g.length(); }

/// Word metric on the right Cayley tree: d(f, g) = |f^-1 g|.
inline std::size_t distance(const GroupWord& f, const GroupWord& g) {
  return mul(inv(f), g).length();
}

struct GroupWordHash {
  std::size_t operator()(const GroupWord& g) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Letter s : g.letters()) {
      h ^= s;
      h *= 0x100000001b3ULL;
    }
    h ^= g.length();
    return static_cast<std::size_t>(h);
  }
};

/// Closed ball B(e, radius) in shortlex order, with the spanning-tree structure
/// of the right Cayley graph: every non-identity word is parent * last.
struct Ball {
  int radius = 0;
  std::vector<GroupWord> words;
  std::vector<std::size_t> parent;  // parent[0] unused
  std::vector<Letter> last;         // last[0] unused
  std::unordered_map<GroupWord, std::size_t, GroupWordHash> index;

  std::size_t size() const { return words.size(); }
  bool contains(const GroupWord& g) const { return g.length() <= static_cast<std::size_t>(radius); }
  std::size_t index_of(const GroupWord& g) const;
};

inline std::size_t Ball::index_of(const GroupWord& g) const {
  auto it = index.find(g);
  if (it == index.end()) throw WindowError("word outside ball of radius " + std::to_string(radius));
  return it->second;
}

/// Rank-r free group with generators named a, b, c, ... (inverses upper case).
class FreeGroup {
 public:
  explicit FreeGroup(int rank) : rank_(rank) {
    if (rank < 1 || rank > 26) throw InputError("free group rank must be in [1, 26]");
  }

  int rank() const { return rank_; }
  int letter_count() const { return 2 * rank_; }

  /// All 2r letters in shortlex order.
  std::vector<Letter> letters() const {
    std::vector<Letter> out;
    for (int i = 0; i < letter_count(); ++i) out.push_back(static_cast<Letter>(i));
    return out;
  }

  bool valid_letter(Letter s) const { return s < letter_count(); }

  GroupWord reduce(std::span<const Letter> raw) const {
    for (Letter s : raw) {
      if (!valid_letter(s)) {
        throw InputError("unknown generator index " + std::to_string(generator_of(s) + 1) +
                         " for rank " + std::to_string(rank_));
      }
    }
    return fsofic::reduce(raw);
  }

  char letter_char(Letter s) const {
    const char base = static_cast<char>('a' + generator_of(s));
    return is_inverse(s) ? static_cast<char>(base - 'a' + 'A') : base;
  }

  Letter parse_letter(char c) const {
    int index;
    bool inverse;
    if (c >= 'a' && c <= 'z') {
      index = c - 'a';
      inverse = false;
    } else if (c >= 'A' && c <= 'Z') {
      index = c - 'A';
      inverse = true;
    } else {
      throw InputError(std::string("invalid generator character '") + c + "'");
    }
    if (index >= rank_) {
      throw InputError(std::string("generator '") + c + "' exceeds rank " + std::to_string(rank_));
    }
    return static_cast<Letter>(2 * index + (inverse ? 1 : 0));
  }

  /// Parses "aB" = s1 s2^-1 and freely reduces it. The empty string is e.
  GroupWord parse(std::string_view text) const {
    std::vector<Letter> raw;
    raw.reserve(text.size());
    for (char c : text) raw.push_back(parse_letter(c));
    return fsofic::reduce(raw);
  }

  /// Serialized form; the identity is the empty string.
  std::string format(const GroupWord& g) const {
    std::string out;
    for (Letter s : g.letters()) out.push_back(letter_char(s));
    return out;
  }

  /// Human-readable form; the identity prints as "e".
  std::string display(const GroupWord& g) const { return g.is_identity() ? "e" : format(g); }

  /// 1 + 2r((2r-1)^radius - 1)/(2r-2) for r >= 2; 2*radius + 1 for r = 1.
  std::size_t ball_size(int radius) const {
    if (radius < 0) return 0;
    if (rank_ == 1) return static_cast<std::size_t>(2 * radius + 1);
    std::size_t total = 1;
    std::size_t sphere = static_cast<std::size_t>(2 * rank_);
    for (int k = 1; k <= radius; ++k) {
      total += sphere;
      sphere *= static_cast<std::size_t>(2 * rank_ - 1);
    }
    return total;
  }

  Ball ball(int radius) const {
    if (radius < 0) throw InputError("ball radius must be non-negative");
    Ball b;
    b.radius = radius;
    b.words.reserve(ball_size(radius));
    b.words.emplace_back();
    b.parent.push_back(0);
    b.last.push_back(0);
    // Extending each word of the previous sphere, in order, by each letter in
    // order yields the next sphere already sorted in shortlex.
    std::size_t sphere_begin = 0;
    for (int k = 1; k <= radius; ++k) {
      const std::size_t sphere_end = b.words.size();
      for (std::size_t p = sphere_begin; p < sphere_end; ++p) {
        for (Letter s = 0; s < letter_count(); ++s) {
          const GroupWord& w = b.words[p];
          if (!w.is_identity() && w.back() == inverse_letter(s)) continue;
          std::vector<Letter> letters(w.letters().begin(), w.letters().end());
          letters.push_back(s);
          b.words.push_back(GroupWord::from_reduced(std::move(letters)));
          b.parent.push_back(p);
          b.last.push_back(s);
        }
      }
      sphere_begin = sphere_end;
    }
    b.index.reserve(b.words.size());
    for (std::size_t i = 0; i < b.words.size(); ++i) b.index.emplace(b.words[i], i);
    return b;
  }

  /// Elements f of B(e, m) whose tree geodesic to g1 passes through g2.
  std::vector<GroupWord> past_window(const GroupWord& g1, const GroupWord& g2, int m) const {
    if (g1 == g2) throw InputError("past_window requires g1 != g2");
    if (g1.length() > static_cast<std::size_t>(m) || g2.length() > static_cast<std::size_t>(m)) {
      throw InputError("past_window requires g1, g2 inside B(e, m)");
    }
    const std::size_t d12 = distance(g2, g1);
    std::vector<GroupWord> out;
    for (const GroupWord& f : ball(m).words) {
      if (distance(f, g2) + d12 == distance(f, g1)) out.push_back(f);
    }
    return out;
  }

 private:
  int rank_;
};

}  // namespace fsofic

template <>
struct std::hash<fsofic::GroupWord> {
  std::size_t operator()(const fsofic::GroupWord& g) const noexcept {
    return fsofic::GroupWordHash{}(g);
  }
};
