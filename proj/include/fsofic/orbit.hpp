#pragma once

#include <algorithm>
#include <concepts>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fsofic/action.hpp"
#include "fsofic/error.hpp"
#include "fsofic/free_group.hpp"
#include "fsofic/sft.hpp"
#include "fsofic/shift_space.hpp"

namespace fsofic {

/// Read access to the edge labels x_g(s) = phi(g)^-1 phi(g s) of an orbit-change map.
template <class V>
concept OrbitView = requires(const V& view, const typename V::Cursor& cursor, Letter s) {
  { view.root() } -> std::convertible_to<typename V::Cursor>;
  { view.step(cursor, s) } -> std::convertible_to<typename V::Cursor>;
  { view.entry(cursor, s) } -> std::convertible_to<std::optional<GroupWord>>;
  { view.letter_count() } -> std::convertible_to<int>;
};

/// Orbit view of a configuration over A_rho.
template <ConfigAccessor C>
class SymbolOrbitView {
 public:
  using Cursor = typename C::Cursor;
  SymbolOrbitView(const OrbitAlphabet& alphabet, C config) : alphabet_(&alphabet), config_(std::move(config)) {}

  Cursor root() const { return config_.root(); }
  Cursor step(const Cursor& c, Letter s) const { return config_.step(c, s); }
  int letter_count() const { return 2 * alphabet_->rank(); }
  std::optional<GroupWord> entry(const Cursor& c, Letter s) const {
    const auto symbol = config_.symbol(c);
    if (!symbol) return std::nullopt;
    if (*symbol >= alphabet_->size()) throw InputError("orbit symbol outside A_rho");
    return alphabet_->entry(*symbol, s);
  }

 private:
  const OrbitAlphabet* alphabet_;
  C config_;
};

/// phi(s_1 ... s_n) = x_e(s_1) x_{s_1}(s_2) ... x_{s_1...s_{n-1}}(s_n); nullopt if an entry is missing.
template <OrbitView V>
std::optional<GroupWord> telescope(const V& view, const GroupWord& word) {
  auto cursor = view.root();
  GroupWord image;
  for (Letter s : word.letters()) {
    const auto x = view.entry(cursor, s);
    if (!x) return std::nullopt;
    image = mul(image, *x);
    cursor = view.step(cursor, s);
  }
  return image;
}

/// One letter t of an inverse walk from `cursor`: the unique reduced s_1...s_n,
/// n <= rho, whose orbit entries multiply to t. Returns it with the cursor it ends at.
template <OrbitView V>
std::pair<GroupWord, typename V::Cursor> inverse_step(const V& view, int rho, const typename V::Cursor& cursor,
                                                      Letter t) {
  int found = 0;
  bool missing = false;
  GroupWord witness;
  typename V::Cursor witness_cursor = cursor;
  std::vector<Letter> path;
  auto search = [&](auto&& self, const typename V::Cursor& c, const GroupWord& product) -> void {
    if (!path.empty() && product.length() == 1 && product.front() == t) {
      if (found++ == 0) {
        witness = GroupWord::from_reduced(path);
        witness_cursor = c;
      }
    }
    if (path.size() == static_cast<std::size_t>(rho)) return;
    for (Letter s = 0; s < view.letter_count(); ++s) {
      if (!path.empty() && path.back() == inverse_letter(s)) continue;
      const auto x = view.entry(c, s);
      if (!x) {
        missing = true;
        continue;
      }
      path.push_back(s);
      self(self, view.step(c, s), mul(product, *x));
      path.pop_back();
    }
  };
  search(search, cursor, GroupWord{});
  if (missing) throw WindowError("inverse evaluation leaves the known window");
  if (found != 1) {
    throw VerificationError("inverse evaluation found " + std::to_string(found) +
                            " witnesses for one letter; the map is not in sym_rho(G)");
  }
  return {std::move(witness), std::move(witness_cursor)};
}

/// phi^-1(target), built one letter t of the target at a time: psi(g t) = psi(g) s_1...s_n
/// for the unique reduced s_1...s_n, n <= rho, with x_{psi(g)}(s_1) ... = t.
template <OrbitView V>
GroupWord inverse_walk(const V& view, int rho, const GroupWord& target) {
  auto cursor = view.root();
  GroupWord preimage;
  for (Letter t : target.letters()) {
    auto [witness, next] = inverse_step(view, rho, cursor, t);
    preimage = mul(preimage, witness);
    cursor = std::move(next);
  }
  return preimage;
}

/// An identity-fixing bijection phi of G known on the ball B(e, window), with
/// |phi(g)^-1 phi(g s)| <= rho inside the window and the same bound for phi^-1
/// wherever both points lie in the image of the window.
class LocalBijection {
 public:
  LocalBijection(const FreeGroup& group, int window, int rho, std::vector<GroupWord> images)
      : rank_(group.rank()), rho_(rho), ball_(group.ball(window)), images_(std::move(images)) {
    if (rho < 1) throw InputError("displacement bound rho must be >= 1");
    if (images_.size() != ball_.size()) throw InputError("local bijection table does not cover its window");
    if (!images_[0].is_identity()) throw InputError("local bijection must fix e");
    for (const auto& h : images_) group.reduce(h.letters());
    for (std::size_t k = 0; k < images_.size(); ++k) {
      if (!preimage_.emplace(images_[k], k).second) {
        throw InputError("local bijection is not injective at " + group.display(ball_.words[k]));
      }
    }
    for (std::size_t k = 0; k < ball_.size(); ++k) {
      for (int s = 0; s < group.letter_count(); ++s) {
        const GroupWord next = mul(ball_.words[k], static_cast<Letter>(s));
        if (next.length() > static_cast<std::size_t>(window)) continue;
        const GroupWord step = mul(inv(images_[k]), images_[ball_.index_of(next)]);
        if (step.length() > static_cast<std::size_t>(rho)) {
          throw InputError("displacement |phi(g)^-1 phi(gs)| = " + std::to_string(step.length()) + " exceeds rho at g = " +
                           group.display(ball_.words[k]));
        }
      }
      for (int s = 0; s < group.letter_count(); ++s) {
        auto other = preimage_.find(mul(images_[k], static_cast<Letter>(s)));
        if (other == preimage_.end()) continue;
        if (distance(ball_.words[k], ball_.words[other->second]) > static_cast<std::size_t>(rho)) {
          throw InputError("inverse displacement exceeds rho at phi(g) = " + group.display(images_[k]));
        }
      }
    }
  }

  template <class F>
  static LocalBijection from_function(const FreeGroup& group, int window, int rho, F&& f) {
    std::vector<GroupWord> images;
    for (const auto& g : group.ball(window).words) images.push_back(f(g));
    return LocalBijection(group, window, rho, std::move(images));
  }

  static LocalBijection identity(const FreeGroup& group, int window) {
    return from_function(group, window, 1, [](const GroupWord& g) { return g; });
  }

  int rank() const { return rank_; }
  int window() const { return ball_.radius; }
  int rho() const { return rho_; }
  const Ball& ball() const { return ball_; }
  const std::vector<GroupWord>& images() const { return images_; }

  const GroupWord& operator()(const GroupWord& g) const {
    if (g.length() > static_cast<std::size_t>(window())) {
      throw WindowError("phi evaluated outside its window of radius " + std::to_string(window()));
    }
    return images_[ball_.index_of(g)];
  }

  /// Table lookup of phi^-1(h) among images of the window.
  std::optional<GroupWord> preimage(const GroupWord& h) const {
    auto it = preimage_.find(h);
    if (it == preimage_.end()) return std::nullopt;
    return ball_.words[it->second];
  }

  /// Orbit view: cursor g, entry x_g(s) = phi(g)^-1 phi(g s) while g s stays in the window.
  struct View {
    using Cursor = GroupWord;
    const LocalBijection* phi;
    Cursor root() const { return {}; }
    Cursor step(const Cursor& g, Letter s) const { return mul(g, s); }
    int letter_count() const { return 2 * phi->rank_; }
    std::optional<GroupWord> entry(const Cursor& g, Letter s) const {
      const GroupWord next = mul(g, s);
      const auto w = static_cast<std::size_t>(phi->window());
      if (g.length() > w || next.length() > w) return std::nullopt;
      return mul(inv((*phi)(g)), (*phi)(next));
    }
  };
  View view() const { return View{this}; }

  friend bool operator==(const LocalBijection& a, const LocalBijection& b) {
    return a.rank_ == b.rank_ && a.ball_.radius == b.ball_.radius && a.images_ == b.images_;
  }

 private:
  int rank_;
  int rho_;
  Ball ball_;
  std::vector<GroupWord> images_;
  std::unordered_map<GroupWord, std::size_t, GroupWordHash> preimage_;
};

template <ConfigAccessor C>
SymbolOrbitView<C> orbit_view(const OrbitAlphabet& alphabet, C config) {
  return SymbolOrbitView<C>(alphabet, std::move(config));
}

/// phi^-1(target) by unique-witness search, never by table lookup.
inline GroupWord inverse_eval(const LocalBijection& phi, const GroupWord& target) {
  const GroupWord result = inverse_walk(phi.view(), phi.rho(), target);
  if (phi(result) != target) throw VerificationError("inverse evaluation does not invert phi");
  return result;
}

/// inverse_eval over a whole ball, in ball order; each walk extends its parent's.
inline std::vector<GroupWord> inverse_eval_ball(const LocalBijection& phi, const Ball& ball) {
  const auto view = phi.view();
  std::vector<GroupWord> out(ball.size());
  for (std::size_t k = 1; k < ball.size(); ++k) {
    const GroupWord& parent = out[ball.parent[k]];
    out[k] = mul(parent, inverse_step(view, phi.rho(), parent, ball.last[k]).first);
    if (phi(out[k]) != ball.words[k]) throw VerificationError("inverse evaluation does not invert phi");
  }
  return out;
}

/// True restriction of phi to a smaller ball.
inline LocalBijection restrict(const LocalBijection& phi, int window) {
  if (window > phi.window()) throw WindowError("cannot widen a local bijection");
  const FreeGroup group(phi.rank());
  return LocalBijection::from_function(group, window, phi.rho(), [&](const GroupWord& g) { return phi(g); });
}

/// (Theta^h phi)(g) = phi(h^-1)^-1 phi(h^-1 g); the window shrinks by |h|.
inline LocalBijection theta_action(const GroupWord& h, const LocalBijection& phi) {
  const int window = phi.window() - static_cast<int>(h.length());
  if (window < 0) throw WindowError("Theta^h needs |h| <= window");
  const FreeGroup group(phi.rank());
  const GroupWord hi = inv(h);
  const GroupWord base = inv(phi(hi));
  return LocalBijection::from_function(group, window, phi.rho(),
                                       [&](const GroupWord& g) { return mul(base, phi(mul(hi, g))); });
}

/// (Mho^h phi)(g) = h phi(phi^-1(h^-1) g); the window shrinks by rho |h|.
inline LocalBijection upsilon_action(const GroupWord& h, const LocalBijection& phi) {
  const int window = phi.window() - phi.rho() * static_cast<int>(h.length());
  if (window < 0) throw WindowError("Mho^h needs rho |h| <= window");
  const FreeGroup group(phi.rank());
  const GroupWord k = inverse_eval(phi, inv(h));
  return LocalBijection::from_function(group, window, phi.rho(),
                                       [&](const GroupWord& g) { return mul(h, phi(mul(k, g))); });
}

/// E(phi)_h(s) = phi(h)^-1 phi(h s), as a pattern over A_rho on B(e, window - 1).
inline Pattern encode_E(const LocalBijection& phi, const OrbitAlphabet& alphabet) {
  if (phi.window() < 1) throw WindowError("E(phi) needs window >= 1");
  if (phi.rho() > alphabet.rho()) throw InputError("orbit alphabet radius is below the displacement bound");
  const FreeGroup group(phi.rank());
  Pattern out;
  std::vector<GroupWord> images(static_cast<std::size_t>(group.letter_count()));
  for (const auto& h : group.ball(phi.window() - 1).words) {
    for (int s = 0; s < group.letter_count(); ++s) {
      images[static_cast<std::size_t>(s)] = mul(inv(phi(h)), phi(mul(h, static_cast<Letter>(s))));
    }
    out.emplace(h, alphabet.encode(images));
  }
  return out;
}

inline int pattern_radius(const Pattern& p) {
  std::size_t radius = 0;
  for (const auto& [g, symbol] : p) radius = std::max(radius, g.length());
  return static_cast<int>(radius);
}

/// phi(g s) = phi(g) x_g(s) from a pattern on B(e, R); the result lives on B(e, R + 1).
/// A non-injective reconstruction is reported as a VerificationError naming the collision.
inline LocalBijection decode_E(const Pattern& x, const OrbitAlphabet& alphabet) {
  const FreeGroup group(alphabet.rank());
  const int radius = pattern_radius(x);
  if (x.size() != group.ball_size(radius)) throw InputError("decode_E needs a pattern on a full ball");
  const Ball ball = group.ball(radius + 1);
  std::vector<GroupWord> images(ball.size());
  std::unordered_map<GroupWord, std::size_t, GroupWordHash> seen;
  seen.emplace(GroupWord{}, 0);
  for (std::size_t k = 1; k < ball.size(); ++k) {
    const GroupWord& parent = ball.words[ball.parent[k]];
    auto it = x.find(parent);
    if (it == x.end()) throw InputError("decode_E pattern is missing " + group.display(parent));
    if (it->second >= alphabet.size()) throw InputError("orbit symbol outside A_rho");
    images[k] = mul(images[ball.parent[k]], alphabet.entry(it->second, ball.last[k]));
    auto [slot, fresh] = seen.emplace(images[k], k);
    if (!fresh) {
      throw VerificationError("decoded map is not injective: phi(" + group.display(ball.words[slot->second]) +
                              ") = phi(" + group.display(ball.words[k]) + ") = " + group.display(images[k]));
    }
  }
  try {
    return LocalBijection(group, radius + 1, alphabet.rho(), std::move(images));
  } catch (const InputError& e) {
    throw VerificationError(std::string("decoded map leaves sym_rho(G): ") + e.what());
  }
}

/// Window radius of F(phi): floor((R - 1) / rho).
inline int encode_F_window(const LocalBijection& phi) { return (phi.window() - 1) / phi.rho(); }

/// F(phi)(h)(s) = h^-1 phi(phi^-1(h) s) on B(e, floor((R - 1) / rho)).
inline Pattern encode_F(const LocalBijection& phi, const OrbitAlphabet& alphabet) {
  if (phi.window() < 1) throw WindowError("F(phi) needs window >= 1");
  const FreeGroup group(phi.rank());
  const Ball ball = group.ball(encode_F_window(phi));
  const std::vector<GroupWord> preimages = inverse_eval_ball(phi, ball);
  Pattern out;
  std::vector<GroupWord> images(static_cast<std::size_t>(group.letter_count()));
  for (std::size_t j = 0; j < ball.size(); ++j) {
    const GroupWord hi = inv(ball.words[j]);
    for (int s = 0; s < group.letter_count(); ++s) {
      images[static_cast<std::size_t>(s)] = mul(hi, phi(mul(preimages[j], static_cast<Letter>(s))));
    }
    out.emplace_hint(out.end(), ball.words[j], alphabet.encode(images));
  }
  return out;
}

/// A pair (orbit-alphabet pattern, label pattern): the finite shadow of a point of sym_e(G) x B^G.
struct ProductPattern {
  Pattern x;
  Pattern y;
  friend bool operator==(const ProductPattern&, const ProductPattern&) = default;
};

/// E~(phi, y) = (E(phi), y).
inline ProductPattern product_encode_E(const LocalBijection& phi, const Pattern& y, const OrbitAlphabet& alphabet) {
  return {encode_E(phi, alphabet), y};
}

/// E~^-1(x, y) = (E^-1(x), y).
inline std::pair<LocalBijection, Pattern> product_decode_E(const ProductPattern& p, const OrbitAlphabet& alphabet) {
  return {decode_E(p.x, alphabet), p.y};
}

/// F~(phi, y) = (F(phi), y o phi^-1); the label part keeps every h whose preimage lies in dom y.
inline ProductPattern product_encode_F(const LocalBijection& phi, const Pattern& y, const OrbitAlphabet& alphabet) {
  ProductPattern out{encode_F(phi, alphabet), {}};
  const Ball ball = FreeGroup(phi.rank()).ball(encode_F_window(phi));
  const std::vector<GroupWord> preimages = inverse_eval_ball(phi, ball);
  for (std::size_t j = 0; j < ball.size(); ++j) {
    auto it = y.find(preimages[j]);
    if (it != y.end()) out.y.emplace_hint(out.y.end(), ball.words[j], it->second);
  }
  return out;
}

/// Theta~^g(phi, y) = (Theta^g phi, g y).
inline std::pair<LocalBijection, Pattern> product_theta(const GroupWord& g, const LocalBijection& phi,
                                                        const Pattern& y) {
  return {theta_action(g, phi), shift(g, y)};
}

/// Mho~^g(phi, y) = (Mho^g phi, phi^-1(g^-1)^-1 y).
inline std::pair<LocalBijection, Pattern> product_upsilon(const GroupWord& g, const LocalBijection& phi,
                                                          const Pattern& y) {
  return {upsilon_action(g, phi), shift(inv(inverse_eval(phi, inv(g))), y)};
}

/// Whether p and q agree on B(e, radius); both must be defined there.
inline bool agree_on_ball(const Pattern& p, const Pattern& q, const FreeGroup& group, int radius) {
  for (const auto& g : group.ball(radius).words) {
    auto a = p.find(g);
    auto b = q.find(g);
    if (a == p.end() || b == q.end()) throw WindowError("pattern comparison outside a pattern's domain");
    if (a->second != b->second) return false;
  }
  return true;
}

/// sum_{i <= N} 2^-i [phi(g_i) != psi(g_i)] over the shortlex enumeration g_1 = e, g_2, ...
/// of the common window, truncated at `terms`.
inline double truncated_distance(const LocalBijection& phi, const LocalBijection& psi, std::size_t terms = 64) {
  const int window = std::min(phi.window(), psi.window());
  const FreeGroup group(phi.rank());
  double total = 0.0;
  double weight = 0.5;
  std::size_t used = 0;
  for (const auto& g : group.ball(window).words) {
    if (used++ == terms) break;
    if (phi(g) != psi(g)) total += weight;
    weight *= 0.5;
  }
  return total;
}

/// Automorphism theta of the free group given by generator images.
class Automorphism {
 public:
  /// Surjectivity is certified by finding a preimage of every generator inside
  /// a ball (free groups are Hopfian, so a surjective endomorphism is bijective).
  Automorphism(const FreeGroup& group, std::vector<GroupWord> images, int search_radius = -1)
      : rank_(group.rank()), forward_(std::move(images)) {
    if (forward_.size() != static_cast<std::size_t>(group.rank())) throw InputError("automorphism needs r images");
    for (const auto& w : forward_) {
      group.reduce(w.letters());
      if (w.is_identity()) throw InputError("automorphism image of a generator cannot be e");
    }
    // Without an explicit radius, deepen until every generator has a preimage.
    int max_radius = search_radius;
    if (max_radius < 0) {
      max_radius = 1;
      while (group.ball_size(max_radius + 1) <= 200'000 && max_radius < 12) ++max_radius;
    }
    backward_.resize(forward_.size());
    std::vector<bool> found(forward_.size(), false);
    std::size_t missing = found.size();
    for (int radius = search_radius < 0 ? 1 : max_radius; radius <= max_radius && missing > 0; ++radius) {
      for (const auto& g : group.ball(radius).words) {
        if (search_radius < 0 && g.length() < static_cast<std::size_t>(radius)) continue;
        const GroupWord image = apply(forward_, g);
        if (image.length() == 1 && !is_inverse(image.front())) {
          const auto i = static_cast<std::size_t>(generator_of(image.front()));
          if (!found[i]) {
            found[i] = true;
            backward_[i] = g;
            --missing;
          }
        }
      }
    }
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (!found[i]) {
        throw InputError("images do not define an automorphism: no preimage of " +
                         std::string(1, group.letter_char(generator_letter(static_cast<int>(i)))) + " within radius " +
                         std::to_string(max_radius));
      }
    }
  }

  static Automorphism identity(const FreeGroup& group) {
    std::vector<GroupWord> images;
    for (int i = 0; i < group.rank(); ++i) images.push_back(GroupWord::from_reduced({generator_letter(i)}));
    return Automorphism(group, std::move(images));
  }

  int rank() const { return rank_; }
  GroupWord operator()(const GroupWord& g) const { return apply(forward_, g); }
  GroupWord inverse(const GroupWord& g) const { return apply(backward_, g); }
  const std::vector<GroupWord>& images() const { return forward_; }
  const std::vector<GroupWord>& inverse_images() const { return backward_; }

  /// max over letters s of |theta(s)| and |theta^-1(s)|.
  int displacement() const {
    std::size_t rho = 1;
    for (const auto& w : forward_) rho = std::max(rho, w.length());
    for (const auto& w : backward_) rho = std::max(rho, w.length());
    return static_cast<int>(rho);
  }

  LocalBijection table(int window) const {
    const FreeGroup group(rank_);
    return LocalBijection::from_function(group, window, displacement(), [&](const GroupWord& g) { return (*this)(g); });
  }

  /// The A_rho symbol s -> theta(s), i.e. E(theta)_h for every h.
  Symbol symbol(const OrbitAlphabet& alphabet) const {
    std::vector<GroupWord> images;
    for (int s = 0; s < 2 * rank_; ++s) images.push_back((*this)(GroupWord::from_reduced({static_cast<Letter>(s)})));
    return alphabet.encode(images);
  }

  /// Constant configuration x(v) = E(theta)_e on n vertices.
  Labeling constant_configuration(const OrbitAlphabet& alphabet, std::size_t n) const {
    return Labeling(n, symbol(alphabet));
  }

 private:
  static GroupWord apply(const std::vector<GroupWord>& images, const GroupWord& g) {
    GroupWord out;
    for (Letter s : g.letters()) {
      const GroupWord& w = images[static_cast<std::size_t>(generator_of(s))];
      out = mul(out, is_inverse(s) ? inv(w) : w);
    }
    return out;
  }

  int rank_;
  std::vector<GroupWord> forward_;
  std::vector<GroupWord> backward_;
};

/// phi_v^-1(g) for phi_v = E^-1(x^sigma_v), read lazily from the labels.
inline GroupWord phi_inverse_at(const FiniteAction& sigma, const Labeling& x, const OrbitAlphabet& alphabet, Vertex v,
                                const GroupWord& g) {
  return inverse_walk(orbit_view(alphabet, PullbackConfig(sigma, x, v)), alphabet.rho(), g);
}

/// tau(g) v = sigma(phi_v^-1(g^-1)^-1) v, evaluated directly for any g.
inline Vertex tau_formula(const FiniteAction& sigma, const Labeling& x, const OrbitAlphabet& alphabet, Vertex v,
                          const GroupWord& g) {
  return sigma.act(inv(phi_inverse_at(sigma, x, alphabet, v, inv(g))), v);
}

namespace detail {

inline void require_z_rho(const FiniteAction& sigma, const Labeling& x, const OrbitAlphabet& alphabet) {
  if (x.size() != sigma.size()) throw InputError("labeling and action disagree on n");
  if (sigma.rank() != alphabet.rank()) throw InputError("action rank does not match the orbit alphabet");
  for (Vertex v = 0; v < sigma.size(); ++v) {
    if (x[v] >= alphabet.size()) throw InputError("label at vertex " + std::to_string(v) + " outside A_rho");
  }
  for (Vertex v = 0; v < sigma.size(); ++v) {
    const auto report = axioms_check(alphabet, PullbackConfig(sigma, x, v));
    if (!report.passed()) {
      throw VerificationError("pullback at vertex " + std::to_string(v) + " is not in Z_rho: " +
                              to_string(report.failure) + (report.detail.empty() ? "" : " (" + report.detail + ")"));
    }
  }
}

}  // namespace detail

/// The rearranged action tau of (sigma, x); every pullback must pass the Z_rho axioms.
inline FiniteAction tau_construct(const FiniteAction& sigma, const Labeling& x, const OrbitAlphabet& alphabet) {
  detail::require_z_rho(sigma, x, alphabet);
  std::vector<Permutation> gens(static_cast<std::size_t>(sigma.rank()), Permutation(sigma.size()));
  for (int i = 0; i < sigma.rank(); ++i) {
    const GroupWord s = GroupWord::from_reduced({generator_letter(i)});
    for (Vertex v = 0; v < sigma.size(); ++v) gens[static_cast<std::size_t>(i)][v] = tau_formula(sigma, x, alphabet, v, s);
  }
  try {
    return FiniteAction(std::move(gens));
  } catch (const InputError& e) {
    throw VerificationError(std::string("tau is not a permutation action: ") + e.what());
  }
}

/// sigma(s) v = tau(x(v)(s^-1)^-1) v for every generator s.
inline FiniteAction reconstruct_sigma(const FiniteAction& tau, const Labeling& x, const OrbitAlphabet& alphabet) {
  if (x.size() != tau.size()) throw InputError("labeling and action disagree on n");
  std::vector<Permutation> gens(static_cast<std::size_t>(tau.rank()), Permutation(tau.size()));
  for (int i = 0; i < tau.rank(); ++i) {
    const Letter back = inverse_letter(generator_letter(i));
    for (Vertex v = 0; v < tau.size(); ++v) {
      gens[static_cast<std::size_t>(i)][v] = tau.act(inv(alphabet.entry(x[v], back)), v);
    }
  }
  return FiniteAction(std::move(gens));
}

struct Rearranged {
  FiniteAction tau;
  Labeling x;
  Labeling y;
};

/// Upsilon_n(sigma, x, y) = (tau, x, y).
inline Rearranged upsilon(const FiniteAction& sigma, const Labeling& x, const Labeling& y,
                          const OrbitAlphabet& alphabet) {
  if (!y.empty() && y.size() != sigma.size()) throw InputError("label y and action disagree on n");
  return {tau_construct(sigma, x, alphabet), x, y};
}

}  // namespace fsofic
