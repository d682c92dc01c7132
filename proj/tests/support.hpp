#pragma once

// Random instance generators shared by the unit tests and the acceptance runner.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsofic/fsofic.hpp"

#ifndef FSOFIC_DATA_DIR
#define FSOFIC_DATA_DIR "data"
#endif

namespace support {

using namespace fsofic;

inline std::string data_path(const std::string& name) { return std::string(FSOFIC_DATA_DIR) + "/" + name; }

inline Json data_json(const std::string& name) { return load_json(data_path(name)); }

inline RunOptions run_options(unsigned threads, std::optional<std::uint64_t> seed = std::nullopt) {
  RunOptions options;
  options.threads = threads;
  options.seed = seed;
  return options;
}

inline GroupWord gen(int i) { return GroupWord::from_reduced({generator_letter(i)}); }

/// k positive rationals with common denominator `den` summing to 1.
inline std::vector<Rational> random_rational_distribution(Engine& rng, std::size_t k, std::uint64_t den) {
  std::vector<std::uint64_t> parts(k, 1);
  for (std::uint64_t rest = den - k; rest > 0; --rest) ++parts[uniform_below(rng, k)];
  std::vector<Rational> out;
  for (auto p : parts) out.emplace_back(Rational(p) / Rational(den));
  return out;
}

/// Row-stochastic q x q matrix with entries bounded away from 0.
inline std::vector<std::vector<double>> random_stochastic(Engine& rng, std::size_t q) {
  std::vector<std::vector<double>> p(q, std::vector<double>(q));
  for (auto& row : p) {
    double total = 0.0;
    for (auto& x : row) total += (x = 0.05 + uniform_unit(rng));
    for (auto& x : row) x /= total;
  }
  return p;
}

/// Rank-1 weight W(a, b) = pi_a P_ab for the stationary pi of P.
inline Weight chain_weight(const std::vector<std::vector<double>>& p, const std::vector<double>& pi) {
  Weight w = Weight::zeros(1, Alphabet::numbered(p.size()));
  for (Symbol a = 0; a < p.size(); ++a) {
    for (Symbol b = 0; b < p.size(); ++b) w.at(a, b, 0) = pi[a] * p[a][b];
  }
  for (Symbol a = 0; a < p.size(); ++a) {
    double in = 0.0;
    for (Symbol b = 0; b < p.size(); ++b) in += w.at(b, a, 0);
    w.vertex[a] = in;
  }
  return w;
}

/// Rank-2 two-symbol weight: E_i = [[pi0 - t_i, t_i], [t_i, pi1 - t_i]].
inline Weight two_symbol_weight(Engine& rng) {
  const double pi0 = 0.2 + 0.6 * uniform_unit(rng);
  const double pi1 = 1.0 - pi0;
  Weight w = Weight::zeros(2, Alphabet::numbered(2));
  w.vertex = {pi0, pi1};
  for (int i = 0; i < 2; ++i) {
    const double t = (0.05 + 0.9 * uniform_unit(rng)) * std::min(pi0, pi1);
    w.at(0, 0, i) = pi0 - t;
    w.at(0, 1, i) = t;
    w.at(1, 0, i) = t;
    w.at(1, 1, i) = pi1 - t;
  }
  return w;
}

/// The named rank-2 automorphisms: identity, swap, inversion a -> A, Nielsen a -> ab.
inline std::vector<std::pair<std::string, Automorphism>> named_automorphisms() {
  const FreeGroup g(2);
  auto make = [&](const char* a, const char* b) { return Automorphism(g, {g.parse(a), g.parse(b)}); };
  return {{"identity", make("a", "b")}, {"swap", make("b", "a")}, {"inversion", make("A", "b")},
          {"nielsen", make("ab", "b")}};
}

/// Elementary Nielsen moves of F_2.
inline std::vector<Automorphism> elementary_moves() {
  const FreeGroup g(2);
  std::vector<Automorphism> out;
  for (auto [a, b] : std::vector<std::pair<const char*, const char*>>{
           {"b", "a"}, {"A", "b"}, {"a", "B"}, {"ab", "b"}, {"aB", "b"}, {"ba", "b"}, {"Ba", "b"},
           {"a", "ba"}, {"a", "bA"}, {"a", "ab"}, {"a", "Ab"}}) {
    out.emplace_back(g, std::vector<GroupWord>{g.parse(a), g.parse(b)});
  }
  return out;
}

/// theta_1 o theta_2 for up to two random moves, keeping displacement <= max_rho.
inline Automorphism random_automorphism(Engine& rng, int max_rho) {
  const FreeGroup g(2);
  const auto moves = elementary_moves();
  while (true) {
    const Automorphism& first = moves[uniform_below(rng, moves.size())];
    const Automorphism& second = moves[uniform_below(rng, moves.size())];
    std::vector<GroupWord> images;
    for (const auto& w : second.images()) images.push_back(first(w));
    Automorphism theta(g, std::move(images), 4);
    if (theta.displacement() <= max_rho) return theta;
  }
}

/// A sampled pair (sigma, x) with x in Z_rho(sigma).
struct Instance {
  FiniteAction sigma;
  Labeling x;
  int rho = 1;
};

/// Rank-2 instances from the backtracking sampler, n cycling through 4..12.
inline std::vector<Instance> sampled_instances(std::size_t count, std::uint64_t seed, int rho = 1) {
  const SftSpec spec = SftSpec::z_rho(2, rho);
  std::vector<Instance> out;
  for (std::uint64_t k = 0; out.size() < count && k < 20 * count; ++k) {
    const std::size_t n = 4 + k % 9;
    FiniteAction sigma = sample_action(n, 2, derive_seed(seed, 2 * k));
    SamplerOptions options;
    options.restarts = 4;
    auto x = sample_sft_config(spec, sigma, derive_seed(seed, 2 * k + 1), options);
    if (x) out.push_back({std::move(sigma), std::move(*x), rho});
  }
  return out;
}

inline Labeling random_labels(Engine& rng, std::size_t n, std::size_t q) {
  Labeling y(n);
  for (auto& s : y) s = static_cast<Symbol>(uniform_below(rng, q));
  return y;
}

/// Random reduced word of length exactly `length`.
inline GroupWord random_word(Engine& rng, int rank, int length) {
  GroupWord w;
  while (static_cast<int>(w.length()) < length) {
    const auto s = static_cast<Letter>(uniform_below(rng, static_cast<std::uint64_t>(2 * rank)));
    if (!w.is_identity() && w.back() == inverse_letter(s)) continue;
    w = mul(w, s);
  }
  return w;
}

}  // namespace support
