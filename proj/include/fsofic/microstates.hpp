#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsofic/action.hpp"
#include "fsofic/error.hpp"
#include "fsofic/free_group.hpp"
#include "fsofic/markov.hpp"
#include "fsofic/parallel.hpp"
#include "fsofic/random.hpp"
#include "fsofic/rational.hpp"
#include "fsofic/sft.hpp"
#include "fsofic/shift_space.hpp"

namespace fsofic {

/// Closed l1 ball {P : sum_j |P|K_j - target_j|_1 <= epsilon} around finite-window
/// targets, optionally intersected with an SFT restriction (Omega_Z).
///
/// The open weak* neighbourhoods of the theory are realised as closed balls; a
/// slack of 1e-12 absorbs rounding for epsilon > 0, and epsilon = 0 compares
/// exact rational frequencies.
struct Neighborhood {
  std::vector<PatternDistribution> targets;
  std::vector<BasicPatternDistribution<Rational>> exact_targets;  // required when epsilon == 0
  double epsilon = 0.0;
  std::optional<SftSpec> restriction;

  /// Target = the marginal of w on B(e, m).
  template <class Scalar>
  static Neighborhood ball(const BasicWeight<Scalar>& w, int m, double epsilon) {
    const FreeGroup group(w.rank);
    Neighborhood nb;
    nb.epsilon = epsilon;
    nb.add(marginal(w, group.ball(m).words));
    nb.targets.back().ball_radius = m;
    return nb;
  }

  /// d*: one component per generator edge {e, s_i}.
  template <class Scalar>
  static Neighborhood edges(const BasicWeight<Scalar>& w, double epsilon) {
    Neighborhood nb;
    nb.epsilon = epsilon;
    for (int i = 0; i < w.rank; ++i) {
      nb.add(marginal(w, make_window({GroupWord{}, GroupWord::from_reduced({generator_letter(i)})})));
    }
    return nb;
  }

  void add(const PatternDistribution& target) {
    validate_distribution(target);
    targets.push_back(target);
  }

  void add(const BasicPatternDistribution<Rational>& target) {
    validate_distribution(target);
    exact_targets.push_back(target);
    PatternDistribution numeric;
    numeric.window = target.window;
    numeric.ball_radius = target.ball_radius;
    for (const auto& [key, p] : target.mass) numeric.mass.emplace(key, to_double(p));
    targets.push_back(std::move(numeric));
  }

  bool exact() const { return !targets.empty() && exact_targets.size() == targets.size(); }

  /// lcm of the target denominators (1 if not exact).
  std::uint64_t denominator_lcm() const {
    BigInt l = 1;
    for (const auto& t : exact_targets) {
      for (const auto& [key, p] : t.mass) l = boost::multiprecision::lcm(l, denominator(p));
    }
    return l > BigInt(std::numeric_limits<std::uint64_t>::max()) ? 0 : l.convert_to<std::uint64_t>();
  }

  void validate() const {
    if (targets.empty()) throw InputError("neighbourhood has no target window");
    if (epsilon < 0) throw InputError("epsilon must be >= 0");
    if (epsilon == 0 && !exact()) throw InputError("epsilon = 0 needs exact rational targets");
  }
};

struct CountCaps {
  std::uint64_t labels = 10'000'000;   // |A|^n
  std::uint64_t actions = 1'000'000;   // n!^r in exact mode
};

struct OmegaCount {
  std::uint64_t omega = 0;
  std::uint64_t omega_z = 0;  // equals omega when no restriction is attached
};

namespace detail {

struct ComponentPlan {
  std::vector<std::vector<Vertex>> sites;  // [v][position]
  std::vector<std::pair<std::uint64_t, double>> target;  // sorted by pattern code
  std::vector<std::pair<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>>> exact;  // code -> (num, den)
};

inline std::uint64_t pattern_code(const PatternKey& key, std::uint64_t q) {
  std::uint64_t code = 0;
  for (std::size_t j = key.size(); j-- > 0;) code = code * q + key[j];
  return code;
}

inline std::vector<ComponentPlan> plan(const Neighborhood& nb, const FiniteAction& sigma, std::uint64_t q) {
  std::vector<ComponentPlan> plans;
  for (std::size_t c = 0; c < nb.targets.size(); ++c) {
    const auto& target = nb.targets[c];
    long double size = 1.0L;
    for (std::size_t j = 0; j < target.window.size(); ++j) size *= static_cast<long double>(q);
    if (size > 1.8e19L) throw ResourceError("pattern codes on this window exceed 64 bits");
    ComponentPlan p;
    p.sites = pullback_sites(sigma, target.window);
    for (const auto& [key, mass] : target.mass) {
      for (Symbol s : key) {
        if (s >= q) throw InputError("target pattern symbol outside the label alphabet");
      }
      if (mass > 0) p.target.emplace_back(pattern_code(key, q), mass);
    }
    std::sort(p.target.begin(), p.target.end());
    if (nb.exact()) {
      for (const auto& [key, mass] : nb.exact_targets[c].mass) {
        if (mass == 0) continue;
        const BigInt num = numerator(mass), den = denominator(mass);
        if (den > BigInt(std::numeric_limits<std::uint32_t>::max())) throw InputError("target denominator too large");
        p.exact.emplace_back(pattern_code(key, q),
                             std::make_pair(num.convert_to<std::uint64_t>(), den.convert_to<std::uint64_t>()));
      }
      std::sort(p.exact.begin(), p.exact.end());
    }
    plans.push_back(std::move(p));
  }
  return plans;
}

// Distance of one labeling's empirical marginals from the targets, or the
// exact-statistics test when `exact` is set.
class Evaluator {
 public:
  Evaluator(const Neighborhood& nb, std::vector<ComponentPlan> plans, std::uint64_t q, std::size_t n)
      : plans_(std::move(plans)), q_(q), n_(n), epsilon_(nb.epsilon), exact_(nb.epsilon == 0), codes_(n) {}

  bool inside(const Labeling& x) {
    double total = 0.0;
    for (const auto& plan : plans_) {
      for (std::size_t v = 0; v < n_; ++v) {
        std::uint64_t code = 0;
        for (std::size_t j = plan.sites[v].size(); j-- > 0;) code = code * q_ + x[plan.sites[v][j]];
        codes_[v] = code;
      }
      std::sort(codes_.begin(), codes_.end());
      if (exact_) {
        if (!matches_exactly(plan)) return false;
        continue;
      }
      total += l1(plan);
      if (total > epsilon_ + 1e-12) return false;
    }
    return true;
  }

 private:
  template <class F>
  void for_each_run(F&& f) const {
    for (std::size_t a = 0; a < codes_.size();) {
      std::size_t b = a;
      while (b < codes_.size() && codes_[b] == codes_[a]) ++b;
      f(codes_[a], static_cast<std::uint64_t>(b - a));
      a = b;
    }
  }

  double l1(const ComponentPlan& plan) const {
    // sum over observed patterns of |c/n - t| - t, plus the full target mass 1.
    double total = 1.0;
    const double n = static_cast<double>(n_);
    for_each_run([&](std::uint64_t code, std::uint64_t count) {
      auto it = std::lower_bound(plan.target.begin(), plan.target.end(), std::make_pair(code, -1.0));
      const double t = (it != plan.target.end() && it->first == code) ? it->second : 0.0;
      total += std::abs(static_cast<double>(count) / n - t) - t;
    });
    return std::max(total, 0.0);
  }

  bool matches_exactly(const ComponentPlan& plan) const {
    std::size_t runs = 0;
    bool ok = true;
    for_each_run([&](std::uint64_t code, std::uint64_t count) {
      ++runs;
      auto it = std::lower_bound(plan.exact.begin(), plan.exact.end(), code,
                                 [](const auto& entry, std::uint64_t c) { return entry.first < c; });
      if (it == plan.exact.end() || it->first != code) {
        ok = false;
        return;
      }
      const auto [num, den] = it->second;
      if (count * den != num * n_) ok = false;
    });
    return ok && runs == plan.exact.size();
  }

  std::vector<ComponentPlan> plans_;
  std::uint64_t q_;
  std::size_t n_;
  double epsilon_;
  bool exact_;
  std::vector<std::uint64_t> codes_;
};

inline std::uint64_t checked_power(std::uint64_t q, std::size_t n, std::uint64_t cap, const std::string& what) {
  std::uint64_t total = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (total > cap / std::max<std::uint64_t>(q, 1)) {
      throw ResourceError(what + " " + std::to_string(q) + "^" + std::to_string(n) + " exceeds cap " +
                          std::to_string(cap));
    }
    total *= q;
  }
  return total;
}

}  // namespace detail

/// |Omega(sigma, O)| and |Omega_Z(sigma, O)| by exhaustive enumeration of A^n.
inline OmegaCount count_omega(const FiniteAction& sigma, const Neighborhood& nb, std::size_t alphabet_size,
                              const CountCaps& caps = {}, unsigned threads = 1) {
  nb.validate();
  const std::size_t n = sigma.size();
  const std::uint64_t q = alphabet_size;
  if (q == 0) throw InputError("empty label alphabet");
  if (nb.restriction && nb.restriction->alphabet_size() != q) {
    throw InputError("SFT restriction alphabet does not match the label alphabet");
  }
  const std::uint64_t total = detail::checked_power(q, n, caps.labels, "labelings");
  const auto plans = detail::plan(nb, sigma, q);

  const std::size_t blocks = std::min<std::uint64_t>(total, 64);
  std::vector<OmegaCount> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t block) {
    detail::Evaluator eval(nb, plans, q, n);
    const std::uint64_t begin = total * block / blocks;
    const std::uint64_t end = total * (block + 1) / blocks;
    Labeling x(n);
    std::uint64_t rest = begin;
    for (std::size_t v = 0; v < n; ++v) {
      x[v] = static_cast<Symbol>(rest % q);
      rest /= q;
    }
    OmegaCount count;
    for (std::uint64_t index = begin; index < end; ++index) {
      if (eval.inside(x)) {
        ++count.omega;
        if (!nb.restriction || sft_check_all(*nb.restriction, sigma, x)) ++count.omega_z;
      }
      for (std::size_t v = 0; v < n; ++v) {
        if (++x[v] < q) break;
        x[v] = 0;
      }
    }
    partial[block] = count;
  });
  OmegaCount out;
  for (const auto& c : partial) {
    out.omega += c.omega;
    out.omega_z += c.omega_z;
  }
  return out;
}

struct MonteCarlo {
  std::uint64_t samples = 200;
  std::uint64_t seed = 0;
};

/// Exact mode averages over all of Hom(G, Sym(n)); Monte Carlo samples sigma
/// with per-sample seeds derive_seed(seed, index).
struct CountMode {
  std::optional<MonteCarlo> monte_carlo;  // nullopt = exact
};

struct ExpectedCount {
  std::uint64_t samples = 0;
  double mean = 0.0;     // of |Omega_Z| when a restriction is attached, else |Omega|
  double std_error = 0.0;  // standard error of the mean; 0 in exact mode
  double mean_omega = 0.0;
  double mean_omega_z = 0.0;
};

inline ExpectedCount expected_count(std::size_t n, int rank, const Neighborhood& nb, std::size_t alphabet_size,
                                    const CountMode& mode, const CountCaps& caps = {}, unsigned threads = 1) {
  nb.validate();
  std::vector<OmegaCount> counts;
  if (mode.monte_carlo) {
    const auto& mc = *mode.monte_carlo;
    if (mc.samples == 0) throw InputError("Monte Carlo mode needs at least one sample");
    counts.resize(mc.samples);
    parallel_for(mc.samples, threads, [&](std::size_t k) {
      const FiniteAction sigma = sample_action(n, rank, derive_seed(mc.seed, k));
      counts[k] = count_omega(sigma, nb, alphabet_size, caps, 1);
    });
  } else {
    const auto actions = enumerate_actions(n, rank, caps.actions);
    counts.resize(actions.size());
    parallel_for(actions.size(), threads,
                 [&](std::size_t k) { counts[k] = count_omega(actions[k], nb, alphabet_size, caps, 1); });
  }
  ExpectedCount out;
  out.samples = counts.size();
  CompensatedSum omega, omega_z;
  for (const auto& c : counts) {
    omega.add(static_cast<double>(c.omega));
    omega_z.add(static_cast<double>(c.omega_z));
  }
  const double size = static_cast<double>(counts.size());
  out.mean_omega = omega.value() / size;
  out.mean_omega_z = omega_z.value() / size;
  out.mean = nb.restriction ? out.mean_omega_z : out.mean_omega;
  if (mode.monte_carlo && counts.size() > 1) {
    CompensatedSum squares;
    for (const auto& c : counts) {
      const double d = static_cast<double>(nb.restriction ? c.omega_z : c.omega) - out.mean;
      squares.add(d * d);
    }
    out.std_error = std::sqrt(squares.value() / (size - 1.0) / size);
  }
  return out;
}

struct EstimateRow {
  std::size_t n = 0;
  std::uint64_t samples = 0;
  double mean_count = 0.0;
  EntropyValue log_mean_over_n;
  double std_error = 0.0;
};

struct Estimate {
  std::vector<EstimateRow> rows;
  std::vector<std::string> warnings;
};

/// (1/n) log E_sigma |Omega(sigma, O)| for each n; a zero mean gives -inf.
inline Estimate f_estimate(const Neighborhood& nb, int rank, std::size_t alphabet_size,
                           const std::vector<std::size_t>& n_list, const CountMode& mode, const CountCaps& caps = {},
                           unsigned threads = 1) {
  nb.validate();
  Estimate out;
  const std::uint64_t lcm = nb.exact() ? nb.denominator_lcm() : 1;
  for (std::size_t n : n_list) {
    if (n == 0) throw InputError("n must be positive");
    if (nb.epsilon == 0 && (lcm == 0 || n % lcm != 0)) {
      out.warnings.push_back("n = " + std::to_string(n) + " is not a multiple of the target denominators (lcm " +
                             std::to_string(lcm) + "); exact statistics are unattainable and the count is 0");
    }
    const ExpectedCount e = expected_count(n, rank, nb, alphabet_size, mode, caps, threads);
    EstimateRow row;
    row.n = n;
    row.samples = e.samples;
    row.mean_count = e.mean;
    row.std_error = e.std_error;
    row.log_mean_over_n =
        e.mean > 0 ? EntropyValue{std::log(e.mean) / static_cast<double>(n)} : EntropyValue::negative_infinity();
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace fsofic
