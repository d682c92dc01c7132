#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fsofic/error.hpp"

namespace fsofic {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt numerator(const Rational& q) { return boost::multiprecision::numerator(q); }
inline BigInt denominator(const Rational& q) { return boost::multiprecision::denominator(q); }

inline double to_double(const Rational& q) { return q.convert_to<double>(); }
inline double to_double(double x) { return x; }

inline std::string to_string(const Rational& q) {
  std::ostringstream out;
  out << q;
  return out.str();
}

/// Natural log of a positive big integer without overflowing a double.
inline double log_big(const BigInt& a) {
  if (a <= 0) throw InputError("log of non-positive integer");
  const std::size_t bits = boost::multiprecision::msb(a) + 1;
  if (bits <= 52) return std::log(a.convert_to<double>());
  const std::size_t shift = bits - 52;
  const BigInt top = a >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

/// Best rational approximation with denominator <= max_den (continued fractions).
inline Rational best_rational(double x, std::uint64_t max_den) {
  if (!std::isfinite(x)) throw InputError("cannot rationalize a non-finite value");
  const bool negative = x < 0;
  double rest = std::abs(x);
  BigInt h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(rest);
    const BigInt ai = static_cast<BigInt>(static_cast<std::uint64_t>(a));
    const BigInt h2 = ai * h1 + h0;
    const BigInt k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = rest - a;
    if (frac < 1e-18) break;
    rest = 1.0 / frac;
    if (rest > 1e18) break;
  }
  if (k1 == 0) return Rational(0);
  Rational out(h1, k1);
  return negative ? Rational(-out) : out;
}

/// An exact real of the form sum_k c_k log(a_k) with rational c_k and integers
/// a_k > 1. The bases are kept pairwise coprime, so they are multiplicatively
/// independent and equality is decided coefficient-wise.
class LogLinear {
 public:
  LogLinear() = default;

  /// log(q) for a positive rational q.
  static LogLinear log_of(const Rational& q) {
    if (q <= 0) throw InputError("log of non-positive rational");
    LogLinear out;
    out.add_term(numerator(q), Rational(1));
    out.add_term(denominator(q), Rational(-1));
    out.normalize();
    return out;
  }

  /// -p log p, with 0 log 0 = 0.
  static LogLinear entropy_term(const Rational& p) {
    if (p == 0) return {};
    return log_of(p) * Rational(-p);
  }

  bool is_zero() const { return terms_.empty(); }
  const std::map<BigInt, Rational>& terms() const { return terms_; }

  double to_double() const {
    double total = 0.0;
    for (const auto& [base, coeff] : terms_) total += fsofic::to_double(coeff) * log_big(base);
    return total;
  }

  LogLinear& operator+=(const LogLinear& other) {
    for (const auto& [base, coeff] : other.terms_) add_term(base, coeff);
    normalize();
    return *this;
  }
  LogLinear& operator-=(const LogLinear& other) { return *this += other * Rational(-1); }
  LogLinear& operator*=(const Rational& c) {
    if (c == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [base, coeff] : terms_) coeff *= c;
    return *this;
  }

  friend LogLinear operator+(LogLinear a, const LogLinear& b) { return a += b; }
  friend LogLinear operator-(LogLinear a, const LogLinear& b) { return a -= b; }
  friend LogLinear operator*(LogLinear a, const Rational& c) { return a *= c; }
  friend LogLinear operator*(const Rational& c, LogLinear a) { return a *= c; }
  friend bool operator==(const LogLinear& a, const LogLinear& b) { return (a - b).is_zero(); }

  /// e.g. "3/4*log(2) - 1/4*log(3)"; "0" when zero.
  std::string format() const {
    if (terms_.empty()) return "0";
    std::ostringstream out;
    bool first = true;
    for (const auto& [base, coeff] : terms_) {
      Rational c = coeff;
      if (!first) {
        out << (c < 0 ? " - " : " + ");
        if (c < 0) c = -c;
      }
      out << c << "*log(" << base << ")";
      first = false;
    }
    return out.str();
  }

 private:
  void add_term(const BigInt& base, const Rational& coeff) {
    if (base == 1 || coeff == 0) return;
    auto& slot = terms_[base];
    slot += coeff;
    if (slot == 0) terms_.erase(base);
  }

  // Refines the bases to a pairwise coprime set: log a = log g + log(a/g).
  void normalize() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto i = terms_.begin(); i != terms_.end() && !changed; ++i) {
        for (auto j = std::next(i); j != terms_.end(); ++j) {
          const BigInt g = boost::multiprecision::gcd(i->first, j->first);
          if (g == 1) continue;
          const BigInt a = i->first, b = j->first;
          const Rational ca = i->second, cb = j->second;
          terms_.erase(a);
          terms_.erase(b);
          add_term(g, ca + cb);
          add_term(a / g, ca);
          add_term(b / g, cb);
          changed = true;
          break;
        }
      }
    }
  }

  std::map<BigInt, Rational> terms_;
};

/// Exact Shannon entropy (nats) of a rational probability vector.
inline LogLinear shannon_entropy_exact(const std::vector<Rational>& p) {
  LogLinear h;
  for (const Rational& x : p) {
    if (x < 0) throw InputError("negative probability");
    h += LogLinear::entropy_term(x);
  }
  return h;
}

}  // namespace fsofic
