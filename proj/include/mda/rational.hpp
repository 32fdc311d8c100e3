#pragma once

// Exact rationals (GMP) and the c·e^k parameter type used for eps, T and Q.

#include <gmpxx.h>

#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mda/interval.hpp"

namespace mda {

/// Parses "12", "-0.25", "1e-3", "2.5E+4" or "3/7" exactly.
inline std::optional<mpq_class> parse_rational(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = parse_rational(s.substr(0, slash));
    auto den = parse_rational(s.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    if (s.substr(slash + 1).find_first_of(".eE-+") != std::string_view::npos) return std::nullopt;
    mpq_class r = *num / *den;
    r.canonicalize();
    return r;
  }
  std::size_t i = 0;
  bool negative = false;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_dot = false;
  bool any_digit = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      any_digit = true;
      if (seen_dot) ++frac_digits;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (!any_digit) return std::nullopt;
  long exponent = 0;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') return std::nullopt;
    ++i;
    if (i >= s.size()) return std::nullopt;
    bool exp_negative = false;
    if (s[i] == '+' || s[i] == '-') {
      exp_negative = s[i] == '-';
      ++i;
    }
    if (i >= s.size()) return std::nullopt;
    for (; i < s.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
      exponent = exponent * 10 + (s[i] - '0');
      if (exponent > 100000) return std::nullopt;
    }
    if (exp_negative) exponent = -exponent;
  }
  mpz_class mantissa(digits, 10);
  const long shift = exponent - frac_digits;
  mpz_class p10;
  mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  mpq_class r = shift >= 0 ? mpq_class(mantissa * p10) : mpq_class(mantissa, p10);
  r.canonicalize();
  if (negative) r = -r;
  return r;
}

/// Decimal text when the denominator is 2^a·5^b, otherwise "p/q".
inline std::string format_rational(const mpq_class& q) {
  mpz_class den = q.get_den();
  unsigned long twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return q.get_str();
  const unsigned long places = std::max(twos, fives);
  if (places == 0) return q.get_num().get_str();
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
  mpz_class scaled = q.get_num() * scale / q.get_den();
  const bool negative = scaled < 0;
  std::string digits = mpz_class(abs(scaled)).get_str();
  if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
  digits.insert(digits.size() - places, ".");
  return negative ? "-" + digits : digits;
}

/// Positive real of the form coef·e^expo with rational coef > 0 and rational
/// expo. Closed under products, quotients and integer powers; log is exact
/// rational whenever coef == 1. Comparisons between distinct values never tie
/// (e^r is irrational for rational r != 0), so they are always decidable.
class ExpRational {
public:
  ExpRational() = default;
  ExpRational(mpq_class coef, mpq_class expo = 0) : coef_(std::move(coef)), expo_(std::move(expo)) {
    coef_.canonicalize();
    expo_.canonicalize();
    if (coef_ <= 0) throw std::invalid_argument("ExpRational coefficient must be positive");
  }
  ExpRational(long v) : ExpRational(mpq_class(v)) {}

  /// "0.001", "1e-3", "1/2", "exp(-2)", "0.25*exp(-2.5)".
  static ExpRational parse(std::string_view s) {
    auto fail = [&] { return std::invalid_argument("cannot parse positive real '" + std::string(s) + "'"); };
    mpq_class coef = 1;
    std::string_view rest = s;
    if (auto star = s.find('*'); star != std::string_view::npos) {
      auto c = parse_rational(s.substr(0, star));
      if (!c) throw fail();
      coef = *c;
      rest = s.substr(star + 1);
    }
    if (rest.rfind("exp(", 0) == 0) {
      if (rest.back() != ')') throw fail();
      auto k = parse_rational(rest.substr(4, rest.size() - 5));
      if (!k) throw fail();
      if (coef <= 0) throw fail();
      return ExpRational(coef, *k);
    }
    if (rest.size() != s.size()) throw fail();
    auto v = parse_rational(s);
    if (!v || *v <= 0) throw fail();
    return ExpRational(*v);
  }

  const mpq_class& coef() const { return coef_; }
  const mpq_class& expo() const { return expo_; }
  bool is_rational() const { return expo_ == 0; }

  /// log of the value when it is rational, i.e. when coef == 1.
  std::optional<mpq_class> exact_log() const {
    if (coef_ == 1) return expo_;
    return std::nullopt;
  }

  Interval interval(int prec) const {
    Interval c = Interval::rational(coef_, prec);
    if (expo_ == 0) return c;
    return c * exp(Interval::rational(expo_, prec));
  }

  Interval log_interval(int prec) const {
    Interval k = Interval::rational(expo_, prec);
    if (coef_ == 1) return k;
    return log(Interval::rational(coef_, prec)) + k;
  }

  double approx() const { return interval(64).mid(); }

  std::string to_string() const {
    if (expo_ == 0) return format_rational(coef_);
    std::string e = "exp(" + format_rational(expo_) + ")";
    if (coef_ == 1) return e;
    return format_rational(coef_) + "*" + e;
  }

  friend ExpRational operator*(const ExpRational& a, const ExpRational& b) {
    return ExpRational(a.coef_ * b.coef_, a.expo_ + b.expo_);
  }
  friend ExpRational operator/(const ExpRational& a, const ExpRational& b) {
    return ExpRational(a.coef_ / b.coef_, a.expo_ - b.expo_);
  }
  friend ExpRational pow(const ExpRational& a, int n) {
    mpq_class c = 1;
    for (int i = 0; i < std::abs(n); ++i) c *= a.coef_;
    if (n < 0) c = 1 / c;
    return ExpRational(c, a.expo_ * n);
  }
  friend bool operator==(const ExpRational& a, const ExpRational& b) {
    return a.coef_ == b.coef_ && a.expo_ == b.expo_;
  }

  /// Exact three-way comparison.
  friend int compare(const ExpRational& a, const ExpRational& b) {
    if (a.expo_ == b.expo_) return cmp(a.coef_, b.coef_);
    for (int p = 64;; p *= 2) {
      Tri lt = less(a.interval(p), b.interval(p));
      if (lt == Tri::yes) return -1;
      if (less(b.interval(p), a.interval(p)) == Tri::yes) return 1;
      if (p > (1 << 16)) throw UndecidablePredicate("ExpRational comparison " + a.to_string() + " vs " + b.to_string());
    }
  }
  friend bool operator<(const ExpRational& a, const ExpRational& b) { return compare(a, b) < 0; }
  friend bool operator<=(const ExpRational& a, const ExpRational& b) { return compare(a, b) <= 0; }

private:
  mpq_class coef_{1};
  mpq_class expo_{0};
};

/// Exact sign of (log(x) - r) for x = c·e^k and rational r.
inline int compare_log(const ExpRational& x, const mpq_class& r) {
  if (auto l = x.exact_log()) return cmp(*l, r);
  // log(c) + k == r would make log(c) rational with c != 1: impossible.
  for (int p = 64;; p *= 2) {
    Interval l = x.log_interval(p);
    Interval rr = Interval::rational(r, p);
    if (less(l, rr) == Tri::yes) return -1;
    if (less(rr, l) == Tri::yes) return 1;
    if (p > (1 << 16)) throw UndecidablePredicate("log comparison");
  }
}

/// Exact floor of log(x).
inline mpz_class floor_log(const ExpRational& x) {
  if (auto l = x.exact_log()) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), l->get_num_mpz_t(), l->get_den_mpz_t());
    return f;
  }
  for (int p = 64;; p *= 2) {
    Interval l = x.log_interval(p);
    mpz_class a, b;
    mpfr_get_z(a.get_mpz_t(), l.lo().get(), MPFR_RNDD);
    mpfr_get_z(b.get_mpz_t(), l.hi().get(), MPFR_RNDD);
    if (a == b) return a;
    if (p > (1 << 16)) throw UndecidablePredicate("floor of log");
  }
}

/// Exact floor of x.
inline mpz_class floor_of(const ExpRational& x) {
  if (x.is_rational()) {
    mpz_class f;
    mpz_fdiv_q(f.get_mpz_t(), x.coef().get_num_mpz_t(), x.coef().get_den_mpz_t());
    return f;
  }
  // Transcendental: never an integer.
  for (int p = 64;; p *= 2) {
    Interval v = x.interval(p);
    mpz_class a, b;
    mpfr_get_z(a.get_mpz_t(), v.lo().get(), MPFR_RNDD);
    mpfr_get_z(b.get_mpz_t(), v.hi().get(), MPFR_RNDD);
    if (a == b) return a;
    if (p > (1 << 16)) throw UndecidablePredicate("floor");
  }
}

}  // namespace mda
