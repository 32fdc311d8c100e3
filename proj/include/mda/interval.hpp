#pragma once

// Certified interval carriers.
//
// Interval      : MPFR endpoints with directed rounding, arbitrary precision.
// FastInterval  : double endpoints, every operation widened outward by a
//                 relative 2^-50 (plus 2^-1000 absolute), which dominates the
//                 round-to-nearest error of one IEEE-754 operation.
//
// Both model the same small algebra so geometric predicates can be written
// once as templates and tried on the fast carrier first.

#include <mpfr.h>
#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mda/errors.hpp"

namespace mda {

enum class Tri : unsigned char { no, yes, unknown };

constexpr Tri tri(bool b) { return b ? Tri::yes : Tri::no; }

constexpr Tri operator&(Tri a, Tri b) {
  if (a == Tri::no || b == Tri::no) return Tri::no;
  if (a == Tri::yes && b == Tri::yes) return Tri::yes;
  return Tri::unknown;
}

constexpr Tri operator|(Tri a, Tri b) {
  if (a == Tri::yes || b == Tri::yes) return Tri::yes;
  if (a == Tri::no && b == Tri::no) return Tri::no;
  return Tri::unknown;
}

constexpr Tri operator!(Tri a) {
  if (a == Tri::yes) return Tri::no;
  if (a == Tri::no) return Tri::yes;
  return Tri::unknown;
}

inline constexpr int kDefaultMaxPrecision = 256;
inline constexpr int kStartPrecision = 64;

/// 64, 128, 256, ... capped at max_precision (which is always included).
inline std::vector<int> precision_schedule(int max_precision = kDefaultMaxPrecision) {
  std::vector<int> out;
  int p = kStartPrecision;
  while (p < max_precision) {
    out.push_back(p);
    p *= 2;
  }
  out.push_back(std::max(max_precision, 2));
  return out;
}

/// Runs attempt(prec) along the precision schedule until it returns a
/// decided Tri.
template <class Attempt>
bool decide_escalating(Attempt&& attempt, int max_precision, const std::string& what) {
  for (int p : precision_schedule(max_precision)) {
    Tri t = attempt(p);
    if (t != Tri::unknown) return t == Tri::yes;
  }
  throw UndecidablePredicate(what);
}

class BigFloat {
public:
  explicit BigFloat(mpfr_prec_t prec = 64) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
  }
  BigFloat(const BigFloat& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  BigFloat(BigFloat&& o) noexcept {
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_swap(v_, o.v_);
  }
  BigFloat& operator=(const BigFloat& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  BigFloat& operator=(BigFloat&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~BigFloat() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }
  double to_double(mpfr_rnd_t rnd) const { return mpfr_get_d(v_, rnd); }

private:
  mpfr_t v_;
};

inline mpfr_prec_t bits_for(const mpz_class& z) {
  auto b = static_cast<mpfr_prec_t>(mpz_sizeinbase(z.get_mpz_t(), 2));
  return std::max<mpfr_prec_t>(b, 2);
}

class Interval {
public:
  explicit Interval(int prec = kStartPrecision) : lo_(prec), hi_(prec) {}

  /// Exact hull [lo, hi] of two doubles.
  static Interval exact(double lo, double hi) {
    Interval r(53);
    mpfr_set_d(r.lo_.get(), lo, MPFR_RNDD);
    mpfr_set_d(r.hi_.get(), hi, MPFR_RNDU);
    return r;
  }
  static Interval exact(double v) { return exact(v, v); }

  /// Exact integer (precision grows to hold it).
  static Interval exact(const mpz_class& z) {
    Interval r(static_cast<int>(bits_for(z)));
    mpfr_set_z(r.lo_.get(), z.get_mpz_t(), MPFR_RNDD);
    mpfr_set_z(r.hi_.get(), z.get_mpz_t(), MPFR_RNDU);
    return r;
  }
  static Interval exact(long v) { return exact(mpz_class(v)); }

  /// Exact dyadic interval [klo, khi] * 2^-scale.
  static Interval dyadic(const mpz_class& klo, const mpz_class& khi, long scale) {
    Interval r(static_cast<int>(std::max(bits_for(klo), bits_for(khi))));
    mpfr_set_z(r.lo_.get(), klo.get_mpz_t(), MPFR_RNDD);
    mpfr_set_z(r.hi_.get(), khi.get_mpz_t(), MPFR_RNDU);
    mpfr_div_2si(r.lo_.get(), r.lo_.get(), scale, MPFR_RNDD);
    mpfr_div_2si(r.hi_.get(), r.hi_.get(), scale, MPFR_RNDU);
    return r;
  }

  /// Outward-rounded enclosure of a rational.
  static Interval rational(const mpq_class& q, int prec) {
    Interval r(prec);
    mpfr_set_q(r.lo_.get(), q.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi_.get(), q.get_mpq_t(), MPFR_RNDU);
    return r;
  }

  static Interval hull(const mpq_class& lo, const mpq_class& hi, int prec) {
    Interval r(prec);
    mpfr_set_q(r.lo_.get(), lo.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi_.get(), hi.get_mpq_t(), MPFR_RNDU);
    return r;
  }

  static Interval whole(int prec) {
    Interval r(prec);
    mpfr_set_inf(r.lo_.get(), -1);
    mpfr_set_inf(r.hi_.get(), 1);
    return r;
  }

  const BigFloat& lo() const { return lo_; }
  const BigFloat& hi() const { return hi_; }
  int precision() const {
    return static_cast<int>(std::max(lo_.precision(), hi_.precision()));
  }

  double lo_down() const { return lo_.to_double(MPFR_RNDD); }
  double hi_up() const { return hi_.to_double(MPFR_RNDU); }
  double mid() const {
    BigFloat m(precision() + 1);
    mpfr_add(m.get(), lo_.get(), hi_.get(), MPFR_RNDN);
    mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
    return m.to_double(MPFR_RNDN);
  }
  /// Upper bound on hi - lo.
  double width() const {
    BigFloat w(64);
    mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
    return w.to_double(MPFR_RNDU);
  }

  /// Same endpoints carried at precision >= prec (exact).
  Interval widened_to(int prec) const {
    if (precision() >= prec) return *this;
    Interval r(prec);
    mpfr_set(r.lo_.get(), lo_.get(), MPFR_RNDD);
    mpfr_set(r.hi_.get(), hi_.get(), MPFR_RNDU);
    return r;
  }

  bool is_point() const { return mpfr_equal_p(lo_.get(), hi_.get()) != 0; }
  bool is_finite() const {
    return mpfr_number_p(lo_.get()) != 0 && mpfr_number_p(hi_.get()) != 0;
  }

  bool contains(double v) const {
    return mpfr_cmp_d(lo_.get(), v) <= 0 && mpfr_cmp_d(hi_.get(), v) >= 0;
  }
  bool contains(const mpq_class& v) const {
    return mpfr_cmp_q(lo_.get(), v.get_mpq_t()) <= 0 &&
           mpfr_cmp_q(hi_.get(), v.get_mpq_t()) >= 0;
  }
  bool subset_of(const Interval& o) const {
    return mpfr_lessequal_p(o.lo_.get(), lo_.get()) && mpfr_lessequal_p(hi_.get(), o.hi_.get());
  }

  /// Exact lower/upper endpoint as a rational.
  mpq_class lo_exact() const { return to_mpq(lo_); }
  mpq_class hi_exact() const { return to_mpq(hi_); }

  std::string to_string(int digits = 17) const {
    char buf[128];
    mpfr_snprintf(buf, sizeof buf, "[%.*RDg, %.*RUg]", digits, lo_.get(), digits, hi_.get());
    return buf;
  }

  friend Interval operator-(const Interval& a) {
    Interval r(a.precision());
    mpfr_neg(r.lo_.get(), a.hi_.get(), MPFR_RNDD);
    mpfr_neg(r.hi_.get(), a.lo_.get(), MPFR_RNDU);
    return r;
  }

  friend Interval operator+(const Interval& a, const Interval& b) {
    Interval r(std::max(a.precision(), b.precision()));
    mpfr_add(r.lo_.get(), a.lo_.get(), b.lo_.get(), MPFR_RNDD);
    mpfr_add(r.hi_.get(), a.hi_.get(), b.hi_.get(), MPFR_RNDU);
    return r.sanitized();
  }

  friend Interval operator-(const Interval& a, const Interval& b) {
    Interval r(std::max(a.precision(), b.precision()));
    mpfr_sub(r.lo_.get(), a.lo_.get(), b.hi_.get(), MPFR_RNDD);
    mpfr_sub(r.hi_.get(), a.hi_.get(), b.lo_.get(), MPFR_RNDU);
    return r.sanitized();
  }

  friend Interval operator*(const Interval& a, const Interval& b) {
    const int prec = std::max(a.precision(), b.precision());
    Interval r(prec);
    BigFloat t(prec);
    bool first = true;
    for (const BigFloat* x : {&a.lo_, &a.hi_}) {
      for (const BigFloat* y : {&b.lo_, &b.hi_}) {
        mpfr_mul(t.get(), x->get(), y->get(), MPFR_RNDD);
        if (mpfr_nan_p(t.get())) return whole(prec);
        if (first || mpfr_less_p(t.get(), r.lo_.get())) mpfr_set(r.lo_.get(), t.get(), MPFR_RNDD);
        mpfr_mul(t.get(), x->get(), y->get(), MPFR_RNDU);
        if (first || mpfr_greater_p(t.get(), r.hi_.get())) mpfr_set(r.hi_.get(), t.get(), MPFR_RNDU);
        first = false;
      }
    }
    return r;
  }

  friend Interval operator/(const Interval& a, const Interval& b) {
    const int prec = std::max(a.precision(), b.precision());
    if (mpfr_sgn(b.lo_.get()) <= 0 && mpfr_sgn(b.hi_.get()) >= 0) return whole(prec);
    Interval r(prec);
    BigFloat t(prec);
    bool first = true;
    for (const BigFloat* x : {&a.lo_, &a.hi_}) {
      for (const BigFloat* y : {&b.lo_, &b.hi_}) {
        mpfr_div(t.get(), x->get(), y->get(), MPFR_RNDD);
        if (mpfr_nan_p(t.get())) return whole(prec);
        if (first || mpfr_less_p(t.get(), r.lo_.get())) mpfr_set(r.lo_.get(), t.get(), MPFR_RNDD);
        mpfr_div(t.get(), x->get(), y->get(), MPFR_RNDU);
        if (first || mpfr_greater_p(t.get(), r.hi_.get())) mpfr_set(r.hi_.get(), t.get(), MPFR_RNDU);
        first = false;
      }
    }
    return r;
  }

  /// Multiplication by 2^e, exact.
  friend Interval ldexp(const Interval& a, long e) {
    Interval r(a.precision());
    mpfr_mul_2si(r.lo_.get(), a.lo_.get(), e, MPFR_RNDD);
    mpfr_mul_2si(r.hi_.get(), a.hi_.get(), e, MPFR_RNDU);
    return r;
  }

  friend Interval abs(const Interval& a) {
    if (mpfr_sgn(a.lo_.get()) >= 0) return a;
    if (mpfr_sgn(a.hi_.get()) <= 0) return -a;
    Interval r(a.precision());
    mpfr_set_zero(r.lo_.get(), 1);
    if (mpfr_cmpabs(a.lo_.get(), a.hi_.get()) > 0)
      mpfr_neg(r.hi_.get(), a.lo_.get(), MPFR_RNDU);
    else
      mpfr_set(r.hi_.get(), a.hi_.get(), MPFR_RNDU);
    return r;
  }

  friend Interval square(const Interval& a) {
    Interval m = abs(a);
    Interval r(a.precision());
    mpfr_sqr(r.lo_.get(), m.lo_.get(), MPFR_RNDD);
    mpfr_sqr(r.hi_.get(), m.hi_.get(), MPFR_RNDU);
    return r;
  }

  friend Interval sqrt(const Interval& a) {
    Interval r(a.precision());
    if (mpfr_sgn(a.lo_.get()) <= 0)
      mpfr_set_zero(r.lo_.get(), 1);
    else
      mpfr_sqrt(r.lo_.get(), a.lo_.get(), MPFR_RNDD);
    if (mpfr_sgn(a.hi_.get()) < 0) throw std::domain_error("sqrt of a negative interval");
    mpfr_sqrt(r.hi_.get(), a.hi_.get(), MPFR_RNDU);
    return r;
  }

  friend Interval cbrt(const Interval& a) {
    Interval r(a.precision());
    mpfr_cbrt(r.lo_.get(), a.lo_.get(), MPFR_RNDD);
    mpfr_cbrt(r.hi_.get(), a.hi_.get(), MPFR_RNDU);
    return r;
  }

  friend Interval log(const Interval& a) {
    if (mpfr_sgn(a.hi_.get()) <= 0) throw std::domain_error("log of a nonpositive interval");
    Interval r(a.precision());
    if (mpfr_sgn(a.lo_.get()) <= 0)
      mpfr_set_inf(r.lo_.get(), -1);
    else
      mpfr_log(r.lo_.get(), a.lo_.get(), MPFR_RNDD);
    mpfr_log(r.hi_.get(), a.hi_.get(), MPFR_RNDU);
    return r;
  }

  friend Interval exp(const Interval& a) {
    Interval r(a.precision());
    mpfr_exp(r.lo_.get(), a.lo_.get(), MPFR_RNDD);
    mpfr_exp(r.hi_.get(), a.hi_.get(), MPFR_RNDU);
    return r;
  }

  /// a^r for a > 0 and rational r.
  friend Interval pow(const Interval& a, const mpq_class& r) {
    if (r == 0) return Interval::exact(1.0);
    return exp(Interval::rational(r, a.precision()) * log(a));
  }

  friend Interval min(const Interval& a, const Interval& b) {
    Interval r(std::max(a.precision(), b.precision()));
    mpfr_min(r.lo_.get(), a.lo_.get(), b.lo_.get(), MPFR_RNDD);
    mpfr_min(r.hi_.get(), a.hi_.get(), b.hi_.get(), MPFR_RNDU);
    return r;
  }

  friend Interval max(const Interval& a, const Interval& b) {
    Interval r(std::max(a.precision(), b.precision()));
    mpfr_max(r.lo_.get(), a.lo_.get(), b.lo_.get(), MPFR_RNDD);
    mpfr_max(r.hi_.get(), a.hi_.get(), b.hi_.get(), MPFR_RNDU);
    return r;
  }

  /// Smallest interval containing both.
  friend Interval hull(const Interval& a, const Interval& b) {
    Interval r(std::max(a.precision(), b.precision()));
    mpfr_min(r.lo_.get(), a.lo_.get(), b.lo_.get(), MPFR_RNDD);
    mpfr_max(r.hi_.get(), a.hi_.get(), b.hi_.get(), MPFR_RNDU);
    return r;
  }

  /// Certainly a < b / certainly a >= b / overlap.
  friend Tri less(const Interval& a, const Interval& b) {
    if (mpfr_less_p(a.hi_.get(), b.lo_.get())) return Tri::yes;
    if (mpfr_greaterequal_p(a.lo_.get(), b.hi_.get())) return Tri::no;
    return Tri::unknown;
  }

  friend Tri less_eq(const Interval& a, const Interval& b) {
    if (mpfr_lessequal_p(a.hi_.get(), b.lo_.get())) return Tri::yes;
    if (mpfr_greater_p(a.lo_.get(), b.hi_.get())) return Tri::no;
    return Tri::unknown;
  }

  friend Tri is_zero(const Interval& a) {
    if (mpfr_zero_p(a.lo_.get()) && mpfr_zero_p(a.hi_.get())) return Tri::yes;
    if (mpfr_sgn(a.lo_.get()) > 0 || mpfr_sgn(a.hi_.get()) < 0) return Tri::no;
    return Tri::unknown;
  }

private:
  static mpq_class to_mpq(const BigFloat& f) {
    if (!mpfr_number_p(f.get())) throw std::domain_error("non-finite endpoint");
    mpz_class m;
    mpfr_exp_t e = mpfr_get_z_2exp(m.get_mpz_t(), f.get());
    mpq_class q(m);
    if (e >= 0)
      mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    else
      mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    q.canonicalize();
    return q;
  }

  Interval sanitized() {
    if (mpfr_nan_p(lo_.get()) || mpfr_nan_p(hi_.get())) return whole(precision());
    return std::move(*this);
  }

  BigFloat lo_;
  BigFloat hi_;
};

namespace detail {

inline double widen_down(double x) {
  return x - (std::fabs(x) * 0x1p-50 + 0x1p-1000);
}
inline double widen_up(double x) {
  return x + (std::fabs(x) * 0x1p-50 + 0x1p-1000);
}

}  // namespace detail

/// Double-precision enclosure. Cheap filter in front of Interval.
struct FastInterval {
  double lo = 0.0;
  double hi = 0.0;

  static FastInterval exact(double v) { return {v, v}; }
  static FastInterval from(const Interval& i) { return {i.lo_down(), i.hi_up()}; }
  static FastInterval whole() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  static FastInterval integer(std::int64_t n) {
    const double d = static_cast<double>(n);
    if (std::fabs(d) <= 0x1p53) return {d, d};
    return {detail::widen_down(d), detail::widen_up(d)};
  }

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }

  friend FastInterval operator-(FastInterval a) { return {-a.hi, -a.lo}; }
  friend FastInterval operator+(FastInterval a, FastInterval b) {
    return {detail::widen_down(a.lo + b.lo), detail::widen_up(a.hi + b.hi)};
  }
  friend FastInterval operator-(FastInterval a, FastInterval b) {
    return {detail::widen_down(a.lo - b.hi), detail::widen_up(a.hi - b.lo)};
  }
  friend FastInterval operator*(FastInterval a, FastInterval b) {
    const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    if (std::isnan(p1) || std::isnan(p2) || std::isnan(p3) || std::isnan(p4)) return whole();
    return {detail::widen_down(std::min({p1, p2, p3, p4})),
            detail::widen_up(std::max({p1, p2, p3, p4}))};
  }
  friend FastInterval operator/(FastInterval a, FastInterval b) {
    if (b.lo <= 0.0 && b.hi >= 0.0) return whole();
    const double p1 = a.lo / b.lo, p2 = a.lo / b.hi, p3 = a.hi / b.lo, p4 = a.hi / b.hi;
    if (std::isnan(p1) || std::isnan(p2) || std::isnan(p3) || std::isnan(p4)) return whole();
    return {detail::widen_down(std::min({p1, p2, p3, p4})),
            detail::widen_up(std::max({p1, p2, p3, p4}))};
  }
  friend FastInterval abs(FastInterval a) {
    if (a.lo >= 0.0) return a;
    if (a.hi <= 0.0) return {-a.hi, -a.lo};
    return {0.0, std::max(-a.lo, a.hi)};
  }
  friend FastInterval square(FastInterval a) {
    FastInterval m = abs(a);
    return {detail::widen_down(m.lo * m.lo), detail::widen_up(m.hi * m.hi)};
  }
  friend FastInterval min(FastInterval a, FastInterval b) {
    return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)};
  }
  friend FastInterval max(FastInterval a, FastInterval b) {
    return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)};
  }
  friend Tri less(FastInterval a, FastInterval b) {
    if (a.hi < b.lo) return Tri::yes;
    if (a.lo >= b.hi) return Tri::no;
    return Tri::unknown;
  }
  friend Tri less_eq(FastInterval a, FastInterval b) {
    if (a.hi <= b.lo) return Tri::yes;
    if (a.lo > b.hi) return Tri::no;
    return Tri::unknown;
  }
  friend Tri is_zero(FastInterval a) {
    if (a.lo == 0.0 && a.hi == 0.0) return Tri::yes;
    if (a.lo > 0.0 || a.hi < 0.0) return Tri::no;
    return Tri::unknown;
  }
};

/// Interval-like carriers usable by the templated predicates.
template <class I>
concept IntervalLike = requires(I a, I b) {
  { a + b } -> std::convertible_to<I>;
  { a - b } -> std::convertible_to<I>;
  { a * b } -> std::convertible_to<I>;
  { a / b } -> std::convertible_to<I>;
  { abs(a) } -> std::convertible_to<I>;
  { less(a, b) } -> std::same_as<Tri>;
  { less_eq(a, b) } -> std::same_as<Tri>;
};

template <IntervalLike I>
Tri greater(const I& a, const I& b) { return less(b, a); }
template <IntervalLike I>
Tri greater_eq(const I& a, const I& b) { return less_eq(b, a); }

/// Lift an exact double into carrier I.
template <class I>
I lift(double v);
template <>
inline FastInterval lift<FastInterval>(double v) { return FastInterval::exact(v); }
template <>
inline Interval lift<Interval>(double v) { return Interval::exact(v); }

/// Lift an MPFR enclosure into carrier I (outward for doubles).
template <class I>
I lift(const Interval& v);
template <>
inline FastInterval lift<FastInterval>(const Interval& v) { return FastInterval::from(v); }
template <>
inline Interval lift<Interval>(const Interval& v) { return v; }

}  // namespace mda
