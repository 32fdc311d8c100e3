#pragma once

// Certified evaluation of irrational inputs.
//
// A RealSpec is either a quadratic surd (a + b·sqrt(d)) / c or a decimal ball.
// eval() returns the dyadic cell [k, k+1]·2^-p that contains the value, with
// k = floor(v·2^p) computed exactly by integer square root. Cells at p+1 nest
// inside cells at p, so refinement is monotone by construction.

#include <gmpxx.h>

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "mda/errors.hpp"
#include "mda/interval.hpp"
#include "mda/rational.hpp"

namespace mda {

struct QuadraticSurd {
  mpz_class a, b, c, d;  // value (a + b*sqrt(d)) / c
};

struct DecimalBall {
  std::string center_text;
  mpq_class center;
  mpq_class radius;
};

class RealSpec {
public:
  static RealSpec surd(const mpz_class& a, const mpz_class& b, const mpz_class& c, const mpz_class& d) {
    if (d < 2) throw std::invalid_argument("surd radicand must be >= 2");
    if (mpz_perfect_square_p(d.get_mpz_t())) throw std::invalid_argument("surd radicand must not be a perfect square");
    if (b == 0) throw std::invalid_argument("surd coefficient b must be nonzero");
    if (c == 0) throw std::invalid_argument("surd denominator must be nonzero");
    return RealSpec(QuadraticSurd{a, b, c, d});
  }
  static RealSpec sqrt_of(long d) { return surd(0, 1, 1, d); }
  static RealSpec golden() { return surd(1, 1, 2, 5); }

  static RealSpec ball(std::string_view center, std::string_view radius) {
    auto c = parse_rational(center);
    if (!c || center.find('/') != std::string_view::npos)
      throw std::invalid_argument("ball center must be a decimal: '" + std::string(center) + "'");
    auto r = parse_rational(radius);
    if (!r || *r < 0) throw std::invalid_argument("ball radius must be a nonnegative rational");
    return RealSpec(DecimalBall{std::string(center), *c, *r});
  }

  /// `sqrt:D`, `quad:A,B,C,D`, `dec:CENTER:RADIUS`.
  static RealSpec parse(std::string_view s) {
    auto bad = [&] { return std::invalid_argument("bad real spec '" + std::string(s) + "'"); };
    auto integer = [&](std::string_view t) {
      if (t.empty()) throw bad();
      std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
      if (i == t.size()) throw bad();
      for (std::size_t k = i; k < t.size(); ++k)
        if (!std::isdigit(static_cast<unsigned char>(t[k]))) throw bad();
      return mpz_class(std::string(t[0] == '+' ? t.substr(1) : t), 10);
    };
    if (s.rfind("sqrt:", 0) == 0) {
      return surd(0, 1, 1, integer(s.substr(5)));
    }
    if (s.rfind("quad:", 0) == 0) {
      std::string_view rest = s.substr(5);
      mpz_class parts[4];
      for (int k = 0; k < 4; ++k) {
        auto comma = rest.find(',');
        if ((k < 3) == (comma == std::string_view::npos)) throw bad();
        parts[k] = integer(rest.substr(0, comma));
        rest = k < 3 ? rest.substr(comma + 1) : std::string_view{};
      }
      return surd(parts[0], parts[1], parts[2], parts[3]);
    }
    if (s.rfind("dec:", 0) == 0) {
      std::string_view rest = s.substr(4);
      auto colon = rest.find(':');
      if (colon == std::string_view::npos) throw bad();
      if (rest.find_first_of(" \t") != std::string_view::npos) throw bad();
      return ball(rest.substr(0, colon), rest.substr(colon + 1));
    }
    throw bad();
  }

  std::string to_string() const {
    if (auto* s = std::get_if<QuadraticSurd>(&v_)) {
      if (s->a == 0 && s->b == 1 && s->c == 1) return "sqrt:" + s->d.get_str();
      return "quad:" + s->a.get_str() + "," + s->b.get_str() + "," + s->c.get_str() + "," + s->d.get_str();
    }
    const auto& b = std::get<DecimalBall>(v_);
    return "dec:" + b.center_text + ":" + format_rational(b.radius);
  }

  bool is_surd() const { return std::holds_alternative<QuadraticSurd>(v_); }
  const QuadraticSurd* as_surd() const { return std::get_if<QuadraticSurd>(&v_); }
  const DecimalBall* as_ball() const { return std::get_if<DecimalBall>(&v_); }

private:
  explicit RealSpec(std::variant<QuadraticSurd, DecimalBall> v) : v_(std::move(v)) {}
  std::variant<QuadraticSurd, DecimalBall> v_;
};

/// The pair (alpha, beta). Irrationality is a documented precondition that is
/// verified for surds and cannot be for decimal balls.
struct Pair {
  RealSpec alpha;
  RealSpec beta;
};

namespace detail {

/// floor((a + b*sqrt(d)) / c * 2^p) for an irrational surd value.
inline mpz_class surd_floor_scaled(const mpz_class& a, const mpz_class& b, const mpz_class& c,
                                   const mpz_class& d, unsigned long p) {
  mpz_class shifted_a;
  mpz_mul_2exp(shifted_a.get_mpz_t(), a.get_mpz_t(), p);
  mpz_class radicand = b * b * d;
  mpz_mul_2exp(radicand.get_mpz_t(), radicand.get_mpz_t(), 2 * p);
  mpz_class root;
  mpz_sqrt(root.get_mpz_t(), radicand.get_mpz_t());
  // b*2^p*sqrt(d) lies strictly between w0 and w0 + 1.
  mpz_class w0 = b > 0 ? mpz_class(root) : mpz_class(-root - 1);
  mpz_class n0 = shifted_a + w0;
  mpz_class out;
  if (c > 0) {
    mpz_fdiv_q(out.get_mpz_t(), n0.get_mpz_t(), c.get_mpz_t());
  } else {
    mpz_class neg_floor = -n0 - 1;
    mpz_class neg_c = -c;
    mpz_fdiv_q(out.get_mpz_t(), neg_floor.get_mpz_t(), neg_c.get_mpz_t());
  }
  return out;
}

/// Scaled integer endpoints [klo, khi] with value in [klo, khi]·2^-p.
struct ScaledCell {
  mpz_class klo, khi;
  unsigned long p;
};

inline ScaledCell multiple_cell(const RealSpec& spec, const mpz_class& q, unsigned long p) {
  if (q == 0) return {0, 0, p};
  if (const auto* s = spec.as_surd()) {
    mpz_class k = surd_floor_scaled(q * s->a, q * s->b, s->c, s->d, p);
    return {k, k + 1, p};
  }
  const auto& b = *spec.as_ball();
  mpq_class center = b.center * q;
  mpq_class radius = b.radius * abs(q);
  mpq_class lo = center - radius;
  mpq_class hi = center + radius;
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 2, p);
  mpz_class num_lo = lo.get_num() * scale, num_hi = hi.get_num() * scale;
  mpz_class klo, khi;
  mpz_fdiv_q(klo.get_mpz_t(), num_lo.get_mpz_t(), lo.get_den_mpz_t());
  mpz_cdiv_q(khi.get_mpz_t(), num_hi.get_mpz_t(), hi.get_den_mpz_t());
  return {klo, khi, p};
}

}  // namespace detail

/// Certified enclosure of the value: exact dyadic cell of width 2^-precision
/// (surds), or the ball rounded outward to the 2^-precision grid.
inline Interval eval(const RealSpec& spec, int precision) {
  if (precision < 1) throw std::invalid_argument("precision must be positive");
  auto cell = detail::multiple_cell(spec, 1, static_cast<unsigned long>(precision));
  return Interval::dyadic(cell.klo, cell.khi, static_cast<long>(cell.p));
}

/// Enclosure of q·value with the same cell semantics.
inline Interval eval_multiple(const RealSpec& spec, const mpz_class& q, int precision) {
  auto cell = detail::multiple_cell(spec, q, static_cast<unsigned long>(precision));
  return Interval::dyadic(cell.klo, cell.khi, static_cast<long>(cell.p));
}

/// Enclosure of ||q·value||, contained in [0, 1/2].
inline Interval dist_nearest_int(const RealSpec& spec, const mpz_class& q, int precision) {
  if (q < 1) throw std::invalid_argument("dist_nearest_int requires q >= 1");
  const unsigned long p = static_cast<unsigned long>(std::max(precision, 1));
  auto cell = detail::multiple_cell(spec, q, p);
  mpz_class unit;
  mpz_ui_pow_ui(unit.get_mpz_t(), 2, p);
  const mpz_class half = unit / 2;
  mpz_class n;
  mpz_fdiv_q_2exp(n.get_mpz_t(), cell.klo.get_mpz_t(), p);
  const mpz_class base = n * unit;
  const mpz_class l = cell.klo - base;
  const mpz_class h = cell.khi - base;
  auto ambiguous = [&] {
    return AmbiguousNearestInteger(spec.to_string() + " at q=" + q.get_str());
  };
  if (h - l >= unit) throw ambiguous();
  mpz_class dlo, dhi;
  if (h <= half) {
    dlo = l;
    dhi = h;
  } else if (l < half) {
    throw ambiguous();
  } else if (h <= unit) {
    dlo = unit - h;
    dhi = unit - l;
  } else if (h <= unit + half) {
    dlo = 0;
    dhi = std::max(mpz_class(unit - l), mpz_class(h - unit));
  } else {
    throw ambiguous();
  }
  return Interval::dyadic(dlo, dhi, static_cast<long>(p));
}

/// Enclosure of ||q·alpha||·||q·beta||, contained in [0, 1/4].
inline Interval product_norm(const RealSpec& alpha, const RealSpec& beta, const mpz_class& q, int precision) {
  Interval a = dist_nearest_int(alpha, q, precision);
  Interval b = dist_nearest_int(beta, q, precision);
  return a.widened_to(precision + 8) * b;
}

/// A real number known through enclosures at any requested precision.
/// Internal plumbing for predicates; not a general expression language.
class CertifiedReal {
public:
  using Evaluator = std::function<Interval(int)>;

  explicit CertifiedReal(Evaluator f) : f_(std::make_shared<Evaluator>(std::move(f))) {}

  static CertifiedReal rational(const mpq_class& q) {
    return CertifiedReal([q](int p) { return Interval::rational(q, p); });
  }
  static CertifiedReal exact(double v) {
    return CertifiedReal([v](int) { return Interval::exact(v); });
  }
  static CertifiedReal of(const RealSpec& s) {
    return CertifiedReal([s](int p) { return eval(s, p); });
  }
  static CertifiedReal of(const ExpRational& x) {
    return CertifiedReal([x](int p) { return x.interval(p); });
  }

  Interval at(int precision) const { return (*f_)(precision); }

  friend CertifiedReal operator+(const CertifiedReal& a, const CertifiedReal& b) {
    return CertifiedReal([a, b](int p) { return a.at(p) + b.at(p); });
  }
  friend CertifiedReal operator-(const CertifiedReal& a, const CertifiedReal& b) {
    return CertifiedReal([a, b](int p) { return a.at(p) - b.at(p); });
  }
  friend CertifiedReal operator*(const CertifiedReal& a, const CertifiedReal& b) {
    return CertifiedReal([a, b](int p) { return a.at(p) * b.at(p); });
  }
  friend CertifiedReal operator/(const CertifiedReal& a, const CertifiedReal& b) {
    return CertifiedReal([a, b](int p) { return a.at(p) / b.at(p); });
  }
  friend CertifiedReal operator-(const CertifiedReal& a) {
    return CertifiedReal([a](int p) { return -a.at(p); });
  }

private:
  std::shared_ptr<const Evaluator> f_;
};

inline CertifiedReal product_norm_expr(const RealSpec& alpha, const RealSpec& beta, const mpz_class& q) {
  return CertifiedReal([alpha, beta, q](int p) { return product_norm(alpha, beta, q, p); });
}

/// x < y, decided by escalating precision until the enclosures separate.
inline bool decide_less(const CertifiedReal& x, const CertifiedReal& y,
                        int max_precision = kDefaultMaxPrecision) {
  return decide_escalating([&](int p) { return less(x.at(p), y.at(p)); }, max_precision,
                           "x < y overlaps at " + std::to_string(max_precision) + " bits");
}

}  // namespace mda
