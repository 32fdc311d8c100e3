#pragma once

// Geometry of the counting domain: the pieces Z1..Z4, R1, R2 of Z, the pieces
// DeltaX, DeltaY, S_i of H1, the (R, N, nu, V, theta) plan, the diagonal flows
// and the Lipschitz boundary covers of the flowed pieces.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mda/errors.hpp"
#include "mda/interval.hpp"
#include "mda/rational.hpp"

namespace mda {

/// Quantities governing the slicing of H1. nu is kept implicit as
/// (eps/T^2)^(1/N), so nu^N = eps/T^2 holds as an identity of symbols.
struct DecompositionPlan {
  ExpRational eps, T, Q;
  ExpRational ratio;  // T^2/eps
  long N = 0;

  /// R = log(T^2/eps).
  Interval R(int prec = 128) const { return ratio.log_interval(prec); }
  Interval log_nu(int prec = 128) const { return -R(prec) / Interval::exact(N).widened_to(prec); }
  /// nu^k for rational k.
  Interval nu_pow(const mpq_class& k, int prec = 128) const {
    if (k == 0) return Interval::exact(1L);
    return exp(Interval::rational(k, prec) * log_nu(prec));
  }
  /// nu^k as an exact c·e^r value when N divides k.
  std::optional<ExpRational> nu_pow_exact(long k) const {
    if (k % N != 0) return std::nullopt;
    return pow(ratio, static_cast<int>(-k / N));
  }
  /// Vol2(S_0) = -(eps/2)·log(nu) = eps·R/(2N).
  Interval vol_S0(int prec = 128) const {
    return eps.interval(prec) * R(prec) / Interval::exact(2 * N).widened_to(prec);
  }
  /// V = Vol3(S_0 x (0, Q]).
  Interval V(int prec = 128) const { return vol_S0(prec) * Q.interval(prec); }
  Interval log_theta(int prec = 128) const {
    return log(V(prec)) / Interval::exact(3L).widened_to(prec) -
           eps.log_interval(prec) / Interval::exact(2L).widened_to(prec);
  }
  /// theta = V^(1/3)/sqrt(eps).
  Interval theta(int prec = 128) const { return exp(log_theta(prec)); }

  std::string to_string() const {
    return "eps=" + eps.to_string() + " T=" + T.to_string() + " Q=" + Q.to_string() + " N=" + std::to_string(N);
  }
};

/// N = floor(log(T^2/eps)): larger N means larger nu = e^(-R/N), and nu <= 1/e
/// is N <= R, so the maximal nu takes the largest integer N <= R. Then
/// R/N < (N+1)/N <= 3/2 for R >= 2, hence nu lies in (e^-3/2, 1/e].
inline DecompositionPlan make_plan(const ExpRational& eps, const ExpRational& T, const ExpRational& Q) {
  if (compare(Q, ExpRational(1)) < 0) throw std::invalid_argument("Q must be >= 1");
  DecompositionPlan p;
  p.eps = eps;
  p.T = T;
  p.Q = Q;
  p.ratio = pow(T, 2) / eps;
  if (compare_log(p.ratio, 2) < 0) throw ConditionViolated("eps/T^2 > e^-2 (" + eps.to_string() + ", " + T.to_string() + ")");
  mpz_class n = floor_log(p.ratio);
  if (!n.fits_slong_p()) throw std::out_of_range("N too large");
  p.N = n.get_si();
  return p;
}

// ---------------------------------------------------------------------------
// Pieces and their membership predicates.

enum class ZPiece { Z1, Z2, Z3, Z4, R1, R2, Outside };

inline const char* name(ZPiece p) {
  switch (p) {
    case ZPiece::Z1: return "Z1";
    case ZPiece::Z2: return "Z2";
    case ZPiece::Z3: return "Z3";
    case ZPiece::Z4: return "Z4";
    case ZPiece::R1: return "R1";
    case ZPiece::R2: return "R2";
    case ZPiece::Outside: return "Outside";
  }
  return "?";
}

struct HPiece {
  enum class Kind { DeltaX, DeltaY, Slice, Outside };
  Kind kind = Kind::Outside;
  long index = 0;  // slice index when kind == Slice

  static HPiece delta_x() { return {Kind::DeltaX, 0}; }
  static HPiece delta_y() { return {Kind::DeltaY, 0}; }
  static HPiece slice(long i) { return {Kind::Slice, i}; }
  static HPiece outside() { return {Kind::Outside, 0}; }

  friend bool operator==(const HPiece& a, const HPiece& b) {
    return a.kind == b.kind && (a.kind != Kind::Slice || a.index == b.index);
  }
  std::string to_string() const {
    switch (kind) {
      case Kind::DeltaX: return "DeltaX";
      case Kind::DeltaY: return "DeltaY";
      case Kind::Slice: return "Slice(" + std::to_string(index) + ")";
      case Kind::Outside: return "Outside";
    }
    return "?";
  }
};

/// Thresholds eps, T, Q in carrier I.
template <class I>
struct ZThresholds {
  I eps, T, Q;
};

template <class I>
ZThresholds<I> z_thresholds(const ExpRational& eps, const ExpRational& T, const ExpRational& Q, int prec) {
  return {lift<I>(eps.interval(prec)), lift<I>(T.interval(prec)), lift<I>(Q.interval(prec))};
}

/// Plan thresholds in carrier I, with nu^i for i in [-N, N].
template <class I>
struct PlanThresholds {
  ZThresholds<I> z;
  I eps_T2;  // eps/T^2 = nu^N
  I T2_eps;  // T^2/eps = nu^-N
  I eps_T;   // eps/T
  long N = 0;
  std::vector<I> nu_pows;

  const I& nu_pow(long i) const { return nu_pows.at(static_cast<std::size_t>(i + N)); }
};

template <class I>
PlanThresholds<I> plan_thresholds(const DecompositionPlan& plan, int prec) {
  PlanThresholds<I> t;
  t.z = z_thresholds<I>(plan.eps, plan.T, plan.Q, prec);
  t.eps_T2 = lift<I>((plan.eps / pow(plan.T, 2)).interval(prec));
  t.T2_eps = lift<I>(plan.ratio.interval(prec));
  t.eps_T = lift<I>((plan.eps / plan.T).interval(prec));
  t.N = plan.N;
  for (long i = -plan.N; i <= plan.N; ++i) {
    if (i == -plan.N) t.nu_pows.push_back(t.T2_eps);
    else if (i == plan.N) t.nu_pows.push_back(t.eps_T2);
    else t.nu_pows.push_back(lift<I>(plan.nu_pow(i, prec)));
  }
  return t;
}

namespace pred {

template <IntervalLike I>
Tri pos(const I& v) { return less(lift<I>(0.0), v); }
template <IntervalLike I>
Tri neg(const I& v) { return less(v, lift<I>(0.0)); }

/// 0 < z <= Q.
template <IntervalLike I>
Tri z_range(const ZThresholds<I>& t, const I& z) {
  return pos(z) & less_eq(z, t.Q);
}

/// |x| <= T, |y| <= T, |xy| < eps, 0 < z <= Q.
template <IntervalLike I>
Tri in_Z(const ZThresholds<I>& t, const I& x, const I& y, const I& z) {
  const I ax = abs(x), ay = abs(y);
  return less_eq(ax, t.T) & less_eq(ay, t.T) & less(ax * ay, t.eps) & z_range(t, z);
}

/// Z_j = H_j x (0, Q] with the sign pattern of H_j:
/// H1 (+,+), H2 (-,+), H3 (+,-), H4 (-,-).
template <IntervalLike I>
Tri in_Zj(const ZThresholds<I>& t, int j, const I& x, const I& y, const I& z) {
  const bool xneg = j == 2 || j == 4;
  const bool yneg = j == 3 || j == 4;
  Tri sx = xneg ? neg(x) & less_eq(-t.T, x) : pos(x) & less_eq(x, t.T);
  Tri sy = yneg ? neg(y) & less_eq(-t.T, y) : pos(y) & less_eq(y, t.T);
  if ((sx & sy) == Tri::no) return Tri::no;
  return sx & sy & less(abs(x) * abs(y), t.eps) & z_range(t, z);
}

/// R1 = [-T, T] x {0} x (0, Q].
template <IntervalLike I>
Tri in_R1(const ZThresholds<I>& t, const I& x, const I& y, const I& z) {
  return is_zero(y) & less_eq(abs(x), t.T) & z_range(t, z);
}

/// R2 = {0} x [-T, T] x (0, Q].
template <IntervalLike I>
Tri in_R2(const ZThresholds<I>& t, const I& x, const I& y, const I& z) {
  return is_zero(x) & less_eq(abs(y), t.T) & z_range(t, z);
}

template <IntervalLike I>
Tri in_Zpiece(const ZThresholds<I>& t, ZPiece p, const I& x, const I& y, const I& z) {
  switch (p) {
    case ZPiece::Z1: return in_Zj(t, 1, x, y, z);
    case ZPiece::Z2: return in_Zj(t, 2, x, y, z);
    case ZPiece::Z3: return in_Zj(t, 3, x, y, z);
    case ZPiece::Z4: return in_Zj(t, 4, x, y, z);
    case ZPiece::R1: return in_R1(t, x, y, z);
    case ZPiece::R2: return in_R2(t, x, y, z);
    case ZPiece::Outside: return !in_Z(t, x, y, z);
  }
  return Tri::unknown;
}

/// H1: xy < eps, 0 < x <= T, 0 < y <= T.
template <IntervalLike I>
Tri in_H1(const PlanThresholds<I>& t, const I& x, const I& y) {
  return pos(x) & less_eq(x, t.z.T) & pos(y) & less_eq(y, t.z.T) & less(x * y, t.z.eps);
}

/// DeltaX: 0 < y < (eps/T^2)·x, 0 < x <= T.
template <IntervalLike I>
Tri in_DeltaX(const PlanThresholds<I>& t, const I& x, const I& y) {
  return pos(y) & less(y, t.eps_T2 * x) & pos(x) & less_eq(x, t.z.T);
}

/// DeltaY: (T^2/eps)·x <= y <= T, 0 < x < eps/T.
template <IntervalLike I>
Tri in_DeltaY(const PlanThresholds<I>& t, const I& x, const I& y) {
  return less_eq(t.T2_eps * x, y) & less_eq(y, t.z.T) & pos(x) & less(x, t.eps_T);
}

/// S_i: 0 < nu^i·x <= y < nu^(i-1)·x, xy < eps.
template <IntervalLike I>
Tri in_Slice(const PlanThresholds<I>& t, long i, const I& x, const I& y) {
  if (i < -t.N + 1 || i > t.N) throw IndexOutOfRange("slice index " + std::to_string(i));
  const I lo = t.nu_pow(i) * x;
  return pos(lo) & less_eq(lo, y) & less(y, t.nu_pow(i - 1) * x) & less(x * y, t.z.eps);
}

template <IntervalLike I>
Tri in_Hpiece(const PlanThresholds<I>& t, const HPiece& p, const I& x, const I& y) {
  switch (p.kind) {
    case HPiece::Kind::DeltaX: return in_DeltaX(t, x, y);
    case HPiece::Kind::DeltaY: return in_DeltaY(t, x, y);
    case HPiece::Kind::Slice: return in_Slice(t, p.index, x, y);
    case HPiece::Kind::Outside: return !in_H1(t, x, y);
  }
  return Tri::unknown;
}

}  // namespace pred

namespace detail {

inline constexpr std::array<ZPiece, 6> kZPieces{ZPiece::Z1, ZPiece::Z2, ZPiece::Z3,
                                               ZPiece::Z4, ZPiece::R1, ZPiece::R2};

template <IntervalLike I>
std::optional<ZPiece> classify_Z_with(const ZThresholds<I>& t, const I& x, const I& y, const I& z) {
  const Tri inside = pred::in_Z(t, x, y, z);
  if (inside == Tri::no) return ZPiece::Outside;
  if (inside == Tri::unknown) return std::nullopt;
  for (ZPiece p : kZPieces) {
    const Tri m = pred::in_Zpiece(t, p, x, y, z);
    if (m == Tri::unknown) return std::nullopt;
    if (m == Tri::yes) return p;  // R1 precedes R2: the seam point (0,0,z) is labelled R1
  }
  throw std::logic_error("point of Z in no piece");
}

template <IntervalLike I>
std::optional<HPiece> classify_H1_with(const PlanThresholds<I>& t, const I& x, const I& y, long guess) {
  const Tri inside = pred::in_H1(t, x, y);
  if (inside == Tri::no) return HPiece::outside();
  if (inside == Tri::unknown) return std::nullopt;
  bool undecided = false;
  for (HPiece p : {HPiece::delta_x(), HPiece::delta_y()}) {
    const Tri m = pred::in_Hpiece(t, p, x, y);
    if (m == Tri::yes) return p;
    if (m == Tri::unknown) undecided = true;
  }
  // The slice index is ceil(log(y/x)/log(nu)); try the double estimate first.
  auto try_slice = [&](long i) -> Tri {
    if (i < -t.N + 1 || i > t.N) return Tri::no;
    return pred::in_Slice(t, i, x, y);
  };
  for (long i : {guess, guess - 1, guess + 1}) {
    const Tri m = try_slice(i);
    if (m == Tri::yes) return HPiece::slice(i);
    if (m == Tri::unknown) undecided = true;
  }
  for (long i = -t.N + 1; i <= t.N; ++i) {
    const Tri m = try_slice(i);
    if (m == Tri::yes) return HPiece::slice(i);
    if (m == Tri::unknown) undecided = true;
  }
  if (undecided) return std::nullopt;
  throw std::logic_error("point of H1 in no piece");
}

}  // namespace detail

/// The piece of Z containing (x, y, z), or Outside. Exact inputs; escalates
/// precision of the thresholds and throws UndecidablePredicate on exact ties.
inline ZPiece classify_Z(double x, double y, double z, const ExpRational& eps, const ExpRational& T,
                         const ExpRational& Q, int max_precision = kDefaultMaxPrecision) {
  {
    auto t = z_thresholds<FastInterval>(eps, T, Q, 128);
    if (auto r = detail::classify_Z_with(t, FastInterval::exact(x), FastInterval::exact(y), FastInterval::exact(z)))
      return *r;
  }
  for (int p : precision_schedule(max_precision)) {
    auto t = z_thresholds<Interval>(eps, T, Q, p);
    if (auto r = detail::classify_Z_with(t, Interval::exact(x), Interval::exact(y), Interval::exact(z))) return *r;
  }
  throw UndecidablePredicate("classify_Z at a piece boundary");
}

/// Precomputed classifier for many points against one plan.
class H1Classifier {
public:
  explicit H1Classifier(DecompositionPlan plan, int max_precision = kDefaultMaxPrecision)
      : plan_(std::move(plan)), fast_(plan_thresholds<FastInterval>(plan_, 128)),
        log_nu_(plan_.log_nu(64).mid()), max_precision_(max_precision) {}

  HPiece operator()(double x, double y) const {
    long guess = 0;
    if (x > 0 && y > 0) {
      const double g = std::ceil(std::log(y / x) / log_nu_);
      if (std::isfinite(g) && std::fabs(g) < 1e9) guess = static_cast<long>(g);
    }
    if (auto r = detail::classify_H1_with(fast_, FastInterval::exact(x), FastInterval::exact(y), guess)) return *r;
    for (int p : precision_schedule(max_precision_)) {
      auto t = exact(p);
      if (auto r = detail::classify_H1_with(*t, Interval::exact(x), Interval::exact(y), guess)) return *r;
    }
    throw UndecidablePredicate("classify_H1 at a piece boundary");
  }

  const PlanThresholds<FastInterval>& fast() const { return fast_; }
  const DecompositionPlan& plan() const { return plan_; }

  /// Exact thresholds, cached per precision.
  const PlanThresholds<Interval>* exact(int prec) const {
    for (auto& [p, t] : exact_)
      if (p == prec) return &t;
    exact_.emplace_back(prec, plan_thresholds<Interval>(plan_, prec));
    return &exact_.back().second;
  }

private:
  DecompositionPlan plan_;
  PlanThresholds<FastInterval> fast_;
  double log_nu_;
  int max_precision_;
  mutable std::vector<std::pair<int, PlanThresholds<Interval>>> exact_;
};

inline HPiece classify_H1(double x, double y, const DecompositionPlan& plan) { return H1Classifier(plan)(x, y); }

/// Monte Carlo evidence that the pieces partition Z and H1.
struct PartitionReport {
  std::uint64_t z_samples = 0, z_inside = 0, z_failures = 0;
  std::uint64_t h_samples = 0, h_inside = 0, h_failures = 0;
  bool nu_identity = false;  // nu^N = eps/T^2 and nu^-N = T^2/eps as exact symbols
  bool holds() const { return z_failures == 0 && h_failures == 0 && nu_identity; }
};

namespace detail {

/// Decides a predicate on the fast carrier, then on exact thresholds.
template <class Fast, class Exact>
Tri decide_point(Fast&& fast, Exact&& exact) {
  Tri t = fast();
  if (t != Tri::unknown) return t;
  for (int p : {128, 256}) {
    t = exact(p);
    if (t != Tri::unknown) return t;
  }
  return Tri::unknown;
}

}  // namespace detail

/// Draws `samples` points for each level (half uniform over the bounding box,
/// half with log-uniform magnitudes so that thin pieces are reached), counts
/// the pieces containing each point and compares with the classifiers.
inline PartitionReport partition_check(const DecompositionPlan& plan, std::uint64_t samples, std::uint64_t seed) {
  PartitionReport rep;
  rep.nu_identity = plan.nu_pow_exact(plan.N) == plan.eps / pow(plan.T, 2) &&
                    plan.nu_pow_exact(-plan.N) == pow(plan.T, 2) / plan.eps;
  const double T = plan.T.approx(), Q = plan.Q.approx();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto coord = [&](bool log_scale) {
    return log_scale ? T * std::pow(10.0, -7.0 * u01(rng)) : T * u01(rng);
  };

  const auto zf = z_thresholds<FastInterval>(plan.eps, plan.T, plan.Q, 128);
  const auto z128 = z_thresholds<Interval>(plan.eps, plan.T, plan.Q, 128);
  const auto z256 = z_thresholds<Interval>(plan.eps, plan.T, plan.Q, 256);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const bool ls = s % 2 == 1;
    const double x = (u01(rng) < 0.5 ? -1 : 1) * coord(ls), y = (u01(rng) < 0.5 ? -1 : 1) * coord(ls);
    const double z = Q * u01(rng);
    ++rep.z_samples;
    int hits = 0;
    std::optional<ZPiece> hit;
    bool unknown = false;
    for (ZPiece p : detail::kZPieces) {
      const Tri t = detail::decide_point(
          [&] { return pred::in_Zpiece(zf, p, FastInterval::exact(x), FastInterval::exact(y), FastInterval::exact(z)); },
          [&](int pr) {
            return pred::in_Zpiece(pr <= 128 ? z128 : z256, p, Interval::exact(x), Interval::exact(y),
                                   Interval::exact(z));
          });
      if (t == Tri::unknown) unknown = true;
      if (t == Tri::yes) {
        ++hits;
        if (!hit) hit = p;
      }
    }
    if (hits > 0) ++rep.z_inside;
    const bool seam = x == 0.0 && y == 0.0;
    bool ok = !unknown && (hits == 1 || hits == 0 || (seam && hits == 2));
    if (ok) {
      const ZPiece c = classify_Z(x, y, z, plan.eps, plan.T, plan.Q);
      ok = hits == 0 ? c == ZPiece::Outside : c == *hit;
    }
    if (!ok) ++rep.z_failures;
  }

  H1Classifier cls(plan);
  const auto& hf = cls.fast();
  for (std::uint64_t s = 0; s < samples; ++s) {
    const bool ls = s % 2 == 1;
    const double x = coord(ls), y = coord(ls);
    ++rep.h_samples;
    const auto fx = FastInterval::exact(x), fy = FastInterval::exact(y);
    const auto ex = Interval::exact(x), ey = Interval::exact(y);
    auto decide = [&](const HPiece& h) {
      return detail::decide_point([&] { return pred::in_Hpiece(hf, h, fx, fy); },
                                  [&](int pr) { return pred::in_Hpiece(*cls.exact(pr), h, ex, ey); });
    };
    const Tri inside = detail::decide_point([&] { return pred::in_H1(hf, fx, fy); },
                                            [&](int pr) { return pred::in_H1(*cls.exact(pr), ex, ey); });
    if (inside == Tri::unknown) {
      ++rep.h_failures;
      continue;
    }
    std::vector<HPiece> all{HPiece::delta_x(), HPiece::delta_y()};
    for (long i = -plan.N + 1; i <= plan.N; ++i) all.push_back(HPiece::slice(i));
    int hits = 0;
    std::optional<HPiece> hit;
    bool unknown = false;
    for (const auto& h : all) {
      const Tri t = decide(h);
      if (t == Tri::unknown) unknown = true;
      if (t == Tri::yes) {
        ++hits;
        if (!hit) hit = h;
      }
    }
    bool ok = !unknown && hits == (inside == Tri::yes ? 1 : 0);
    if (inside == Tri::yes) ++rep.h_inside;
    if (ok) ok = cls(x, y) == (hit ? *hit : HPiece::outside());
    if (!ok) ++rep.h_failures;
  }
  return rep;
}

inline Interval vol_S0(const DecompositionPlan& plan, int prec = 128) { return plan.vol_S0(prec); }
inline Interval vol_slice3(const DecompositionPlan& plan, int prec = 128) { return plan.V(prec); }

// ---------------------------------------------------------------------------
// Diagonal maps.

/// diag(s_k · theta^(a_k) · nu^(b_k)) with signs s_k, integer a_k and rational
/// b_k. The determinant is decided symbolically.
struct DiagonalMap {
  std::array<int, 3> sign{1, 1, 1};
  std::array<int, 3> theta_exp{0, 0, 0};
  std::array<mpq_class, 3> nu_exp{0, 0, 0};
  std::optional<DecompositionPlan> plan;  // needed when any exponent is nonzero

  static DiagonalMap identity() { return {}; }

  bool is_identity() const {
    for (int k = 0; k < 3; ++k)
      if (sign[k] != 1 || theta_exp[k] != 0 || nu_exp[k] != 0) return false;
    return true;
  }
  bool has_flow() const {
    for (int k = 0; k < 3; ++k)
      if (theta_exp[k] != 0 || nu_exp[k] != 0) return true;
    return false;
  }

  /// |det| = 1 as an identity of exponents.
  bool unit_det() const {
    return theta_exp[0] + theta_exp[1] + theta_exp[2] == 0 && nu_exp[0] + nu_exp[1] + nu_exp[2] == 0;
  }
  int det_sign() const { return sign[0] * sign[1] * sign[2]; }

  Interval entry(int k, int prec = 128) const {
    Interval s = Interval::exact(static_cast<long>(sign[k]));
    if (theta_exp[k] == 0 && nu_exp[k] == 0) return s;
    const DecompositionPlan& p = *plan;
    Interval e = Interval::exact(static_cast<long>(theta_exp[k])).widened_to(prec) * p.log_theta(prec) +
                 Interval::rational(nu_exp[k], prec) * p.log_nu(prec);
    return s * exp(e);
  }

  Interval det(int prec = 128) const { return entry(0, prec) * entry(1, prec) * entry(2, prec); }

  friend DiagonalMap compose(const DiagonalMap& a, const DiagonalMap& b) {
    DiagonalMap r;
    for (int k = 0; k < 3; ++k) {
      r.sign[k] = a.sign[k] * b.sign[k];
      r.theta_exp[k] = a.theta_exp[k] + b.theta_exp[k];
      r.nu_exp[k] = a.nu_exp[k] + b.nu_exp[k];
    }
    r.plan = a.plan ? a.plan : b.plan;
    return r;
  }

  DiagonalMap inverse() const {
    DiagonalMap r = *this;
    for (int k = 0; k < 3; ++k) {
      r.theta_exp[k] = -theta_exp[k];
      r.nu_exp[k] = -nu_exp[k];
    }
    return r;
  }

  friend bool operator==(const DiagonalMap& a, const DiagonalMap& b) {
    return a.sign == b.sign && a.theta_exp == b.theta_exp && a.nu_exp == b.nu_exp;
  }

  std::string to_string() const {
    std::string s = "diag(";
    for (int k = 0; k < 3; ++k) {
      if (k) s += ", ";
      s += sign[k] < 0 ? "-" : "";
      s += "theta^" + std::to_string(theta_exp[k]) + "*nu^" + nu_exp[k].get_str();
    }
    return s + ")";
  }
};

/// phi_i = G_theta o G_i = diag(theta·nu^(i/2), theta·nu^(-i/2), theta^-2).
inline DiagonalMap flow_map(const DecompositionPlan& plan, long i) {
  if (i < -plan.N + 1 || i > plan.N) throw IndexOutOfRange("flow index " + std::to_string(i));
  DiagonalMap m;
  m.theta_exp = {1, 1, -2};
  m.nu_exp = {mpq_class(i, 2), mpq_class(-i, 2), 0};
  m.nu_exp[0].canonicalize();
  m.nu_exp[1].canonicalize();
  m.plan = plan;
  return m;
}

/// tau_1 = id, tau_2 flips x, tau_3 flips y, tau_4 flips both.
inline DiagonalMap tau_map(int j) {
  if (j < 1 || j > 4) throw IndexOutOfRange("tau index " + std::to_string(j));
  DiagonalMap m;
  if (j == 2 || j == 4) m.sign[0] = -1;
  if (j == 3 || j == 4) m.sign[1] = -1;
  return m;
}

/// The flow paired with a piece: phi_i for S_i, phi_N for DeltaX,
/// phi_{-N+1} for DeltaY.
inline long paired_flow_index(const DecompositionPlan& plan, const HPiece& piece) {
  switch (piece.kind) {
    case HPiece::Kind::Slice: return piece.index;
    case HPiece::Kind::DeltaX: return plan.N;
    case HPiece::Kind::DeltaY: return -plan.N + 1;
    case HPiece::Kind::Outside: break;
  }
  throw std::invalid_argument("no flow paired with Outside");
}

// ---------------------------------------------------------------------------
// Sampling, containment and Lipschitz covers (double precision geometry).

namespace detail {

/// Double-precision plan numbers for the samplers.
struct PlanDoubles {
  double eps, T, Q, nu, V, theta, cube;  // cube = V^(1/3)
  long N;

  explicit PlanDoubles(const DecompositionPlan& p)
      : eps(p.eps.approx()), T(p.T.approx()), Q(p.Q.approx()), nu(exp(p.log_nu(64)).mid()),
        V(p.V(64).mid()), theta(p.theta(64).mid()), cube(std::cbrt(V)), N(p.N) {}

  double nu_pow(double k) const { return std::pow(nu, k); }
};

/// Bounding box [0, bx] x [0, by] of a piece of H1 in base coordinates.
inline std::array<double, 2> piece_box(const PlanDoubles& d, const HPiece& piece) {
  switch (piece.kind) {
    case HPiece::Kind::Slice: {
      const double i = static_cast<double>(piece.index);
      return {d.nu_pow(-i / 2) * std::sqrt(d.eps), d.nu_pow(i / 2) * std::sqrt(d.eps / d.nu)};
    }
    case HPiece::Kind::DeltaX: return {d.T, d.eps / d.T};
    case HPiece::Kind::DeltaY: return {d.eps / d.T, d.T};
    case HPiece::Kind::Outside: break;
  }
  throw std::invalid_argument("Outside has no box");
}

}  // namespace detail

/// Uniform samples of piece x (0, Q] by rejection inside the bounding box.
class PieceSampler {
public:
  PieceSampler(const H1Classifier& cls, HPiece piece) : cls_(cls), piece_(piece), d_(cls.plan()) {
    box_ = detail::piece_box(d_, piece_);
  }

  template <class Rng>
  std::array<double, 3> operator()(Rng& rng) const {
    std::uniform_real_distribution<double> ux(0.0, box_[0]), uy(0.0, box_[1]), uz(0.0, d_.Q);
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const double x = ux(rng), y = uy(rng), z = uz(rng);
      if (z <= 0.0) continue;
      if (pred::in_Hpiece(cls_.fast(), piece_, FastInterval::exact(x), FastInterval::exact(y)) == Tri::yes)
        return {x, y, z};
    }
    throw std::runtime_error("rejection sampler made no progress for " + piece_.to_string());
  }

  const std::array<double, 2>& box() const { return box_; }

private:
  const H1Classifier& cls_;
  HPiece piece_;
  detail::PlanDoubles d_;
  std::array<double, 2> box_;
};

struct ContainmentReport {
  HPiece piece;
  long flow_index = 0;
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  std::array<double, 3> worst_point{0, 0, 0};  // first violating point, base coordinates
  double max_coordinate = 0.0;                 // max image coordinate over samples
  double bound = 0.0;                          // 3·V^(1/3)
  bool holds() const { return violations == 0; }
};

/// Checks phi(piece x (0, Q]) inside [0, 3V^(1/3)]^3 on uniform samples, plus
/// the extreme heights z -> 0+ and z = Q.
inline ContainmentReport containment_check(const H1Classifier& cls, const HPiece& piece, std::uint64_t samples,
                                           std::uint64_t seed) {
  const DecompositionPlan& plan = cls.plan();
  ContainmentReport rep;
  rep.piece = piece;
  rep.flow_index = paired_flow_index(plan, piece);
  const DiagonalMap flow = flow_map(plan, rep.flow_index);
  std::array<FastInterval, 3> e;
  for (int k = 0; k < 3; ++k) e[k] = FastInterval::from(flow.entry(k));
  const Interval bound_exact = Interval::exact(3L) * cbrt(plan.V());
  const FastInterval bound = FastInterval::from(bound_exact);
  rep.bound = bound.lo;
  const double Qlo = plan.Q.interval(64).lo_down();

  PieceSampler sampler(cls, piece);
  std::mt19937_64 rng(seed);
  auto check = [&](const std::array<double, 3>& pt) {
    ++rep.samples;
    Tri ok = Tri::yes;
    for (int k = 0; k < 3; ++k) {
      const FastInterval w = e[k] * FastInterval::exact(pt[k]);
      rep.max_coordinate = std::max(rep.max_coordinate, w.hi);
      ok = ok & less_eq(FastInterval::exact(0.0), w) & less_eq(w, bound);
    }
    if (ok == Tri::unknown) {
      ok = Tri::yes;
      for (int k = 0; k < 3; ++k) {
        const Interval w = flow.entry(k, 256) * Interval::exact(pt[k]);
        ok = ok & less_eq(Interval::exact(0.0), w) & less_eq(w, Interval::exact(3L) * cbrt(plan.V(256)));
      }
    }
    if (ok != Tri::yes) {
      if (rep.violations == 0) rep.worst_point = pt;
      ++rep.violations;
    }
  };
  for (std::uint64_t s = 0; s < samples; ++s) check(sampler(rng));
  auto edge = sampler(rng);
  edge[2] = std::numeric_limits<double>::denorm_min();
  check(edge);
  edge[2] = Qlo;
  check(edge);
  return rep;
}

/// One parametrization [0,1]^2 -> R^3 of a boundary piece.
struct CoverPiece {
  std::string name;
  bool sheet = false;
  std::function<std::array<double, 3>(double, double)> map;
  /// Parameters of the nearest (or a near) image point to p.
  std::function<std::array<double, 2>(const std::array<double, 3>&)> locate;
};

struct CoverReport {
  HPiece piece;
  std::vector<std::string> pieces;
  double lipschitz_bound = 0.0;  // C_L·V^(1/3)
  double sheet_bound = 0.0;      // 4·V^(1/3)
  double max_observed = 0.0;
  double max_sheet = 0.0;        // 0 when the piece has no curved sheet
  double coverage_gap = 0.0;
  double mesh = 0.0;
  bool holds() const {
    return max_observed <= lipschitz_bound && max_sheet <= sheet_bound && coverage_gap <= mesh;
  }
};

namespace detail {

using Vec3 = std::array<double, 3>;

inline double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

inline double clamp01(double t) { return t < 0 ? 0 : (t > 1 ? 1 : t); }

/// o + t1·u + t2·w with u orthogonal to w; locate is the exact projection.
inline CoverPiece affine_piece(std::string name, Vec3 o, Vec3 u, Vec3 w) {
  CoverPiece p;
  p.name = std::move(name);
  p.map = [o, u, w](double t1, double t2) {
    return Vec3{o[0] + t1 * u[0] + t2 * w[0], o[1] + t1 * u[1] + t2 * w[1], o[2] + t1 * u[2] + t2 * w[2]};
  };
  p.locate = [o, u, w](const Vec3& x) {
    auto coord = [&](const Vec3& v) {
      const double n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
      if (n2 == 0) return 0.0;
      return clamp01(((x[0] - o[0]) * v[0] + (x[1] - o[1]) * v[1] + (x[2] - o[2]) * v[2]) / n2);
    };
    return std::array<double, 2>{coord(u), coord(w)};
  };
  return p;
}

/// The five boundary pieces of the flowed piece, in flowed coordinates.
inline std::vector<CoverPiece> cover_pieces(const PlanDoubles& d, const HPiece& piece) {
  const double th = d.theta, c = d.Q / (d.theta * d.theta), se = std::sqrt(d.eps);
  std::vector<CoverPiece> out;
  switch (piece.kind) {
    case HPiece::Kind::Slice: {
      // theta·S_0 x (0, c]: lines y = x and y = x/nu, the hyperbola xy = theta^2 eps.
      const double s = th * se, xs = th * std::sqrt(d.nu * d.eps), ys = th * std::sqrt(d.eps / d.nu);
      out.push_back(affine_piece("ratio-lower", {0, 0, 0}, {s, s, 0}, {0, 0, c}));
      out.push_back(affine_piece("ratio-upper", {0, 0, 0}, {xs, ys, 0}, {0, 0, c}));
      out.push_back(affine_piece("z=0", {0, 0, 0}, {s, 0, 0}, {0, ys, 0}));
      out.push_back(affine_piece("z=top", {0, 0, c}, {s, 0, 0}, {0, ys, 0}));
      const double a = s * (1 - std::sqrt(d.nu)), b = xs, k = th * th * d.eps;
      CoverPiece sh;
      sh.name = "hyperbolic-sheet";
      sh.sheet = true;
      sh.map = [a, b, c, k](double t1, double t2) {
        const double x = a * t1 + b;
        return Vec3{x, k / x, c * t2};
      };
      sh.locate = [a, b, c](const Vec3& x) {
        return std::array<double, 2>{clamp01((x[0] - b) / a), clamp01(x[2] / c)};
      };
      out.push_back(std::move(sh));
      break;
    }
    case HPiece::Kind::DeltaX: {
      // Triangle (0,0), (s,0), (s,s).
      const double s = th * se;
      out.push_back(affine_piece("y=0", {0, 0, 0}, {s, 0, 0}, {0, 0, c}));
      out.push_back(affine_piece("x=edge", {s, 0, 0}, {0, s, 0}, {0, 0, c}));
      out.push_back(affine_piece("diagonal", {0, 0, 0}, {s, s, 0}, {0, 0, c}));
      out.push_back(affine_piece("z=0", {0, 0, 0}, {s, 0, 0}, {0, s, 0}));
      out.push_back(affine_piece("z=top", {0, 0, c}, {s, 0, 0}, {0, s, 0}));
      break;
    }
    case HPiece::Kind::DeltaY: {
      // Triangle (0,0), (0,h), (w,h).
      const double w = th * std::sqrt(d.eps * d.nu), h = th * std::sqrt(d.eps / d.nu);
      out.push_back(affine_piece("x=0", {0, 0, 0}, {0, h, 0}, {0, 0, c}));
      out.push_back(affine_piece("y=edge", {0, h, 0}, {w, 0, 0}, {0, 0, c}));
      out.push_back(affine_piece("diagonal", {0, 0, 0}, {w, h, 0}, {0, 0, c}));
      out.push_back(affine_piece("z=0", {0, 0, 0}, {w, 0, 0}, {0, h, 0}));
      out.push_back(affine_piece("z=top", {0, 0, c}, {w, 0, 0}, {0, h, 0}));
      break;
    }
    case HPiece::Kind::Outside: throw std::invalid_argument("no cover for Outside");
  }
  return out;
}

/// A uniformly chosen point on the boundary of piece x (0, Q], drawn from the
/// set definition in base coordinates (independent of the cover pieces).
template <class Rng>
Vec3 boundary_point(const PlanDoubles& d, const HPiece& piece, const PieceSampler& sampler, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> face(0, 4);
  const int f = face(rng);
  const double z = d.Q * u01(rng);
  if (f >= 3) {  // bottom or top cap
    auto p = sampler(rng);
    p[2] = f == 3 ? 0.0 : d.Q;
    return p;
  }
  switch (piece.kind) {
    case HPiece::Kind::Slice: {
      const double i = static_cast<double>(piece.index);
      const double lo = d.nu_pow(i), hi = d.nu_pow(i - 1);
      if (f == 0 || f == 1) {  // y = r·x, up to the hyperbola
        const double r = f == 0 ? lo : hi;
        const double x = std::sqrt(d.eps / r) * u01(rng);
        return {x, r * x, z};
      }
      const double r = lo * std::pow(hi / lo, u01(rng));
      const double x = std::sqrt(d.eps / r);
      return {x, d.eps / x, z};
    }
    case HPiece::Kind::DeltaX: {
      const double x = d.T * u01(rng);
      if (f == 0) return {x, 0.0, z};
      if (f == 1) return {d.T, d.eps / d.T * u01(rng), z};
      return {x, d.eps / (d.T * d.T) * x, z};
    }
    case HPiece::Kind::DeltaY: {
      const double x = d.eps / d.T * u01(rng);
      if (f == 0) return {0.0, d.T * u01(rng), z};
      if (f == 1) return {x, d.T, z};
      return {x, d.T * d.T / d.eps * x, z};
    }
    case HPiece::Kind::Outside: break;
  }
  throw std::invalid_argument("no boundary for Outside");
}

}  // namespace detail

/// Builds the five-piece cover of the flowed piece's boundary, samples the
/// Lipschitz stretch of each parametrization and the distance from sampled
/// boundary points to the cover.
inline CoverReport lipschitz_cover(const H1Classifier& cls, const HPiece& piece, std::uint64_t samples,
                                   std::uint64_t seed) {
  const DecompositionPlan& plan = cls.plan();
  const detail::PlanDoubles d(plan);
  CoverReport rep;
  rep.piece = piece;
  rep.lipschitz_bound = 12.0 * d.cube;
  rep.sheet_bound = 4.0 * d.cube;
  auto pieces = detail::cover_pieces(d, piece);
  for (const auto& p : pieces) rep.pieces.push_back(p.name);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (const auto& p : pieces) {
    for (std::uint64_t s = 0; s < samples; ++s) {
      const double a1 = u01(rng), a2 = u01(rng);
      double b1, b2;
      if (s % 2 == 0) {
        b1 = u01(rng);
        b2 = u01(rng);
      } else {  // near pairs probe the derivative
        b1 = detail::clamp01(a1 + 1e-6 * (u01(rng) - 0.5));
        b2 = detail::clamp01(a2 + 1e-6 * (u01(rng) - 0.5));
      }
      const double du = std::hypot(a1 - b1, a2 - b2);
      if (du == 0) continue;
      const double stretch = detail::dist(p.map(a1, a2), p.map(b1, b2)) / du;
      rep.max_observed = std::max(rep.max_observed, stretch);
      if (p.sheet) rep.max_sheet = std::max(rep.max_sheet, stretch);
    }
  }

  const long fi = paired_flow_index(plan, piece);
  const double fx = d.theta * d.nu_pow(fi / 2.0), fy = d.theta * d.nu_pow(-fi / 2.0), fz = 1.0 / (d.theta * d.theta);
  PieceSampler sampler(cls, piece);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const auto b = detail::boundary_point(d, piece, sampler, rng);
    const detail::Vec3 w{fx * b[0], fy * b[1], fz * b[2]};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces) {
      const auto t = p.locate(w);
      best = std::min(best, detail::dist(p.map(t[0], t[1]), w));
    }
    rep.coverage_gap = std::max(rep.coverage_gap, best);
  }
  rep.mesh = 6.0 * d.cube / std::sqrt(static_cast<double>(std::max<std::uint64_t>(samples, 1)));
  return rep;
}

}  // namespace mda
