#pragma once

// Exact counts of |M(eps, T, Q)| and the main-term / error-bound evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mda/constants.hpp"
#include "mda/errors.hpp"
#include "mda/interval.hpp"
#include "mda/parallel.hpp"
#include "mda/phi.hpp"
#include "mda/rational.hpp"
#include "mda/realnum.hpp"
#include "mda/stepper.hpp"

namespace mda {

struct CountParams {
  ExpRational eps;
  ExpRational T;
  ExpRational Q;

  void validate() const {
    if (compare(Q, ExpRational(1)) < 0) throw std::invalid_argument("Q must be >= 1");
  }
  std::uint64_t q_floor() const {
    mpz_class f = floor_of(Q);
    if (f < 0 || f > mpz_class("9223372036854775807")) throw std::out_of_range("Q too large");
    return static_cast<std::uint64_t>(f.get_ui());
  }
  /// eps/T^2 <= e^-2.
  bool theorem_mode() const { return compare_log(eps / pow(T, 2), -2) <= 0; }
  /// T = 1/2 and eps <= 1/(2e)^2.
  bool corollary_mode() const {
    return T == ExpRational(mpq_class(1, 2)) && compare_log(eps * ExpRational(4), -2) <= 0;
  }
  std::string to_string() const {
    return "eps=" + eps.to_string() + " T=" + T.to_string() + " Q=" + Q.to_string();
  }
};

namespace detail {

/// q·x split as base(q) + f(q) with f an enclosure near [0, 1). Uses the
/// 128-bit stepper when it covers the q-range, exact cells otherwise.
class FracSource {
public:
  FracSource(const RealSpec& spec, std::uint64_t qmax)
      : spec_(spec), stepper_(spec), fast_(stepper_.supports(qmax)) {}

  FracStepper::Frac at(std::uint64_t q) const {
    if (fast_) return stepper_.at(q);
    auto cell = multiple_cell(spec_, mpz_class(static_cast<unsigned long>(q)), 128);
    mpz_class base;
    mpz_fdiv_q_2exp(base.get_mpz_t(), cell.klo.get_mpz_t(), 128);
    if (!base.fits_slong_p()) throw std::overflow_error("q*x exceeds 64-bit range");
    mpz_class shift = base << 128;
    Interval f = Interval::dyadic(cell.klo - shift, cell.khi - shift, 128);
    return {base.get_si(), FastInterval::from(f)};
  }

  /// Exact enclosure of p + q·x at the given precision.
  Interval offset_multiple(std::int64_t p, std::uint64_t q, int prec) const {
    return Interval::exact(static_cast<long>(p)) +
           eval_multiple(spec_, mpz_class(static_cast<unsigned long>(q)), prec);
  }

private:
  RealSpec spec_;
  FracStepper stepper_;
  bool fast_;
};

/// (|x| <= T) & (|y| <= T) & (|x|·|y| < eps), for any interval carrier.
template <IntervalLike I>
Tri in_M(const I& ax, const I& ay, const I& T, const I& eps) {
  Tri t = less_eq(ax, T) & less_eq(ay, T);
  if (t == Tri::no) return t;
  return t & less(ax * ay, eps);
}

inline std::int64_t floor_i(double v) { return static_cast<std::int64_t>(std::floor(v)); }
inline std::int64_t ceil_i(double v) { return static_cast<std::int64_t>(std::ceil(v)); }

/// Counts (p1, p2) at each q in [qlo, qhi] and accumulates per checkpoint.
class MCounter {
public:
  MCounter(const Pair& pair, const ExpRational& eps, const ExpRational& T, std::uint64_t qmax,
           int max_precision)
      : pair_(pair), eps_(eps), T_(T), a_(pair.alpha, qmax), b_(pair.beta, qmax),
        max_precision_(max_precision) {
    Tf_ = FastInterval::from(T.interval(128));
    epsf_ = FastInterval::from(eps.interval(128));
  }

  std::uint64_t count_at(std::uint64_t q) const {
    const auto fa = a_.at(q);
    const auto fb = b_.at(q);
    const double Thi = Tf_.hi;
    std::uint64_t c = 0;
    const std::int64_t mlo = floor_i(detail::widen_down(-Thi - fa.f.hi));
    const std::int64_t mhi = ceil_i(detail::widen_up(Thi - fa.f.lo));
    for (std::int64_t m = mlo; m <= mhi; ++m) {
      const FastInterval ax = abs(FastInterval::integer(m) + fa.f);
      if (ax.lo > Thi) continue;
      double r = Thi;
      if (ax.lo > 0.0) r = std::min(Thi, detail::widen_up(detail::widen_up(epsf_.hi / ax.lo)));
      const std::int64_t nlo = floor_i(detail::widen_down(-r - fb.f.hi));
      const std::int64_t nhi = ceil_i(detail::widen_up(r - fb.f.lo));
      for (std::int64_t n = nlo; n <= nhi; ++n) {
        const FastInterval ay = abs(FastInterval::integer(n) + fb.f);
        Tri t = in_M(ax, ay, Tf_, epsf_);
        if (t == Tri::unknown) t = tri(decide_exact(m - fa.base, n - fb.base, q));
        if (t == Tri::yes) ++c;
      }
    }
    return c;
  }

  bool decide_exact(std::int64_t p1, std::int64_t p2, std::uint64_t q) const {
    return decide_escalating(
        [&](int p) {
          Interval ax = abs(a_.offset_multiple(p1, q, p));
          Interval ay = abs(b_.offset_multiple(p2, q, p));
          return in_M(ax, ay, T_.interval(p), eps_.interval(p));
        },
        max_precision_,
        "membership of (" + std::to_string(p1) + "," + std::to_string(p2) + "," + std::to_string(q) + ")");
  }

private:
  Pair pair_;
  ExpRational eps_, T_;
  FracSource a_, b_;
  FastInterval Tf_, epsf_;
  int max_precision_;
};

}  // namespace detail

/// |M(eps, T, Q')| at every Q' in qs from a single pass over q. The q-range may
/// be split into `jobs` blocks; block counts are integers, so the sum is
/// independent of the split.
inline std::vector<std::uint64_t> count_M_checkpoints(const Pair& pair, const ExpRational& eps,
                                                      const ExpRational& T,
                                                      const std::vector<ExpRational>& qs,
                                                      unsigned jobs = 1,
                                                      int max_precision = kDefaultMaxPrecision) {
  std::vector<std::uint64_t> floors;
  floors.reserve(qs.size());
  for (const auto& Q : qs) {
    CountParams{eps, T, Q}.validate();
    floors.push_back(CountParams{eps, T, Q}.q_floor());
  }
  if (floors.empty()) return {};
  const std::uint64_t qmax = *std::max_element(floors.begin(), floors.end());
  detail::MCounter counter(pair, eps, T, qmax, max_precision);
  auto blocks = run_blocks(1, qmax, jobs, [&](std::uint64_t lo, std::uint64_t hi) {
    std::vector<std::uint64_t> part(floors.size(), 0);
    for (std::uint64_t q = lo; q <= hi; ++q) {
      const std::uint64_t c = counter.count_at(q);
      if (c == 0) continue;
      for (std::size_t k = 0; k < floors.size(); ++k)
        if (q <= floors[k]) part[k] += c;
    }
    return part;
  });
  std::vector<std::uint64_t> out(floors.size(), 0);
  for (const auto& part : blocks)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += part[k];
  return out;
}

/// Exact |M(eps, T, Q)|.
inline std::uint64_t count_M(const Pair& pair, const CountParams& params, unsigned jobs = 1,
                             int max_precision = kDefaultMaxPrecision) {
  return count_M_checkpoints(pair, params.eps, params.T, {params.Q}, jobs, max_precision)[0];
}

/// #{0 < q <= Q : ||q alpha||·||q beta|| < eps}, the T = 1/2 case as a direct q-loop.
inline std::uint64_t count_M_diag(const Pair& pair, const ExpRational& eps, const ExpRational& Q,
                                  int max_precision = kDefaultMaxPrecision) {
  const std::uint64_t qmax = CountParams{eps, ExpRational(mpq_class(1, 2)), Q}.q_floor();
  detail::FracSource a(pair.alpha, qmax), b(pair.beta, qmax);
  const FastInterval epsf = FastInterval::from(eps.interval(128));
  std::uint64_t c = 0;
  for (std::uint64_t q = 1; q <= qmax; ++q) {
    Tri t = less(fast_dist(a.at(q).f) * fast_dist(b.at(q).f), epsf);
    if (t == Tri::unknown) {
      const mpz_class qz(static_cast<unsigned long>(q));
      t = tri(decide_escalating(
          [&](int p) { return less(product_norm(pair.alpha, pair.beta, qz, p), eps.interval(p)); },
          max_precision, "product at q=" + std::to_string(q) + " vs eps"));
    }
    if (t == Tri::yes) ++c;
  }
  return c;
}

namespace detail {

inline void require_theorem_mode(const CountParams& params) {
  params.validate();
  if (!params.theorem_mode())
    throw ConditionViolated("eps/T^2 > e^-2 (" + params.to_string() + ")");
}

inline Interval c_interval(std::uint64_t c) {
  return Interval::exact(mpz_class(std::to_string(c), 10));
}

inline void require_witness(double phiQ) {
  if (!(phiQ > 0.0 && phiQ <= 0.25)) throw std::invalid_argument("phiQ must lie in (0, 1/4]");
}

}  // namespace detail

/// 4·eps·Q·(log(T^2/eps) + 1).
inline Interval main_term(const CountParams& params, int prec = 128) {
  detail::require_theorem_mode(params);
  Interval R = (pow(params.T, 2) / params.eps).log_interval(prec);
  return Interval::exact(4L) * params.eps.interval(prec) * params.Q.interval(prec) *
         (R + Interval::exact(1L));
}

/// C1·(1+2T)^2·log(T^2/eps)·(eps·Q/phiQ)^(2/3).
inline Interval error_bound(const CountParams& params, double phiQ, int prec = 128) {
  detail::require_theorem_mode(params);
  detail::require_witness(phiQ);
  Interval R = (pow(params.T, 2) / params.eps).log_interval(prec);
  Interval one_2T = Interval::exact(1L) + Interval::exact(2L) * params.T.interval(prec);
  Interval ratio = params.eps.interval(prec) * params.Q.interval(prec) / Interval::exact(phiQ).widened_to(prec);
  return detail::c_interval(Constants::C1) * square(one_2T) * R * pow(ratio, mpq_class(2, 3));
}

struct CountReport {
  std::uint64_t count = 0;
  Interval main_term;
  Interval error_bound;
  Interval discrepancy;  // |count - main_term|
  bool holds = false;
  std::string suspect;  // empty when holds
};

namespace detail {

inline CountReport assemble_report(std::uint64_t count, Interval main, Interval bound) {
  CountReport r;
  r.count = count;
  r.discrepancy = abs(c_interval(count) - main);
  r.main_term = std::move(main);
  r.error_bound = std::move(bound);
  Tri t = less_eq(r.discrepancy, r.error_bound);
  if (t == Tri::unknown) throw UndecidablePredicate("discrepancy vs error bound");
  r.holds = t == Tri::yes;
  return r;
}

/// After a failed inequality: recheck the witness against a fresh profile to
/// tell a bad phiQ from a counting bug.
inline std::string blame(const Pair& pair, std::uint64_t qfloor, double phiQ) {
  if (qfloor == 0) return "count";
  auto prof = phi_profile(pair, qfloor, qfloor);
  if (prof.records.back().running_min.lo < phiQ) return "phi witness";
  return "count";
}

}  // namespace detail

/// Report from an already computed count (used by checkpoint sweeps).
inline CountReport theorem_report_from_count(const CountParams& params, double phiQ, std::uint64_t count) {
  return detail::assemble_report(count, main_term(params), error_bound(params, phiQ));
}

inline CountReport theorem_report(const Pair& pair, const CountParams& params, double phiQ, unsigned jobs = 1) {
  detail::require_theorem_mode(params);
  detail::require_witness(phiQ);
  CountReport r = theorem_report_from_count(params, phiQ, count_M(pair, params, jobs));
  if (!r.holds) r.suspect = detail::blame(pair, params.q_floor(), phiQ);
  return r;
}

/// 4·eps·Q·(1 - log(4·eps)).
inline Interval corollary_main_term(const ExpRational& eps, const ExpRational& Q, int prec = 128) {
  Interval l4e = (eps * ExpRational(4)).log_interval(prec);
  return Interval::exact(4L) * eps.interval(prec) * Q.interval(prec) * (Interval::exact(1L) - l4e);
}

/// -C2·log(eps)·(eps·Q/phiQ)^(2/3).
inline Interval corollary_bound(const ExpRational& eps, const ExpRational& Q, double phiQ, int prec = 128) {
  detail::require_witness(phiQ);
  Interval ratio = eps.interval(prec) * Q.interval(prec) / Interval::exact(phiQ).widened_to(prec);
  return -(detail::c_interval(Constants::C2) * eps.log_interval(prec)) * pow(ratio, mpq_class(2, 3));
}

inline CountReport corollary_report_from_count(const ExpRational& eps, const ExpRational& Q, double phiQ,
                                               std::uint64_t count) {
  CountParams params{eps, ExpRational(mpq_class(1, 2)), Q};
  params.validate();
  if (!params.corollary_mode()) throw ConditionViolated("eps > 1/(2e)^2 (" + params.to_string() + ")");
  return detail::assemble_report(count, corollary_main_term(eps, Q), corollary_bound(eps, Q, phiQ));
}

inline CountReport corollary_report(const Pair& pair, const ExpRational& eps, const ExpRational& Q, double phiQ) {
  CountReport r = corollary_report_from_count(eps, Q, phiQ, count_M_diag(pair, eps, Q));
  if (!r.holds) r.suspect = detail::blame(pair, CountParams{eps, 1, Q}.q_floor(), phiQ);
  return r;
}

}  // namespace mda
