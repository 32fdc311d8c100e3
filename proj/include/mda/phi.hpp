#pragma once

// Empirical Diophantine type: running minima of q·||q·alpha||·||q·beta||.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mda/errors.hpp"
#include "mda/interval.hpp"
#include "mda/realnum.hpp"
#include "mda/stepper.hpp"

namespace mda {

struct PhiRecord {
  std::uint64_t q = 0;
  FastInterval value;        // encloses q·||q alpha||·||q beta||
  FastInterval running_min;  // encloses min over q' <= q of value(q')
  std::uint64_t argmin = 0;
  bool new_min = false;
};

struct PhiProfile {
  Pair pair;
  std::uint64_t qmax = 0;
  std::uint64_t stride = 1;
  std::vector<PhiRecord> records;  // ascending q

  /// Running minimum at q (the last record at or before q carries it).
  const PhiRecord& record_at_or_before(std::uint64_t q) const {
    auto it = std::upper_bound(records.begin(), records.end(), q,
                               [](std::uint64_t v, const PhiRecord& r) { return v < r.q; });
    if (it == records.begin()) throw HorizonExceeded("q below profile start");
    return *(it - 1);
  }
};

namespace detail {

inline Interval exact_phi_value(const Pair& pair, std::uint64_t q, int prec) {
  return Interval::exact(mpz_class(static_cast<unsigned long>(q))) *
         product_norm(pair.alpha, pair.beta, mpz_class(static_cast<unsigned long>(q)), prec);
}

/// Enclosure of q·||q alpha||·||q beta|| from the fast path, falling back to
/// exact evaluation when the 128-bit stepper cannot serve q.
struct PhiValueSource {
  const Pair& pair;
  FracStepper sa, sb;
  bool fast;

  PhiValueSource(const Pair& p, std::uint64_t qmax)
      : pair(p), sa(p.alpha), sb(p.beta), fast(sa.supports(qmax) && sb.supports(qmax)) {}

  FastInterval value(std::uint64_t q) const {
    if (fast) {
      FastInterval prod = fast_dist(sa.at(q).f) * fast_dist(sb.at(q).f);
      if (prod.hi - prod.lo <= 1e-9 * std::max(prod.lo, 1e-300))
        return FastInterval::integer(static_cast<std::int64_t>(q)) * prod;
    }
    return FastInterval::from(exact_phi_value(pair, q, 128));
  }
};

}  // namespace detail

/// Profile with exact running minima over every q <= qmax. Records are kept
/// at q = 1, every multiple of stride, q = qmax, and every new minimum.
inline PhiProfile phi_profile(const Pair& pair, std::uint64_t qmax, std::uint64_t stride = 1,
                              int max_precision = kDefaultMaxPrecision) {
  if (qmax < 1) throw std::invalid_argument("phi_profile requires qmax >= 1");
  if (stride < 1) throw std::invalid_argument("phi_profile requires stride >= 1");
  PhiProfile prof{pair, qmax, stride, {}};
  detail::PhiValueSource src(pair, qmax);

  FastInterval best;
  std::uint64_t best_q = 0;
  for (std::uint64_t q = 1; q <= qmax; ++q) {
    const FastInterval v = src.value(q);
    bool is_new = q == 1;
    if (!is_new) {
      Tri lt = less(v, best);
      if (lt == Tri::unknown) {
        const std::uint64_t bq = best_q;
        lt = tri(decide_escalating(
            [&](int p) {
              return less(detail::exact_phi_value(pair, q, p), detail::exact_phi_value(pair, bq, p));
            },
            max_precision, "phi value tie between q=" + std::to_string(q) + " and q=" + std::to_string(bq)));
      }
      is_new = lt == Tri::yes;
    }
    if (is_new) {
      best = v;
      best_q = q;
    }
    if (is_new || q == 1 || q % stride == 0 || q == qmax)
      prof.records.push_back({q, v, best, best_q, is_new});
  }
  return prof;
}

/// Largest phi(Q) witness supported by the profile: a certified lower bound
/// on running_min(floor(Q)), clamped into (0, 1/4].
inline double phi_at(const PhiProfile& prof, double Q) {
  if (!(Q >= 1.0)) throw std::invalid_argument("phi_at requires Q >= 1");
  const double fq = std::floor(Q);
  if (fq > static_cast<double>(prof.qmax))
    throw HorizonExceeded("Q=" + std::to_string(Q) + " beyond profile horizon " + std::to_string(prof.qmax));
  const auto& rec = prof.record_at_or_before(static_cast<std::uint64_t>(fq));
  return std::min(0.25, rec.running_min.lo);
}

/// Growth factors f(q) for finite-horizon Mad(f) evidence.
struct GrowthFunction {
  enum class Kind { constant, log_power, log_loglog };
  Kind kind = Kind::constant;
  double param = 1.0;  // the constant c, or the exponent lambda

  static GrowthFunction constant(double c) { return {Kind::constant, c}; }
  static GrowthFunction log_power(double lambda) { return {Kind::log_power, lambda}; }
  static GrowthFunction log_loglog() { return {Kind::log_loglog, 0.0}; }

  std::string name() const {
    switch (kind) {
      case Kind::constant: return "const";
      case Kind::log_power: return "logQ";
      case Kind::log_loglog: return "loglog";
    }
    return "?";
  }
};

/// max{1, log x} as an interval.
inline Interval log_plus(const Interval& x) {
  Interval one = Interval::exact(1.0);
  return max(one, log(x));
}

inline Interval growth_value(const GrowthFunction& f, std::uint64_t q, int prec = 128) {
  Interval qi = Interval::exact(mpz_class(static_cast<unsigned long>(q))).widened_to(prec);
  switch (f.kind) {
    case GrowthFunction::Kind::constant:
      return Interval::exact(f.param);
    case GrowthFunction::Kind::log_power: {
      Interval lp = log_plus(qi);
      return exp(Interval::exact(f.param).widened_to(prec) * log(lp));
    }
    case GrowthFunction::Kind::log_loglog: {
      Interval lp = log_plus(qi);
      return lp * log_plus(lp);
    }
  }
  throw std::logic_error("unknown growth kind");
}

/// min over the materialized records of f(q)·value(q). Every q when the
/// profile was built with stride 1; with a coarser stride the scan covers the
/// records only (record lows plus the stride grid).
inline FastInterval mad_score(const PhiProfile& prof, const GrowthFunction& f) {
  if (prof.records.empty()) throw std::invalid_argument("empty profile");
  FastInterval best;
  bool first = true;
  for (const auto& r : prof.records) {
    FastInterval s = FastInterval::from(growth_value(f, r.q)) * r.value;
    if (first) {
      best = s;
      first = false;
    } else {
      best = min(best, s);
    }
  }
  return best;
}

}  // namespace mda
