#pragma once

// Reciprocal sums of ||q alpha||·||q beta|| and the dyadic layer bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mda/constants.hpp"
#include "mda/counting.hpp"
#include "mda/interval.hpp"
#include "mda/rational.hpp"
#include "mda/realnum.hpp"

namespace mda {

namespace detail {

/// floor(-log2 x) for a positive double, exact.
inline int dyadic_layer(double x) {
  int e = 0;
  const double m = std::frexp(x, &e);  // x = m·2^e, m in [1/2, 1)
  return m == 0.5 ? 1 - e : -e;
}

}  // namespace detail

/// Per-checkpoint state of one pass over q.
struct RecsumScan {
  std::vector<std::uint64_t> q_floors;
  std::vector<FastInterval> sums;
  /// layers[c][k] = #{q <= q_floors[c] : floor(-log2 product(q)) = k}.
  std::vector<std::vector<std::uint64_t>> layers;
};

/// Single pass computing sums of 1/product(q) and dyadic layer counts up to
/// every requested floor(Q).
inline RecsumScan recsum_scan(const Pair& pair, const std::vector<ExpRational>& qs,
                              int max_precision = kDefaultMaxPrecision) {
  RecsumScan out;
  for (const auto& Q : qs) {
    CountParams p{ExpRational(1), ExpRational(1), Q};
    p.validate();
    out.q_floors.push_back(p.q_floor());
  }
  out.sums.assign(qs.size(), FastInterval::exact(0.0));
  out.layers.assign(qs.size(), {});
  if (qs.empty()) return out;
  std::vector<std::size_t> order(qs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return out.q_floors[a] < out.q_floors[b]; });
  const std::uint64_t qmax = out.q_floors[order.back()];

  detail::FracSource a(pair.alpha, qmax), b(pair.beta, qmax);
  FastInterval sum = FastInterval::exact(0.0);
  std::vector<std::uint64_t> layer;
  std::size_t next = 0;
  auto snapshot = [&](std::uint64_t q) {
    while (next < order.size() && out.q_floors[order[next]] == q) {
      out.sums[order[next]] = sum;
      out.layers[order[next]] = layer;
      ++next;
    }
  };
  snapshot(0);
  for (std::uint64_t q = 1; q <= qmax; ++q) {
    FastInterval prod = fast_dist(a.at(q).f) * fast_dist(b.at(q).f);
    int klo = 0, khi = -1;
    if (prod.lo > 0.0) {
      klo = detail::dyadic_layer(prod.hi);
      khi = detail::dyadic_layer(prod.lo);
    }
    if (klo != khi) {
      const mpz_class qz(static_cast<unsigned long>(q));
      bool done = false;
      for (int p : precision_schedule(max_precision)) {
        Interval exact = product_norm(pair.alpha, pair.beta, qz, p);
        prod = FastInterval::from(exact);
        if (!(prod.lo > 0.0)) continue;
        klo = detail::dyadic_layer(prod.hi);
        khi = detail::dyadic_layer(prod.lo);
        if (klo == khi) {
          done = true;
          break;
        }
      }
      if (!done) throw UndecidablePredicate("dyadic layer of the product at q=" + std::to_string(q));
    }
    sum = sum + FastInterval::exact(1.0) / prod;
    if (layer.size() <= static_cast<std::size_t>(klo)) layer.resize(klo + 1, 0);
    ++layer[klo];
    snapshot(q);
  }
  return out;
}

/// Certified enclosure of sum_{q <= Q} 1/(||q alpha||·||q beta||).
inline Interval recsum(const Pair& pair, const ExpRational& Q) {
  FastInterval s = recsum_scan(pair, {Q}).sums[0];
  return Interval::exact(s.lo, s.hi);
}

/// C3·Q·log(Q/phi)^2 + C4·(Q/phi)·log(Q/phi).
inline Interval recsum_upper(const ExpRational& Q, double phiQ, int prec = 128) {
  detail::require_witness(phiQ);
  Interval ratio = Q.interval(prec) / Interval::exact(phiQ).widened_to(prec);
  Interval l = log(ratio);
  return detail::c_interval(Constants::C3) * Q.interval(prec) * square(l) +
         detail::c_interval(Constants::C4) * ratio * l;
}

/// recsum / (Q·(log+ Q)^2), reported as a trend only.
inline Interval lower_ratio_from_sum(const Interval& sum, const ExpRational& Q, int prec = 128) {
  Interval qi = Q.interval(prec);
  Interval lp = max(Interval::exact(1L), log(qi));
  return sum / (qi * square(lp));
}

inline Interval lower_ratio(const Pair& pair, const ExpRational& Q) {
  return lower_ratio_from_sum(recsum(pair, Q), Q);
}

struct RecsumReport {
  ExpRational Q;
  double phiQ = 0.0;
  Interval sum;
  Interval upper_bound;
  Interval lower_ratio;
  long K = 0;                              // floor(log2(Q/phiQ))
  std::vector<std::uint64_t> layer_counts;  // index k
  std::vector<std::uint64_t> diag_counts;   // index k: count_M_diag(2^-k, Q)
  mpz_class dyadic_majorant;               // sum_{k=1}^{K} 2^{k+1}·diag_counts[k]
  mpz_class sandwich_lower;                // sum_k 2^k·layer_counts[k]
  mpz_class sandwich_upper;                // sum_k 2^{k+1}·layer_counts[k]
  Interval coarse_majorant;                // 4·2^5·Q + sum_{k=5}^{K} 2^{k+1}·diag_counts[k]
  Interval corollary_majorant;             // same with Corollary-2 main + bound per layer
  bool holds_upper = false;
  bool holds_dyadic = false;
  bool holds_sandwich = false;
  bool tail_empty = false;                 // diag count 0 for every k > K
  bool holds_coarse = false;
  bool holds_corollary_chain = false;      // corollary_majorant <= upper_bound
};

namespace detail {

inline mpz_class pow2(long k) {
  mpz_class r = 1;
  mpz_mul_2exp(r.get_mpz_t(), r.get_mpz_t(), static_cast<unsigned long>(k));
  return r;
}

inline bool certainly_le(const Interval& a, const Interval& b, const char* what) {
  Tri t = less_eq(a, b);
  if (t == Tri::unknown) throw UndecidablePredicate(what);
  return t == Tri::yes;
}

}  // namespace detail

/// Builds the report for one Q from scan data at checkpoint index c.
inline RecsumReport dyadic_report(const RecsumScan& scan, std::size_t c, const ExpRational& Q, double phiQ,
                                  int prec = 128) {
  detail::require_witness(phiQ);
  RecsumReport r;
  r.Q = Q;
  r.phiQ = phiQ;
  r.sum = Interval::exact(scan.sums[c].lo, scan.sums[c].hi);
  r.upper_bound = recsum_upper(Q, phiQ, prec);
  r.lower_ratio = lower_ratio_from_sum(r.sum, Q, prec);

  Interval ratio = Q.interval(prec) / Interval::exact(phiQ).widened_to(prec);
  Interval l2 = log(ratio) / log(Interval::exact(2L).widened_to(prec));
  mpz_class klo, khi;
  mpfr_get_z(klo.get_mpz_t(), l2.lo().get(), MPFR_RNDD);
  mpfr_get_z(khi.get_mpz_t(), l2.hi().get(), MPFR_RNDD);
  if (klo != khi) throw UndecidablePredicate("floor(log2(Q/phi))");
  r.K = klo.get_si();

  r.layer_counts = scan.layers[c];
  const long kmax = std::max<long>(static_cast<long>(r.layer_counts.size()) - 1, r.K);
  r.diag_counts.assign(kmax + 2, 0);
  // #{q : product < 2^-k} = #{q : layer >= k}; products never equal 2^-k
  // because the layer decision above was strict on both sides.
  std::uint64_t acc = 0;
  for (long k = kmax + 1; k >= 0; --k) {
    if (k < static_cast<long>(r.layer_counts.size())) acc += r.layer_counts[k];
    r.diag_counts[k] = acc;
  }
  for (long k = 1; k <= r.K; ++k) r.dyadic_majorant += detail::pow2(k + 1) * r.diag_counts[k];
  for (std::size_t k = 0; k < r.layer_counts.size(); ++k) {
    r.sandwich_lower += detail::pow2(static_cast<long>(k)) * r.layer_counts[k];
    r.sandwich_upper += detail::pow2(static_cast<long>(k) + 1) * r.layer_counts[k];
  }
  r.tail_empty = true;
  for (long k = r.K + 1; k < static_cast<long>(r.diag_counts.size()); ++k)
    if (r.diag_counts[k] != 0) r.tail_empty = false;

  Interval coarse = Interval::exact(128L) * Q.interval(prec);
  Interval chain = coarse;
  for (long k = 5; k <= r.K; ++k) {
    Interval w = Interval::exact(detail::pow2(k + 1));
    coarse = coarse + w * Interval::exact(mpz_class(std::to_string(r.diag_counts[k]), 10));
    const ExpRational eps(mpq_class(mpz_class(1), detail::pow2(k)));
    chain = chain + w * (corollary_main_term(eps, Q, prec) + corollary_bound(eps, Q, phiQ, prec));
  }
  r.coarse_majorant = coarse;
  r.corollary_majorant = chain;

  r.holds_upper = detail::certainly_le(r.sum, r.upper_bound, "recsum vs upper bound");
  r.holds_dyadic = detail::certainly_le(r.sum, Interval::exact(r.dyadic_majorant), "recsum vs dyadic majorant");
  r.holds_sandwich = detail::certainly_le(Interval::exact(r.sandwich_lower), r.sum, "sandwich lower") &&
                     detail::certainly_le(r.sum, Interval::exact(r.sandwich_upper), "sandwich upper");
  r.holds_coarse = detail::certainly_le(r.sum, r.coarse_majorant, "recsum vs coarse majorant");
  r.holds_corollary_chain =
      detail::certainly_le(r.corollary_majorant, r.upper_bound, "corollary majorant vs upper bound");
  return r;
}

inline RecsumReport dyadic_check(const Pair& pair, const ExpRational& Q, double phiQ) {
  return dyadic_report(recsum_scan(pair, {Q}), 0, Q, phiQ);
}

}  // namespace mda
