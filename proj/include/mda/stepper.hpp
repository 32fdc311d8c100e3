#pragma once

// Allocation-free fractional parts of q·x for the q-loops.
//
// frac(x)·2^128 is held in [F, F + spread] as 128-bit integers (spread = 1 for
// surds). For q >= 0, q·x - base(q) then lies in [G, G + q·spread]·2^-128 with
// base(q) = q·floor(x) + floor(q·F / 2^128) and G = q·F mod 2^128, which is
// exactly the integer offset the exact slow path reconstructs.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "mda/interval.hpp"
#include "mda/realnum.hpp"

namespace mda {

using u128 = unsigned __int128;
using i128 = __int128;

namespace detail {

inline u128 to_u128(const mpz_class& z) {
  mpz_class lo64, hi64;
  mpz_class mask = (mpz_class(1) << 64) - 1;
  lo64 = z & mask;
  hi64 = z >> 64;
  return (static_cast<u128>(mpz_get_ui(hi64.get_mpz_t())) << 64) | mpz_get_ui(lo64.get_mpz_t());
}

/// x·2^-128 to nearest-ish double, relative error below 3·2^-53.
inline double scaled_to_double(u128 x) {
  return std::ldexp(static_cast<double>(static_cast<std::uint64_t>(x >> 64)), -64) +
         std::ldexp(static_cast<double>(static_cast<std::uint64_t>(x)), -128);
}

}  // namespace detail

class FracStepper {
public:
  struct Frac {
    std::int64_t base;  // q·x - base lies in f
    FastInterval f;
  };

  explicit FracStepper(const RealSpec& spec) {
    auto cell = detail::multiple_cell(spec, 1, 128);
    mpz_class ip;
    mpz_fdiv_q_2exp(ip.get_mpz_t(), cell.klo.get_mpz_t(), 128);
    mpz_class frac = cell.klo - (ip << 128);
    mpz_class spread = cell.khi - cell.klo;
    usable_ = mpz_sizeinbase(ip.get_mpz_t(), 2) < 31 && spread < (mpz_class(1) << 100);
    if (usable_) {
      int_part_ = ip.get_si();
      frac_ = detail::to_u128(frac);
      spread_double_ = detail::widen_up(detail::scaled_to_double(detail::to_u128(spread)));
    }
  }

  /// False for inputs too large or too wide for the 128-bit path.
  bool usable() const { return usable_; }

  /// Whether at(q) is valid for every 0 <= q <= qmax.
  bool supports(std::uint64_t qmax) const {
    if (!usable_ || qmax >= (std::uint64_t{1} << 40)) return false;
    const i128 worst = static_cast<i128>(qmax) * (int_part_ < 0 ? -int_part_ + 1 : int_part_ + 1);
    return worst < (static_cast<i128>(1) << 62);
  }

  Frac at(std::uint64_t q) const {
    const u128 lo = static_cast<std::uint64_t>(frac_);
    const u128 hi = static_cast<std::uint64_t>(frac_ >> 64);
    const u128 t1 = static_cast<u128>(q) * lo;
    const u128 t2 = static_cast<u128>(q) * hi + (t1 >> 64);
    const std::uint64_t carry = static_cast<std::uint64_t>(t2 >> 64);
    const u128 g = (t2 << 64) | static_cast<std::uint64_t>(t1);
    const double glo = detail::scaled_to_double(g);
    const double width = detail::widen_up(static_cast<double>(q) * spread_double_);
    Frac out;
    out.base = static_cast<std::int64_t>(q) * int_part_ + static_cast<std::int64_t>(carry);
    out.f.lo = detail::widen_down(glo);
    out.f.hi = detail::widen_up(detail::widen_up(glo + width));
    return out;
  }

private:
  bool usable_ = false;
  std::int64_t int_part_ = 0;
  u128 frac_ = 0;
  double spread_double_ = 0.0;
};

/// Enclosure of the distance to the nearest integer for f in [-1/2, 3/2].
inline FastInterval fast_dist(const FastInterval& f) {
  if (f.lo < -0.5 || f.hi > 1.5) return {0.0, 0.5};
  FastInterval d0 = abs(f);
  FastInterval d1 = abs(FastInterval::exact(1.0) - f);
  return min(d0, d1);
}

}  // namespace mda
