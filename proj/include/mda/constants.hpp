#pragma once

#include <cstdint>

namespace mda {

constexpr std::uint64_t ipow(std::uint64_t base, unsigned exp) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < exp; ++i) r *= base;
  return r;
}

/// Explicit constants of the counting estimate and its corollaries.
struct Constants {
  static constexpr std::uint64_t C1 = ipow(3, 28);
  static constexpr std::uint64_t C2 = 4 * C1;
  static constexpr std::uint64_t C3 = 12;
  static constexpr std::uint64_t C4 = ipow(3, 32);
  /// D_n = n^(2n^2) at n = 3.
  static constexpr std::uint64_t D3 = ipow(3, 2 * 3 * 3);
  static constexpr std::uint64_t M_lip = 5;
  static constexpr std::uint64_t C_L = 12;
  static constexpr std::uint64_t C5 = 8 * D3 * M_lip * C_L * C_L;
};

static_assert(Constants::C2 == 4 * Constants::C1);
static_assert(5 * Constants::C5 < Constants::C1);

}  // namespace mda
