#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace mda {

/// Splits [lo, hi] into `jobs` contiguous blocks, runs fn(block_lo, block_hi)
/// on each (threads when jobs > 1) and returns the per-block results in block
/// order. The first exception thrown by any block is rethrown.
template <class Fn>
auto run_blocks(std::uint64_t lo, std::uint64_t hi, unsigned jobs, Fn&& fn) {
  using R = decltype(fn(lo, hi));
  std::vector<R> results;
  if (hi < lo) return results;
  jobs = std::max(1u, jobs);
  const std::uint64_t n = hi - lo + 1;
  const std::uint64_t blocks = std::min<std::uint64_t>(jobs, n);
  results.resize(blocks);
  std::vector<std::exception_ptr> errors(blocks);
  auto bounds = [&](std::uint64_t b) {
    const std::uint64_t a = lo + n * b / blocks;
    const std::uint64_t z = lo + n * (b + 1) / blocks - 1;
    return std::pair{a, z};
  };
  if (blocks == 1) {
    results[0] = fn(lo, hi);
    return results;
  }
  std::vector<std::thread> pool;
  pool.reserve(blocks);
  for (std::uint64_t b = 0; b < blocks; ++b) {
    pool.emplace_back([&, b] {
      try {
        auto [a, z] = bounds(b);
        results[b] = fn(a, z);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace mda
