#include <gtest/gtest.h>

#include <random>

#include "mda/phi.hpp"

using namespace mda;

namespace {

const Pair kS2S3{RealSpec::sqrt_of(2), RealSpec::sqrt_of(3)};

}  // namespace

TEST(PhiProfile, SingleTerm) {
  auto prof = phi_profile(kS2S3, 1);
  ASSERT_EQ(prof.records.size(), 1u);
  EXPECT_LE(prof.records[0].value.lo, 0.110988189531889);
  EXPECT_GE(prof.records[0].value.hi, 0.110988189531889);
  EXPECT_TRUE(prof.records[0].new_min);
}

TEST(PhiProfile, RunningMinimaFrozen) {
  auto p10 = phi_profile(kS2S3, 10);
  const auto& last = p10.records.back();
  EXPECT_EQ(last.argmin, 7u);
  EXPECT_NEAR(last.running_min.mid(), 0.0874886094996748, 1e-13);
  auto p4 = phi_profile(kS2S3, 4);
  EXPECT_EQ(p4.records.back().argmin, 4u);
  EXPECT_NEAR(p4.records.back().running_min.mid(), 0.0985470257245326, 1e-13);
}

TEST(PhiAt, FloorsAndClamps) {
  auto prof = phi_profile(kS2S3, 10);
  EXPECT_NEAR(phi_at(prof, 10), 0.0874886094996748, 1e-13);
  EXPECT_NEAR(phi_at(prof, 4.9), 0.0985470257245326, 1e-13);
  EXPECT_LE(phi_at(prof, 1), 0.25);
  EXPECT_THROW(phi_at(prof, 11), HorizonExceeded);
  EXPECT_THROW(phi_at(prof, 0.5), std::invalid_argument);
}

TEST(PhiAt, ValueOneNeverExceedsQuarter) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> rad(2, 500);
  for (int k = 0; k < 50; ++k) {
    long a = rad(rng), b = rad(rng);
    if (mpz_perfect_square_p(mpz_class(a).get_mpz_t()) || mpz_perfect_square_p(mpz_class(b).get_mpz_t())) continue;
    auto prof = phi_profile({RealSpec::sqrt_of(a), RealSpec::sqrt_of(b)}, 1);
    EXPECT_LE(prof.records[0].value.hi, 0.25);
  }
}

TEST(MadScore, ConstantEqualsRunningMin) {
  auto prof = phi_profile(kS2S3, 10);
  FastInterval s = mad_score(prof, GrowthFunction::constant(1));
  EXPECT_NEAR(s.mid(), prof.records.back().running_min.mid(), 1e-14);
}

TEST(MadScore, LogSquaredDirectScan) {
  auto prof = phi_profile(kS2S3, 10);
  const double values[10] = {0.110988189531889,  2 * 0.0796272485191217, 3 * 0.0475945586256496,
                             4 * 0.0246367564311332, 5 * 0.0241450021205300, 6 * 0.190378234502599,
                             7 * 0.0124983727856678, 8 * 0.0450465137244490, 9 * 0.111971698153096,
                             10 * 0.0455556152488304};
  double best = 1e9;
  for (int q = 1; q <= 10; ++q) {
    const double lp = std::max(1.0, std::log(static_cast<double>(q)));
    best = std::min(best, lp * lp * values[q - 1]);
  }
  EXPECT_NEAR(mad_score(prof, GrowthFunction::log_power(2)).mid(), best, 1e-12);
  auto one = phi_profile(kS2S3, 1);
  EXPECT_NEAR(mad_score(one, GrowthFunction::log_loglog()).mid(), 0.110988189531889, 1e-14);
}

TEST(PhiProperties, SeededPairs) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<long> rad(2, 300);
  std::uniform_int_distribution<std::uint64_t> qm(50, 3000), st(1, 40);
  for (int k = 0; k < 12; ++k) {
    long a = rad(rng), b = rad(rng);
    if (mpz_perfect_square_p(mpz_class(a).get_mpz_t()) || mpz_perfect_square_p(mpz_class(b).get_mpz_t())) continue;
    Pair pair{RealSpec::sqrt_of(a), RealSpec::sqrt_of(b)};
    const std::uint64_t qmax = qm(rng);
    auto full = phi_profile(pair, qmax, 1);
    auto coarse = phi_profile(pair, qmax, st(rng));
    // Running minima are non-increasing and every value is a witness bound.
    for (std::size_t i = 1; i < full.records.size(); ++i) {
      EXPECT_LE(full.records[i].running_min.lo, full.records[i - 1].running_min.lo);
      EXPECT_GT(full.records[i].value.lo, 0.0);
      EXPECT_LE(full.records[i].value.lo, 0.25 * static_cast<double>(full.records[i].q));
    }
    const double w = phi_at(full, static_cast<double>(qmax));
    for (const auto& r : full.records) EXPECT_GE(r.value.hi, w);
    // Different strides agree on running minima at every common q.
    for (const auto& r : coarse.records) {
      const auto& f = full.records[r.q - 1];
      EXPECT_EQ(f.argmin, r.argmin);
      EXPECT_EQ(f.running_min.lo, r.running_min.lo);
    }
    double prev = 1.0;
    for (double Q = 1; Q <= static_cast<double>(qmax); Q *= 1.7) {
      const double v = phi_at(full, Q);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}
