// The brute-force reference against values frozen from a 50-digit mpmath run.

#include <gtest/gtest.h>

#include "oracle/brute.hpp"

using oracle::Real;

namespace {

const Real kS2 = oracle::sqrt_of(2);
const Real kS3 = oracle::sqrt_of(3);

double d(const Real& x) { return static_cast<double>(x); }

}  // namespace

TEST(Oracle, ProductsMatchFrozenTable) {
  const double frozen[10] = {0.110988189531889,  0.0796272485191217, 0.0475945586256496, 0.0246367564311332,
                             0.0241450021205300, 0.190378234502599,  0.0124983727856678, 0.0450465137244490,
                             0.111971698153096,  0.0455556152488304};
  for (int q = 1; q <= 10; ++q) EXPECT_NEAR(d(oracle::product(kS2, kS3, q)), frozen[q - 1], 1e-14) << q;
}

TEST(Oracle, DiagonalCount) {
  EXPECT_EQ(oracle::count_diag(kS2, kS3, Real("0.1"), 10), 7u);
  EXPECT_EQ(oracle::count_diag(kS2, kS3, Real("0.2"), 1), 1u);
  EXPECT_EQ(oracle::count_diag(kS2, kS3, Real("0.05"), 1), 0u);
}

TEST(Oracle, FullCount) {
  EXPECT_EQ(oracle::count_M(kS2, kS3, Real("0.1"), Real(1), 2), 2u);
  EXPECT_EQ(oracle::count_M(kS2, kS3, Real("0.05"), Real(1), 2), 0u);
  EXPECT_EQ(oracle::count_M(kS2, kS3, Real("0.1"), Real("0.5"), 10), 7u);
}

TEST(Oracle, RecsumAndPhi) {
  EXPECT_NEAR(d(oracle::recsum(kS2, kS3, 1)), 9.00997, 1e-5);
  EXPECT_NEAR(d(oracle::recsum(kS2, kS3, 2)), 21.568482738693, 1e-9);
  auto [m10, at10] = oracle::phi_min(kS2, kS3, 10);
  EXPECT_EQ(at10, 7);
  EXPECT_NEAR(d(m10), 0.0874886094996746, 1e-12);
  auto [m4, at4] = oracle::phi_min(kS2, kS3, 4);
  EXPECT_EQ(at4, 4);
  EXPECT_NEAR(d(m4), 0.0985470257245328, 1e-12);
}

TEST(Oracle, BoxLambda1) {
  const double id[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  EXPECT_DOUBLE_EQ(oracle::box_lambda1(id, 2), 1.0);
  const double diag[3][3] = {{2, 0, 0}, {0, 0.5, 0}, {0, 0, 1}};
  EXPECT_DOUBLE_EQ(oracle::box_lambda1(diag, 2), 0.5);
}
