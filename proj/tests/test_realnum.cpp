#include <gtest/gtest.h>

#include <random>

#include "mda/realnum.hpp"

using namespace mda;

namespace {

mpz_class Z(long v) { return mpz_class(v); }

// The enclosure meets [x - tol, x + tol]; x is a rounded decimal of the truth.
bool meets(const Interval& v, double x, double tol = 1e-15) {
  return v.lo_down() <= x + tol && v.hi_up() >= x - tol;
}

}  // namespace

TEST(Eval, SqrtTwoCellWidth) {
  Interval v = eval(RealSpec::sqrt_of(2), 30);
  EXPECT_TRUE(meets(v, 1.41421356, 1e-8));
  EXPECT_LE(v.width(), std::ldexp(1.0, -29));
}

TEST(Eval, ExactBallIsPoint) {
  Interval v = eval(RealSpec::ball("2.25", "0"), 40);
  EXPECT_TRUE(v.is_point());
  EXPECT_EQ(v.lo_exact(), mpq_class(9, 4));
}

TEST(Eval, GoldenRatio) {
  Interval v = eval(RealSpec::golden(), 30);
  EXPECT_TRUE(meets(v, 1.6180339887, 1e-10));
}

TEST(Eval, NegativeDenominatorAndCoefficient) {
  // (1 - sqrt(5)) / -2 = 0.618...
  Interval v = eval(RealSpec::surd(1, -1, -2, 5), 60);
  EXPECT_TRUE(meets(v, 0.6180339887498949));
  Interval w = eval(RealSpec::surd(0, -3, 7, 2), 60);
  EXPECT_TRUE(meets(w, -3.0 * std::sqrt(2.0) / 7.0));
}

TEST(Eval, WideBallReturnedWhole) {
  Interval v = eval(RealSpec::ball("1.5", "0.25"), 64);
  EXPECT_EQ(v.lo_exact(), mpq_class(5, 4));
  EXPECT_EQ(v.hi_exact(), mpq_class(7, 4));
}

TEST(RealSpecParse, Grammar) {
  EXPECT_EQ(RealSpec::parse("sqrt:2").to_string(), "sqrt:2");
  EXPECT_EQ(RealSpec::parse("quad:1,1,2,5").to_string(), "quad:1,1,2,5");
  EXPECT_EQ(RealSpec::parse("dec:2.25:0").to_string(), "dec:2.25:0");
  EXPECT_THROW(RealSpec::parse("sqrt:4"), std::invalid_argument);
  EXPECT_THROW(RealSpec::parse("quad:1,0,2,5"), std::invalid_argument);
  EXPECT_THROW(RealSpec::parse("quad:1,1,0,5"), std::invalid_argument);
  EXPECT_THROW(RealSpec::parse("quad:1,1,2"), std::invalid_argument);
  EXPECT_THROW(RealSpec::parse("sqrt: 2"), std::invalid_argument);
  EXPECT_THROW(RealSpec::parse("dec:1.0:-1"), std::invalid_argument);
  EXPECT_THROW(RealSpec::parse("pi"), std::invalid_argument);
}

TEST(DistNearestInt, Examples) {
  EXPECT_TRUE(meets(dist_nearest_int(RealSpec::sqrt_of(2), Z(1), 64), 0.41421356237309503));
  EXPECT_TRUE(meets(dist_nearest_int(RealSpec::sqrt_of(2), Z(2), 64), 0.17157287525381, 1e-14));
  Interval b = dist_nearest_int(RealSpec::ball("2.25", "0"), Z(1), 64);
  EXPECT_TRUE(b.is_point());
  EXPECT_EQ(b.lo_exact(), mpq_class(1, 4));
}

TEST(DistNearestInt, AmbiguousBall) {
  EXPECT_THROW(dist_nearest_int(RealSpec::ball("0.5", "1/1000"), Z(1), 64), AmbiguousNearestInteger);
  EXPECT_THROW(dist_nearest_int(RealSpec::ball("0.3", "2"), Z(1), 64), AmbiguousNearestInteger);
  // Straddling an integer is fine: the distance is small either way.
  Interval d = dist_nearest_int(RealSpec::ball("3", "1/100"), Z(1), 64);
  EXPECT_TRUE(d.contains(0.0));
  EXPECT_LE(d.hi_up(), 0.0101);
}

TEST(ProductNorm, FrozenOracleValues) {
  const Pair p{RealSpec::sqrt_of(2), RealSpec::sqrt_of(3)};
  EXPECT_TRUE(meets(product_norm(p.alpha, p.beta, Z(1), 80), 0.110988189531889));
  EXPECT_TRUE(meets(product_norm(p.alpha, p.beta, Z(2), 80), 0.0796272485191217));
  EXPECT_TRUE(meets(product_norm(p.alpha, p.beta, Z(7), 80), 0.0124983727856678));
  EXPECT_LE(product_norm(p.alpha, p.beta, Z(7), 80).width(), 1e-20);
}

TEST(DecideLess, Examples) {
  auto s2 = RealSpec::sqrt_of(2), s3 = RealSpec::sqrt_of(3);
  auto tenth = CertifiedReal::rational(mpq_class(1, 10));
  EXPECT_FALSE(decide_less(product_norm_expr(s2, s3, Z(1)), tenth));
  EXPECT_TRUE(decide_less(product_norm_expr(s2, s3, Z(2)), tenth));
  auto ball = CertifiedReal::of(RealSpec::ball("1.0", "1e-9"));
  EXPECT_THROW(decide_less(ball, ball), UndecidablePredicate);
}

TEST(DecideLess, ExpressionArithmetic) {
  auto s2 = CertifiedReal::of(RealSpec::sqrt_of(2));
  auto two = CertifiedReal::rational(2);
  EXPECT_TRUE(decide_less(s2 * s2 - two, CertifiedReal::rational(mpq_class(1, 1000000))));
  EXPECT_THROW(decide_less(s2 * s2, two), UndecidablePredicate);
}

// Property: random surds and multipliers keep ||q x|| inside [0, 1/2], cells
// nest under refinement, and decide_less is never true both ways.
TEST(RealnumProperties, SeededSurds) {
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<long> small(-20, 20), rad(2, 200), qd(1, 10000000);
  const Interval half_unit = Interval::hull(0, mpq_class(1, 2), 64);
  int checked = 0;
  while (checked < 300) {
    long d = rad(rng), b = small(rng), c = small(rng);
    if (b == 0 || c == 0 || mpz_perfect_square_p(mpz_class(d).get_mpz_t())) continue;
    auto s = RealSpec::surd(small(rng), b, c, d);
    const mpz_class q(qd(rng));
    Interval dist = dist_nearest_int(s, q, 64);
    EXPECT_TRUE(dist.subset_of(half_unit));
    for (int p = 10; p < 80; p += 7) {
      Interval coarse = eval(s, p), fine = eval(s, p + 1);
      EXPECT_TRUE(fine.subset_of(coarse));
    }
    auto x = product_norm_expr(s, RealSpec::sqrt_of(3), q);
    auto y = CertifiedReal::rational(mpq_class(1, 1 << 10));
    EXPECT_FALSE(decide_less(x, y) && decide_less(y, x));
    ++checked;
  }
}
