#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mda/domain.hpp"

using namespace mda;

namespace {

ExpRational X(const char* s) { return ExpRational::parse(s); }

// Plan with R = 2 exactly: eps = e^-2, T = 1, so N = 2 and nu = 1/e.
DecompositionPlan unit_plan() { return make_plan(X("exp(-2)"), X("1"), X("100")); }

// Independent double-precision membership used as a reference.
bool ref_slice(double nu, long i, double eps, double x, double y) {
  return std::pow(nu, i) * x <= y && y < std::pow(nu, i - 1) * x && x * y < eps && x > 0;
}

}  // namespace

TEST(Plan, UnitPlanQuantities) {
  auto p = unit_plan();
  EXPECT_EQ(p.N, 2);
  EXPECT_TRUE(p.R().contains(2.0));
  EXPECT_TRUE(exp(p.log_nu()).contains(std::exp(-1.0)) || std::fabs(exp(p.log_nu()).mid() - std::exp(-1.0)) < 1e-15);
  EXPECT_NEAR(vol_S0(p).mid(), 0.0676676416183063459, 1e-15);
  EXPECT_NEAR(vol_slice3(p).mid(), 6.76676416183063459, 1e-13);
  EXPECT_NEAR(p.theta().mid(), 5.14148013391105069, 1e-13);
}

TEST(Plan, NuPowerIdentities) {
  for (const char* eps : {"0.01", "1e-4", "exp(-2)", "0.001"})
    for (const char* T : {"1/2", "1", "2"}) {
      if (compare_log(X(eps) / pow(X(T), 2), -2) > 0) continue;
      auto p = make_plan(X(eps), X(T), X("1000"));
      EXPECT_EQ(*p.nu_pow_exact(p.N), X(eps) / pow(X(T), 2));
      EXPECT_EQ(*p.nu_pow_exact(-p.N), pow(X(T), 2) / X(eps));
      EXPECT_FALSE(p.nu_pow_exact(1).has_value() && p.N > 1);
      const double nu = exp(p.log_nu()).mid();
      EXPECT_GT(nu, std::exp(-1.5));
      EXPECT_LE(nu, std::exp(-1.0) * (1 + 1e-15));
      const Interval gap = abs(p.nu_pow(p.N, 128) - (X(eps) / pow(X(T), 2)).interval(128));
      EXPECT_EQ(less(gap, Interval::exact(1e-30)), Tri::yes);
    }
}

TEST(Plan, RejectsLargeEpsAndSmallQ) {
  EXPECT_THROW(make_plan(X("0.2"), X("1"), X("10")), ConditionViolated);
  EXPECT_THROW(make_plan(X("0.01"), X("1"), X("1/2")), std::invalid_argument);
}

TEST(ClassifyZ, Examples) {
  const auto e = X("0.01"), T = X("1/2"), Q = X("10");
  EXPECT_EQ(classify_Z(0.05, 0.05, 1, e, T, Q), ZPiece::Z1);
  EXPECT_EQ(classify_Z(-0.05, 0.05, 1, e, T, Q), ZPiece::Z2);
  EXPECT_EQ(classify_Z(0.05, -0.05, 1, e, T, Q), ZPiece::Z3);
  EXPECT_EQ(classify_Z(-0.05, -0.05, 1, e, T, Q), ZPiece::Z4);
  EXPECT_EQ(classify_Z(0.3, 0, 5, e, T, Q), ZPiece::R1);
  EXPECT_EQ(classify_Z(0, -0.4, 5, e, T, Q), ZPiece::R2);
  EXPECT_EQ(classify_Z(0, 0, 5, e, T, Q), ZPiece::R1);
  EXPECT_EQ(classify_Z(0.3, 0.1, 1, e, T, Q), ZPiece::Outside);
  EXPECT_EQ(classify_Z(0.6, 0.001, 1, e, T, Q), ZPiece::Outside);
  EXPECT_EQ(classify_Z(0.05, 0.05, 0, e, T, Q), ZPiece::Outside);
  EXPECT_EQ(classify_Z(0.05, 0.05, 10, e, T, Q), ZPiece::Z1);
  EXPECT_EQ(classify_Z(0.5, 0.001, 1, e, T, Q), ZPiece::Z1);
  // xy == eps exactly is outside (strict inequality).
  EXPECT_EQ(classify_Z(0.5, 0.5, 1, X("1/4"), X("1"), Q), ZPiece::Outside);
}

TEST(ClassifyZ, PiecesPartitionRandomPoints) {
  const auto e = X("0.01"), T = X("1/2"), Q = X("10");
  auto t = z_thresholds<Interval>(e, T, Q, 128);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.5, 0.5), uz(0.0, 10.0);
  for (int k = 0; k < 5000; ++k) {
    const double x = u(rng), y = u(rng), z = uz(rng);
    const auto xi = Interval::exact(x), yi = Interval::exact(y), zi = Interval::exact(z);
    int hits = 0;
    for (ZPiece p : {ZPiece::Z1, ZPiece::Z2, ZPiece::Z3, ZPiece::Z4, ZPiece::R1, ZPiece::R2})
      hits += pred::in_Zpiece(t, p, xi, yi, zi) == Tri::yes;
    const bool inside = std::fabs(x * y) < 0.01 * (1 - 1e-12);
    const bool outside = std::fabs(x * y) > 0.01 * (1 + 1e-12);
    if (inside) EXPECT_EQ(hits, 1);
    if (outside) EXPECT_EQ(hits, 0);
    const ZPiece c = classify_Z(x, y, z, e, T, Q);
    EXPECT_EQ(c == ZPiece::Outside, hits == 0);
    if (hits == 1) EXPECT_EQ(pred::in_Zpiece(t, c, xi, yi, zi), Tri::yes);
  }
}

TEST(ClassifyH1, Examples) {
  auto p = unit_plan();
  EXPECT_EQ(classify_H1(0.4, 0.3, p), HPiece::slice(1));
  EXPECT_EQ(classify_H1(0.3, 0.4, p), HPiece::slice(0));
  EXPECT_EQ(classify_H1(0.5, 0.01, p), HPiece::delta_x());
  EXPECT_EQ(classify_H1(0.01, 0.5, p), HPiece::delta_y());
  EXPECT_EQ(classify_H1(0.5, 0.5, p), HPiece::outside());
  EXPECT_EQ(classify_H1(-0.1, 0.1, p), HPiece::outside());
  // y = x is the lower edge of S_0.
  EXPECT_EQ(classify_H1(0.25, 0.25, p), HPiece::slice(0));
}

TEST(ClassifyH1, ExactlyOnePieceAndMatchesReference) {
  for (const char* eps : {"exp(-2)", "0.01", "1e-4"}) {
    auto p = make_plan(X(eps), X("1"), X("10"));
    H1Classifier cls(p);
    auto t = plan_thresholds<Interval>(p, 128);
    const double e = p.eps.approx(), nu = exp(p.log_nu()).mid();
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int in_h1 = 0;
    for (int k = 0; k < 4000; ++k) {
      // log-uniform coordinates reach the thin pieces
      const double x = std::pow(10.0, -6 * u(rng)), y = std::pow(10.0, -6 * u(rng));
      const auto xi = Interval::exact(x), yi = Interval::exact(y);
      if (pred::in_H1(t, xi, yi) != Tri::yes) {
        EXPECT_EQ(cls(x, y), HPiece::outside());
        continue;
      }
      ++in_h1;
      int hits = (pred::in_DeltaX(t, xi, yi) == Tri::yes) + (pred::in_DeltaY(t, xi, yi) == Tri::yes);
      for (long i = -p.N + 1; i <= p.N; ++i) hits += pred::in_Slice(t, i, xi, yi) == Tri::yes;
      EXPECT_EQ(hits, 1) << x << " " << y;
      const HPiece h = cls(x, y);
      if (h.kind == HPiece::Kind::Slice) {
        const double r = y / x;
        // away from the window edges the double reference agrees
        const double pos = std::log(r) / std::log(nu);
        if (std::fabs(pos - std::round(pos)) > 1e-9) EXPECT_TRUE(ref_slice(nu, h.index, e, x, y));
      }
    }
    EXPECT_GT(in_h1, 100);
  }
}

TEST(ClassifyH1, OutOfRangeSliceIndexThrows) {
  auto p = unit_plan();
  auto t = plan_thresholds<Interval>(p, 64);
  EXPECT_THROW(pred::in_Slice(t, 3L, Interval::exact(0.1), Interval::exact(0.1)), IndexOutOfRange);
  EXPECT_THROW(pred::in_Slice(t, -2L, Interval::exact(0.1), Interval::exact(0.1)), IndexOutOfRange);
  EXPECT_THROW(flow_map(p, 3), IndexOutOfRange);
  EXPECT_THROW(tau_map(5), IndexOutOfRange);
}

TEST(Volume, MonteCarloAreaOfS0) {
  auto p = make_plan(X("0.01"), X("1"), X("10"));
  const double e = 0.01, nu = exp(p.log_nu()).mid();
  const double bx = std::sqrt(e), by = std::sqrt(e / nu);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0, bx), uy(0, by);
  const int n = 200000;
  int hit = 0;
  for (int k = 0; k < n; ++k) hit += ref_slice(nu, 0, e, ux(rng), uy(rng));
  const double frac = static_cast<double>(hit) / n;
  const double est = frac * bx * by, sigma = std::sqrt(frac * (1 - frac) / n) * bx * by;
  EXPECT_NEAR(vol_S0(p).mid(), est, 3 * sigma);
  EXPECT_NEAR(vol_S0(p).mid(), -0.5 * e * std::log(nu), 1e-15);
}

TEST(Flow, DeterminantIsOneSymbolically) {
  auto p = make_plan(X("1e-3"), X("2"), X("1e5"));
  for (long i = -p.N + 1; i <= p.N; ++i)
    for (int j = 1; j <= 4; ++j) {
      DiagonalMap m = compose(flow_map(p, i), tau_map(j));
      EXPECT_TRUE(m.unit_det());
      EXPECT_EQ(std::abs(m.det_sign()), 1);
      EXPECT_TRUE(abs(m.det(128)).contains(1.0));
      EXPECT_TRUE(compose(m, m.inverse()).unit_det());
      EXPECT_FALSE(compose(m, m.inverse()).has_flow());
    }
}

TEST(Flow, SliceMapsOntoS0) {
  auto p = make_plan(X("1e-3"), X("1"), X("100"));
  H1Classifier cls(p);
  const double e = 1e-3, nu = exp(p.log_nu()).mid();
  std::mt19937_64 rng(8);
  for (long i = -p.N + 1; i <= p.N; ++i) {
    PieceSampler s(cls, HPiece::slice(i));
    for (int k = 0; k < 200; ++k) {
      auto pt = s(rng);
      const double gx = std::pow(nu, i / 2.0) * pt[0], gy = std::pow(nu, -i / 2.0) * pt[1];
      // ratios scale by nu^-i and the product is preserved
      EXPECT_GE(gy / gx, 1 - 1e-12);
      EXPECT_LT(gy / gx, (1 + 1e-12) / nu);
      EXPECT_LT(gx * gy, e * (1 + 1e-12));
    }
  }
}

TEST(Flow, PairedIndices) {
  auto p = make_plan(X("1e-3"), X("1"), X("100"));
  EXPECT_EQ(paired_flow_index(p, HPiece::delta_x()), p.N);
  EXPECT_EQ(paired_flow_index(p, HPiece::delta_y()), -p.N + 1);
  EXPECT_EQ(paired_flow_index(p, HPiece::slice(-2)), -2);
}

TEST(Containment, AllPiecesFitTheCube) {
  for (const char* eps : {"0.01", "1e-4"})
    for (const char* T : {"1/2", "2"}) {
      auto p = make_plan(X(eps), X(T), X("1e4"));
      H1Classifier cls(p);
      std::vector<HPiece> pieces{HPiece::delta_x(), HPiece::delta_y()};
      for (long i = -p.N + 1; i <= p.N; ++i) pieces.push_back(HPiece::slice(i));
      for (const auto& h : pieces) {
        auto r = containment_check(cls, h, 500, 99);
        EXPECT_TRUE(r.holds()) << p.to_string() << " " << h.to_string();
        EXPECT_LE(r.max_coordinate, r.bound);
        EXPECT_EQ(r.samples, 502u);
      }
    }
}

TEST(LipschitzCover, BoundsAndCoverage) {
  for (const char* eps : {"exp(-2)", "0.01", "1e-4"}) {
    auto p = make_plan(X(eps), X("1"), X("1e3"));
    H1Classifier cls(p);
    const double cube = std::cbrt(p.V().mid());
    std::vector<HPiece> pieces{HPiece::delta_x(), HPiece::delta_y(), HPiece::slice(1), HPiece::slice(p.N),
                               HPiece::slice(-p.N + 1)};
    for (const auto& h : pieces) {
      auto r = lipschitz_cover(cls, h, 4000, 7);
      EXPECT_EQ(r.pieces.size(), 5u);
      EXPECT_TRUE(r.holds()) << h.to_string() << " observed " << r.max_observed << " gap " << r.coverage_gap;
      EXPECT_NEAR(r.lipschitz_bound, 12 * cube, 1e-9 * cube);
      EXPECT_LT(r.coverage_gap, 1e-9 * cube);
      if (h.kind == HPiece::Kind::Slice) {
        EXPECT_GT(r.max_sheet, 0.0);
        EXPECT_LE(r.max_sheet, 4 * cube);
      } else {
        EXPECT_EQ(r.max_sheet, 0.0);
      }
    }
  }
}

TEST(Partition, MonteCarloCheck) {
  for (const char* eps : {"exp(-2)", "0.01", "1e-4"}) {
    auto p = make_plan(X(eps), X("1"), X("1000"));
    auto r = partition_check(p, 3000, 5);
    EXPECT_TRUE(r.holds()) << eps << " " << r.z_failures << " " << r.h_failures;
    EXPECT_GT(r.z_inside, 300u);
    EXPECT_GT(r.h_inside, 300u);
  }
}
