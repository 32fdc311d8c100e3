#pragma once

// Rank-3 lattices: Lambda from a pair, sign and flow maps, determinants, the
// certified first successive minimum and lattice-point counts in regions.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mda/constants.hpp"
#include "mda/counting.hpp"
#include "mda/domain.hpp"
#include "mda/errors.hpp"
#include "mda/interval.hpp"
#include "mda/parallel.hpp"
#include "mda/realnum.hpp"

namespace mda {

using IMat3 = std::array<std::array<Interval, 3>, 3>;
using ZMat3 = std::array<std::array<long long, 3>, 3>;

/// Three generators (rows) with certified entries. When `pair` is set the
/// basis is frame·Lambda(pair) with rows (1,0,0), (0,1,0), (alpha,beta,1)
/// scaled columnwise by the frame.
struct Basis3 {
  std::vector<CertifiedReal> entries;  // row-major 3x3
  std::optional<Pair> pair;
  DiagonalMap frame;
  std::string tag;

  const CertifiedReal& entry(int r, int c) const { return entries[3 * r + c]; }

  IMat3 at(int prec) const {
    IMat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m[r][c] = entry(r, c).at(prec);
    return m;
  }
};

inline Basis3 lattice_from_pair(const Pair& pair) {
  const auto one = CertifiedReal::exact(1.0), zero = CertifiedReal::exact(0.0);
  return {{one, zero, zero, zero, one, zero, CertifiedReal::of(pair.alpha), CertifiedReal::of(pair.beta), one},
          pair,
          DiagonalMap::identity(),
          "Lambda"};
}

inline Basis3 basis_from_rows(const std::array<std::array<double, 3>, 3>& rows) {
  Basis3 b;
  for (const auto& r : rows)
    for (double v : r) b.entries.push_back(CertifiedReal::exact(v));
  b.tag = "rows";
  return b;
}

/// Applies a diagonal map to every generator.
inline Basis3 apply_map(const DiagonalMap& m, const Basis3& basis, const std::string& tag) {
  Basis3 out = basis;
  for (int c = 0; c < 3; ++c) {
    CertifiedReal f([m, c](int p) { return m.entry(c, p); });
    for (int r = 0; r < 3; ++r) out.entries[3 * r + c] = basis.entry(r, c) * f;
  }
  out.frame = compose(m, basis.frame);
  out.tag = tag;
  return out;
}

inline Basis3 apply_tau(int j, const Basis3& basis) {
  return apply_map(tau_map(j), basis, "tau" + std::to_string(j) + "(" + basis.tag + ")");
}

inline Basis3 apply_flow(const DecompositionPlan& plan, long i, const Basis3& basis) {
  return apply_map(flow_map(plan, i), basis, "phi" + std::to_string(i) + "(" + basis.tag + ")");
}

/// c·basis. The result is no longer tied to a pair frame.
inline Basis3 scale(const Basis3& basis, const CertifiedReal& c) {
  Basis3 out = basis;
  for (auto& e : out.entries) e = e * c;
  out.pair.reset();
  out.frame = DiagonalMap::identity();
  out.tag = "scaled(" + basis.tag + ")";
  return out;
}

namespace detail {

inline Interval det3(const IMat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace detail

inline Interval det(const Basis3& basis, int prec = 128) { return detail::det3(basis.at(prec)); }

/// |det| = 1 as an exact identity: Lambda is unit upper triangular and the
/// frame's exponents cancel.
inline bool unit_det_exact(const Basis3& basis) { return basis.pair.has_value() && basis.frame.unit_det(); }

// ---------------------------------------------------------------------------
// First successive minimum.

struct Lambda1Result {
  Interval length;
  std::array<long long, 3> witness{0, 0, 0};  // coefficients on the basis rows
  std::array<double, 3> vector{0, 0, 0};      // witness vector (midpoints)
  bool certified = false;
  std::uint64_t candidates = 0;
  int precision = 0;
};

namespace detail {

using LRow = std::array<long double, 3>;

inline long double ldot(const LRow& a, const LRow& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

/// LLL (delta = 0.99) on floating rows; returns U with U·b reduced. Only a
/// heuristic: the enumeration below certifies the result independently.
inline ZMat3 lll_transform(std::array<LRow, 3> b) {
  ZMat3 U{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  auto gram_schmidt = [&](std::array<LRow, 3>& bs, std::array<std::array<long double, 3>, 3>& mu,
                          std::array<long double, 3>& nrm) {
    for (int i = 0; i < 3; ++i) {
      bs[i] = b[i];
      for (int j = 0; j < i; ++j) {
        mu[i][j] = nrm[j] > 0 ? ldot(b[i], bs[j]) / nrm[j] : 0;
        for (int k = 0; k < 3; ++k) bs[i][k] -= mu[i][j] * bs[j][k];
      }
      nrm[i] = ldot(bs[i], bs[i]);
    }
  };
  std::array<LRow, 3> bs;
  std::array<std::array<long double, 3>, 3> mu{};
  std::array<long double, 3> nrm{};
  int k = 1;
  for (int guard = 0; k < 3 && guard < 100000; ++guard) {
    gram_schmidt(bs, mu, nrm);
    for (int j = k - 1; j >= 0; --j) {
      const long double r = std::nearbyintl(mu[k][j]);
      if (r == 0 || !(std::fabs(r) < 1e18L)) continue;
      const long long ri = static_cast<long long>(r);
      for (int c = 0; c < 3; ++c) {
        b[k][c] -= r * b[j][c];
        U[k][c] -= ri * U[j][c];
      }
      gram_schmidt(bs, mu, nrm);
    }
    if (nrm[k] >= (0.99L - mu[k][k - 1] * mu[k][k - 1]) * nrm[k - 1]) {
      ++k;
    } else {
      std::swap(b[k], b[k - 1]);
      std::swap(U[k], U[k - 1]);
      k = std::max(k - 1, 1);
    }
  }
  return U;
}

inline ZMat3 zmul(const ZMat3& a, const ZMat3& b) {
  ZMat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      __int128 s = 0;
      for (int k = 0; k < 3; ++k) s += static_cast<__int128>(a[i][k]) * b[k][j];
      if (s > static_cast<__int128>(INT64_MAX) || s < static_cast<__int128>(INT64_MIN))
        throw std::overflow_error("lattice reduction transform overflow");
      r[i][j] = static_cast<long long>(s);
    }
  return r;
}

inline bool is_identity(const ZMat3& u) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (u[i][j] != (i == j)) return false;
  return true;
}

inline IMat3 apply_transform(const ZMat3& U, const IMat3& B) {
  IMat3 r;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 3; ++c) {
      Interval s = Interval::exact(0L);
      for (int k = 0; k < 3; ++k)
        if (U[i][k] != 0) s = s + Interval::exact(static_cast<long>(U[i][k])) * B[k][c];
      r[i][c] = s;
    }
  return r;
}

/// Inverse of a symmetric positive 3x3 interval matrix by the adjugate.
inline std::optional<IMat3> inverse_spd(const IMat3& G) {
  const Interval d = det3(G);
  if (less(Interval::exact(0L), d) != Tri::yes) return std::nullopt;
  IMat3 inv;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
      inv[i][j] = (G[r0][c0] * G[r1][c1] - G[r0][c1] * G[r1][c0]) / d;
    }
  return inv;
}

inline constexpr std::uint64_t kEnumerationLimit = 8'000'000;

}  // namespace detail

/// Certified shortest nonzero vector: reduce, take the shortest reduced row as
/// the radius, bound every coefficient through the inverse Gram matrix and
/// enumerate the resulting box. Equal-length minima (v and -v, or symmetric
/// lattices) yield one witness; the length enclosure is what is certified.
inline Lambda1Result lambda1(const Basis3& basis, int max_precision = kDefaultMaxPrecision) {
  Lambda1Result best_effort;
  for (int prec : precision_schedule(std::max(max_precision, 128))) {
    if (prec < 128) continue;
    const IMat3 B = basis.at(prec);
    ZMat3 U{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int round = 0; round < 8; ++round) {
      const IMat3 cur = detail::apply_transform(U, B);
      std::array<detail::LRow, 3> rows;
      for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) rows[i][c] = static_cast<long double>(cur[i][c].mid());
      const ZMat3 V = detail::lll_transform(rows);
      if (detail::is_identity(V)) break;
      U = detail::zmul(V, U);
    }
    const IMat3 Bp = detail::apply_transform(U, B);
    IMat3 G;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        G[i][j] = Bp[i][0] * Bp[j][0] + Bp[i][1] * Bp[j][1] + Bp[i][2] * Bp[j][2];
    const auto Ginv = detail::inverse_spd(G);
    if (!Ginv) continue;

    double r2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) r2 = std::min(r2, G[i][i].hi_up());
    std::array<long long, 3> bound{};
    std::uint64_t boxes = 1;
    bool too_big = false;
    for (int k = 0; k < 3; ++k) {
      const double b = sqrt(Interval::exact(r2) * (*Ginv)[k][k]).hi_up();
      if (!(b < 1e6)) {
        too_big = true;
        break;
      }
      bound[k] = static_cast<long long>(std::floor(b));
      boxes *= static_cast<std::uint64_t>(2 * bound[k] + 1);
    }
    if (too_big || boxes > detail::kEnumerationLimit) continue;

    std::array<std::array<FastInterval, 3>, 3> F;
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 3; ++c) F[i][c] = FastInterval::from(Bp[i][c]);
    double best_hi = r2, min_lo = std::numeric_limits<double>::infinity();
    std::array<long long, 3> best{0, 0, 0};
    std::uint64_t visited = 0;
    for (long long c0 = 0; c0 <= bound[0]; ++c0)
      for (long long c1 = c0 == 0 ? 0 : -bound[1]; c1 <= bound[1]; ++c1)
        for (long long c2 = (c0 == 0 && c1 == 0) ? 1 : -bound[2]; c2 <= bound[2]; ++c2) {
          ++visited;
          FastInterval n2 = FastInterval::exact(0.0);
          for (int c = 0; c < 3; ++c) {
            const FastInterval v = FastInterval::integer(c0) * F[0][c] + FastInterval::integer(c1) * F[1][c] +
                                   FastInterval::integer(c2) * F[2][c];
            n2 = n2 + square(v);
          }
          if (n2.lo > r2) continue;  // certainly longer than the radius
          min_lo = std::min(min_lo, n2.lo);
          if (n2.hi < best_hi || best == std::array<long long, 3>{0, 0, 0}) {
            if (n2.hi <= best_hi) best_hi = n2.hi;
            best = {c0, c1, c2};
          }
        }
    if (best == std::array<long long, 3>{0, 0, 0}) continue;

    Lambda1Result r;
    r.length = sqrt(Interval::exact(std::max(0.0, min_lo), best_hi).widened_to(prec));
    for (int k = 0; k < 3; ++k) {
      long long s = 0;
      for (int i = 0; i < 3; ++i) s += best[i] * U[i][k];
      r.witness[k] = s;
    }
    for (int c = 0; c < 3; ++c) {
      Interval v = Interval::exact(0L);
      for (int i = 0; i < 3; ++i) v = v + Interval::exact(static_cast<long>(best[i])) * Bp[i][c];
      r.vector[c] = v.mid();
    }
    r.candidates = visited;
    r.precision = prec;
    r.certified = best_hi - min_lo <= 1e-9 * best_hi;
    if (r.certified) return r;
    best_effort = r;
  }
  if (best_effort.precision == 0) throw UndecidablePredicate("lambda1: enumeration box not certifiable");
  return best_effort;
}

// ---------------------------------------------------------------------------
// Regions and lattice-point counts.

/// A region frame(R0) where R0 is given by certified predicates in base
/// coordinates and an outward bounding box.
struct Region3 {
  std::string name;
  std::array<double, 6> box{};  // xlo, xhi, ylo, yhi, zlo, zhi of R0
  DiagonalMap frame;
  std::function<Tri(const FastInterval&, const FastInterval&, const FastInterval&)> fast;
  std::function<Tri(const Interval&, const Interval&, const Interval&, int)> exact;
};

inline Region3 map_region(const DiagonalMap& m, const Region3& r) {
  Region3 out = r;
  out.frame = compose(m, r.frame);
  out.name = "map(" + r.name + ")";
  return out;
}

namespace detail {

/// Wraps a generic predicate pred(thresholds, x, y, z) over a threshold
/// builder th<I>(prec) into a Region3.
template <class Thresholds, class Pred>
Region3 make_region(std::string name, std::array<double, 6> box, Thresholds th, Pred pred) {
  Region3 r;
  r.name = std::move(name);
  r.box = box;
  auto fast_t = std::make_shared<decltype(th.template operator()<FastInterval>(128))>(th.template operator()<FastInterval>(128));
  using ExactT = decltype(th.template operator()<Interval>(128));
  auto e128 = std::make_shared<ExactT>(th.template operator()<Interval>(128));
  auto e256 = std::make_shared<ExactT>(th.template operator()<Interval>(256));
  r.fast = [fast_t, pred](const FastInterval& x, const FastInterval& y, const FastInterval& z) {
    return pred(*fast_t, x, y, z);
  };
  r.exact = [e128, e256, th, pred](const Interval& x, const Interval& y, const Interval& z, int p) {
    if (p <= 128) return pred(*e128, x, y, z);
    if (p <= 256) return pred(*e256, x, y, z);
    return pred(th.template operator()<Interval>(p), x, y, z);
  };
  return r;
}

inline double up(const ExpRational& v) { return v.interval(64).hi_up(); }

}  // namespace detail

/// Z = {|x|, |y| <= T, |xy| < eps, 0 < z <= Q}.
inline Region3 region_Z(const ExpRational& eps, const ExpRational& T, const ExpRational& Q) {
  const double t = detail::up(T), q = detail::up(Q);
  auto th = [eps, T, Q]<class I>(int p) { return z_thresholds<I>(eps, T, Q, p); };
  return detail::make_region("Z", {-t, t, -t, t, 0.0, q}, th,
                             [](const auto& tt, const auto& x, const auto& y, const auto& z) {
                               return pred::in_Z(tt, x, y, z);
                             });
}

inline Region3 region_Zpiece(ZPiece piece, const ExpRational& eps, const ExpRational& T, const ExpRational& Q) {
  if (piece == ZPiece::Outside) throw std::invalid_argument("Outside is not a region");
  const double t = detail::up(T), q = detail::up(Q);
  std::array<double, 6> box{-t, t, -t, t, 0.0, q};
  if (piece == ZPiece::Z1 || piece == ZPiece::Z3) box[0] = 0.0;
  if (piece == ZPiece::Z2 || piece == ZPiece::Z4) box[1] = 0.0;
  if (piece == ZPiece::Z1 || piece == ZPiece::Z2) box[2] = 0.0;
  if (piece == ZPiece::Z3 || piece == ZPiece::Z4) box[3] = 0.0;
  if (piece == ZPiece::R1) box[2] = box[3] = 0.0;
  if (piece == ZPiece::R2) box[0] = box[1] = 0.0;
  auto th = [eps, T, Q]<class I>(int p) { return z_thresholds<I>(eps, T, Q, p); };
  return detail::make_region(name(piece), box, th,
                             [piece](const auto& tt, const auto& x, const auto& y, const auto& z) {
                               return pred::in_Zpiece(tt, piece, x, y, z);
                             });
}

/// R1 ∩ R2 = {0} x {0} x (0, Q].
inline Region3 region_R1R2(const ExpRational& eps, const ExpRational& T, const ExpRational& Q) {
  auto th = [eps, T, Q]<class I>(int p) { return z_thresholds<I>(eps, T, Q, p); };
  return detail::make_region("R1R2", {0, 0, 0, 0, 0.0, detail::up(Q)}, th,
                             [](const auto& tt, const auto& x, const auto& y, const auto& z) {
                               return pred::in_R1(tt, x, y, z) & pred::in_R2(tt, x, y, z);
                             });
}

/// piece x (0, Q] for a piece of H1 (Outside means all of H1).
inline Region3 region_Hpiece(const DecompositionPlan& plan, const HPiece& piece) {
  const double t = detail::up(plan.T), q = detail::up(plan.Q);
  std::array<double, 6> box{0.0, t, 0.0, t, 0.0, q};
  if (piece.kind != HPiece::Kind::Outside) {
    const auto b = detail::piece_box(detail::PlanDoubles(plan), piece);
    box[1] = std::min(t, b[0] * (1 + 1e-9));
    box[3] = std::min(t, b[1] * (1 + 1e-9));
  }
  auto th = [plan]<class I>(int p) { return plan_thresholds<I>(plan, p); };
  const std::string nm = piece.kind == HPiece::Kind::Outside ? "H1" : piece.to_string();
  return detail::make_region(nm, box, th, [piece](const auto& tt, const auto& x, const auto& y, const auto& z) {
    const Tri zr = pred::z_range(tt.z, z);
    if (piece.kind == HPiece::Kind::Outside) return zr & pred::in_H1(tt, x, y);
    return zr & pred::in_Hpiece(tt, piece, x, y);
  });
}

/// The image phi(piece x (0, Q]) under the flow paired with the piece.
inline Region3 region_flowed(const DecompositionPlan& plan, const HPiece& piece) {
  return map_region(flow_map(plan, paired_flow_index(plan, piece)), region_Hpiece(plan, piece));
}

namespace detail {

inline std::int64_t floor_widen(double v) { return static_cast<std::int64_t>(std::floor(widen_down(v))) - 1; }
inline std::int64_t ceil_widen(double v) { return static_cast<std::int64_t>(std::ceil(widen_up(v))) + 1; }

/// Points of Lambda(pair) in R0, q-slicing in base coordinates.
inline std::uint64_t count_preimage(const Pair& pair, const Region3& region, unsigned jobs, int max_precision) {
  const auto& b = region.box;
  const double qlo = std::max(1.0, std::floor(b[4])), qhi = std::floor(b[5]);
  if (qhi < qlo) return 0;
  if (qhi > 1e12) throw std::out_of_range("region height too large to enumerate");
  const auto q0 = static_cast<std::uint64_t>(qlo), q1 = static_cast<std::uint64_t>(qhi);
  FracSource fa(pair.alpha, q1), fb(pair.beta, q1);
  auto parts = run_blocks(q0, q1, jobs, [&](std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t c = 0;
    for (std::uint64_t q = lo; q <= hi; ++q) {
      const auto a = fa.at(q), bb = fb.at(q);
      const FastInterval z = FastInterval::integer(static_cast<std::int64_t>(q));
      // x = m + f_a with m = p1 + base_a
      const std::int64_t mlo = floor_widen(b[0] - a.f.hi), mhi = ceil_widen(b[1] - a.f.lo);
      const std::int64_t nlo = floor_widen(b[2] - bb.f.hi), nhi = ceil_widen(b[3] - bb.f.lo);
      for (std::int64_t m = mlo; m <= mhi; ++m) {
        const FastInterval x = FastInterval::integer(m) + a.f;
        if (x.lo > b[1] || x.hi < b[0]) continue;
        for (std::int64_t n = nlo; n <= nhi; ++n) {
          const FastInterval y = FastInterval::integer(n) + bb.f;
          Tri t = region.fast(x, y, z);
          if (t == Tri::unknown) {
            const std::int64_t p1 = m - a.base, p2 = n - bb.base;
            t = tri(decide_escalating(
                [&](int p) {
                  return region.exact(fa.offset_multiple(p1, q, p), fb.offset_multiple(p2, q, p),
                                      Interval::exact(mpz_class(static_cast<unsigned long>(q))), p);
                },
                max_precision, region.name + " membership at q=" + std::to_string(q)));
          }
          if (t == Tri::yes) ++c;
        }
      }
    }
    return c;
  });
  std::uint64_t total = 0;
  for (auto c : parts) total += c;
  return total;
}

/// Points of a frame·Lambda basis in a region with a different frame: lattice
/// vectors are formed from the basis entries and pulled back through the
/// region's frame numerically.
inline std::uint64_t count_direct(const Basis3& basis, const Region3& region, int max_precision) {
  for (auto [r, c] : {std::pair{0, 1}, {0, 2}, {1, 0}, {1, 2}})
    if (is_zero(basis.entry(r, c).at(64)) != Tri::yes)
      throw std::invalid_argument("count_in_region needs a lower triangular basis of shape frame·Lambda");
  const DiagonalMap inv = region.frame.inverse();
  auto coords = [&](int prec) {
    std::array<Interval, 5> k;  // B00, B11, B20, B21, B22 pulled back through the frame
    k[0] = basis.entry(0, 0).at(prec) * inv.entry(0, prec);
    k[1] = basis.entry(1, 1).at(prec) * inv.entry(1, prec);
    k[2] = basis.entry(2, 0).at(prec) * inv.entry(0, prec);
    k[3] = basis.entry(2, 1).at(prec) * inv.entry(1, prec);
    k[4] = basis.entry(2, 2).at(prec) * inv.entry(2, prec);
    return k;
  };
  const auto k128 = coords(128);
  std::array<FastInterval, 5> f;
  for (int i = 0; i < 5; ++i) f[i] = FastInterval::from(k128[i]);
  const auto& b = region.box;
  // base z = q·f[4]
  const FastInterval zq = f[4];
  if (!(zq.lo > 0.0 || zq.hi < 0.0)) throw std::invalid_argument("degenerate z scale");
  const FastInterval zr = FastInterval{b[4], b[5]} / zq;
  const std::int64_t qlo = floor_widen(zr.lo), qhi = ceil_widen(zr.hi);
  if (qhi - qlo > 100'000'000) throw std::out_of_range("region height too large to enumerate");
  std::uint64_t c = 0;
  for (std::int64_t q = qlo; q <= qhi; ++q) {
    const FastInterval qi = FastInterval::integer(q);
    const FastInterval z = qi * f[4];
    const FastInterval ox = qi * f[2], oy = qi * f[3];
    const FastInterval pr = (FastInterval{b[0], b[1]} - ox) / f[0];
    const FastInterval nr = (FastInterval{b[2], b[3]} - oy) / f[1];
    for (std::int64_t p1 = floor_widen(pr.lo); p1 <= ceil_widen(pr.hi); ++p1) {
      const FastInterval x = FastInterval::integer(p1) * f[0] + ox;
      for (std::int64_t p2 = floor_widen(nr.lo); p2 <= ceil_widen(nr.hi); ++p2) {
        const FastInterval y = FastInterval::integer(p2) * f[1] + oy;
        Tri t = region.fast(x, y, z);
        if (t == Tri::unknown) {
          t = tri(decide_escalating(
              [&](int p) {
                const auto k = coords(p);
                const Interval Q = Interval::exact(static_cast<long>(q));
                return region.exact(Interval::exact(static_cast<long>(p1)) * k[0] + Q * k[2],
                                    Interval::exact(static_cast<long>(p2)) * k[1] + Q * k[3], Q * k[4], p);
              },
              max_precision, region.name + " membership at q=" + std::to_string(q)));
        }
        if (t == Tri::yes) ++c;
      }
    }
  }
  return c;
}

}  // namespace detail

/// Exact number of lattice points in the region. A basis and region sharing
/// a frame are counted in the common preimage.
inline std::uint64_t count_in_region(const Basis3& basis, const Region3& region, unsigned jobs = 1,
                                     int max_precision = kDefaultMaxPrecision) {
  if (!basis.pair) throw std::invalid_argument("count_in_region needs a basis built from a pair");
  if (basis.frame == region.frame) return detail::count_preimage(*basis.pair, region, jobs, max_precision);
  return detail::count_direct(basis, region, max_precision);
}

/// The same count always formed in the region's coordinates.
inline std::uint64_t count_in_region_direct(const Basis3& basis, const Region3& region,
                                            int max_precision = kDefaultMaxPrecision) {
  return detail::count_direct(basis, region, max_precision);
}

// ---------------------------------------------------------------------------
// Checks.

struct MinBoundReport {
  long i = 0;
  int j = 1;
  Interval lambda1;
  Interval threshold;  // min(1, 1/(2T))·phi^(1/3)
  Interval q0_floor;   // theta·sqrt(eps)/T, the bound for vectors with q = 0
  std::array<long long, 3> witness{0, 0, 0};
  bool certified = false;
  bool holds = false;
  std::string suspect;
};

/// Condition eps·Q >= phiQ; below it M is empty and the lower bound is not claimed.
inline void require_nonempty_regime(const ExpRational& eps, const ExpRational& Q, double phiQ) {
  detail::require_witness(phiQ);
  const Tri t = less(eps.interval(128) * Q.interval(128), Interval::exact(phiQ));
  if (t != Tri::no) throw ConditionViolated("eps*Q < phi(Q)");
}

inline MinBoundReport minbound_check(const Pair& pair, const DecompositionPlan& plan, long i, int j, double phiQ,
                                     int max_precision = kDefaultMaxPrecision) {
  require_nonempty_regime(plan.eps, plan.Q, phiQ);
  const Basis3 b = apply_flow(plan, i, apply_tau(j, lattice_from_pair(pair)));
  const Lambda1Result l = lambda1(b, max_precision);
  MinBoundReport r;
  r.i = i;
  r.j = j;
  r.lambda1 = l.length;
  r.witness = l.witness;
  r.certified = l.certified;
  const Interval T = plan.T.interval(128);
  const Interval factor = min(Interval::exact(1L), Interval::exact(1L) / (Interval::exact(2L) * T));
  r.threshold = factor * cbrt(Interval::exact(phiQ).widened_to(128));
  r.q0_floor = plan.theta(128) * sqrt(plan.eps.interval(128)) / T;
  const Tri t = less_eq(r.threshold, r.lambda1);
  if (t == Tri::unknown) throw UndecidablePredicate("lambda1 vs threshold");
  r.holds = t == Tri::yes && r.certified;
  if (!r.holds)
    r.suspect = detail::blame(pair, floor_of(plan.Q).get_ui(), phiQ) == "phi witness" ? "phi witness" : "lambda1";
  return r;
}

struct CountingLemmaReport {
  std::uint64_t count = 0;
  Interval volume;
  Interval discrepancy;  // |count - volume/|det||
  Interval lambda1;
  Interval bound;        // D3·M·(1 + (L/lambda1)^2)
  bool holds = false;
};

inline CountingLemmaReport counting_lemma_check(const Basis3& basis, const Region3& region, const Interval& volume,
                                                const CoverReport& cover) {
  CountingLemmaReport r;
  r.count = count_in_region(basis, region);
  r.volume = volume;
  const Interval d = unit_det_exact(basis) ? Interval::exact(1L) : abs(det(basis));
  r.discrepancy = abs(Interval::exact(mpz_class(std::to_string(r.count), 10)) - volume / d);
  r.lambda1 = lambda1(basis).length;
  const Interval L = Interval::exact(cover.lipschitz_bound);
  const Interval M = Interval::exact(static_cast<long>(cover.pieces.size()));
  r.bound = detail::c_interval(Constants::D3) * M * (Interval::exact(1L) + square(L / r.lambda1));
  const Tri t = less_eq(r.discrepancy, r.bound);
  if (t == Tri::unknown) throw UndecidablePredicate("counting lemma discrepancy vs bound");
  r.holds = t == Tri::yes;
  return r;
}

/// Sum over the pieces of H1 of the flowed counts of Lambda_j against
/// Vol3(Z1) = eps·Q·(R + 1), compared with C5(1+2T)^2·R·(eps·Q/phi)^(2/3).
struct AssemblyReport {
  int j = 1;
  std::uint64_t count = 0;
  std::uint64_t direct_count = 0;  // |Lambda_j ∩ Z1| without the decomposition
  Interval volume;
  Interval discrepancy;
  Interval bound;
  bool holds = false;
};

inline AssemblyReport assembly_check(const Pair& pair, const DecompositionPlan& plan, int j, double phiQ) {
  require_nonempty_regime(plan.eps, plan.Q, phiQ);
  const Basis3 lj = apply_tau(j, lattice_from_pair(pair));
  AssemblyReport r;
  r.j = j;
  std::vector<HPiece> pieces{HPiece::delta_x(), HPiece::delta_y()};
  for (long i = -plan.N + 1; i <= plan.N; ++i) pieces.push_back(HPiece::slice(i));
  for (const auto& h : pieces) {
    const long fi = paired_flow_index(plan, h);
    r.count += count_in_region(apply_flow(plan, fi, lj), region_flowed(plan, h));
  }
  r.direct_count = count_in_region(lj, region_Zpiece(ZPiece::Z1, plan.eps, plan.T, plan.Q));
  const Interval R = plan.R(128);
  r.volume = plan.eps.interval(128) * plan.Q.interval(128) * (R + Interval::exact(1L));
  r.discrepancy = abs(Interval::exact(mpz_class(std::to_string(r.count), 10)) - r.volume);
  const Interval one_2T = Interval::exact(1L) + Interval::exact(2L) * plan.T.interval(128);
  const Interval ratio = plan.eps.interval(128) * plan.Q.interval(128) / Interval::exact(phiQ).widened_to(128);
  r.bound = detail::c_interval(Constants::C5) * square(one_2T) * R * pow(ratio, mpq_class(2, 3));
  const Tri t = less_eq(r.discrepancy, r.bound);
  if (t == Tri::unknown) throw UndecidablePredicate("assembly discrepancy vs bound");
  r.holds = t == Tri::yes && r.count == r.direct_count;
  return r;
}

struct DecompositionReport {
  std::uint64_t total = 0;                    // |Lambda ∩ Z|
  std::array<std::uint64_t, 4> zj{};          // |Lambda ∩ Z_j|
  std::array<std::uint64_t, 4> zj_via_tau{};  // |Lambda_j ∩ Z1|
  std::uint64_t r1 = 0, r2 = 0, r1r2 = 0;
  std::uint64_t stated_r = 0;                 // 2·floor(T) + 1 as stated in the source
  Interval slack;                             // 4(T+1)
  bool identity_holds = false;                // total = sum zj + r1 + r2 - r1r2
  bool tau_agrees = false;
  bool inequality_holds = false;              // |total - sum zj| < 4(T+1)
  bool holds() const { return identity_holds && tau_agrees && inequality_holds; }
};

inline DecompositionReport decomposition_identity_check(const Pair& pair, const CountParams& params,
                                                        unsigned jobs = 1) {
  params.validate();
  const Basis3 L = lattice_from_pair(pair);
  DecompositionReport r;
  r.total = count_in_region(L, region_Z(params.eps, params.T, params.Q), jobs);
  const std::array<ZPiece, 4> zs{ZPiece::Z1, ZPiece::Z2, ZPiece::Z3, ZPiece::Z4};
  const Region3 z1 = region_Zpiece(ZPiece::Z1, params.eps, params.T, params.Q);
  std::uint64_t sum = 0;
  r.tau_agrees = true;
  for (int j = 1; j <= 4; ++j) {
    r.zj[j - 1] = count_in_region(L, region_Zpiece(zs[j - 1], params.eps, params.T, params.Q), jobs);
    r.zj_via_tau[j - 1] = count_in_region(apply_tau(j, L), z1, jobs);
    r.tau_agrees = r.tau_agrees && r.zj[j - 1] == r.zj_via_tau[j - 1];
    sum += r.zj[j - 1];
  }
  r.r1 = count_in_region(L, region_Zpiece(ZPiece::R1, params.eps, params.T, params.Q), jobs);
  r.r2 = count_in_region(L, region_Zpiece(ZPiece::R2, params.eps, params.T, params.Q), jobs);
  r.r1r2 = count_in_region(L, region_R1R2(params.eps, params.T, params.Q), jobs);
  r.stated_r = 2 * floor_of(params.T).get_ui() + 1;
  r.identity_holds = r.total + r.r1r2 == sum + r.r1 + r.r2;
  r.slack = Interval::exact(4L) * (params.T.interval(128) + Interval::exact(1L));
  const double diff = static_cast<double>(r.total > sum ? r.total - sum : sum - r.total);
  const Tri t = less(Interval::exact(diff), r.slack);
  if (t == Tri::unknown) throw UndecidablePredicate("decomposition inequality");
  r.inequality_holds = t == Tri::yes;
  return r;
}

}  // namespace mda
