// Runs the acceptance criteria end to end and prints one PASS/FAIL line per
// criterion. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mda/constants.hpp"
#include "mda/counting.hpp"
#include "mda/domain.hpp"
#include "mda/lattice.hpp"
#include "mda/phi.hpp"
#include "mda/recsum.hpp"
#include "oracle/brute.hpp"

using namespace mda;

namespace {

ExpRational X(const char* s) { return ExpRational::parse(s); }

struct NamedPair {
  const char* name;
  Pair pair;
  oracle::Real a, b;
};

const std::vector<NamedPair>& grid_pairs() {
  static const std::vector<NamedPair> p{
      {"(sqrt2,sqrt3)", {RealSpec::sqrt_of(2), RealSpec::sqrt_of(3)}, oracle::sqrt_of(2), oracle::sqrt_of(3)},
      {"(golden,sqrt2)", {RealSpec::golden(), RealSpec::sqrt_of(2)}, oracle::golden(), oracle::sqrt_of(2)},
      {"(sqrt2,sqrt5)", {RealSpec::sqrt_of(2), RealSpec::sqrt_of(5)}, oracle::sqrt_of(2), oracle::sqrt_of(5)},
  };
  return p;
}

const std::vector<const char*> kEps{"1e-2", "1e-3", "1e-4"};
const std::vector<const char*> kT{"1/2", "1", "2"};
const std::vector<const char*> kQ{"1e3", "1e4", "1e5", "1e6"};

bool in_condition(const ExpRational& eps, const ExpRational& T) {
  return CountParams{eps, T, ExpRational(1)}.theorem_mode();
}

/// All (eps, T, Q) plans of the sweep grid satisfying eps/T^2 <= e^-2.
std::vector<DecompositionPlan> grid_plans() {
  std::vector<DecompositionPlan> plans;
  for (const char* e : kEps)
    for (const char* t : kT) {
      if (!in_condition(X(e), X(t))) continue;
      for (const char* q : kQ) plans.push_back(make_plan(X(e), X(t), X(q)));
    }
  return plans;
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome exact_count_oracle() {
  const auto t0 = Clock::now();
  const auto& p = grid_pairs()[0];
  const auto diag = count_M_diag(p.pair, X("0.1"), X("10"));
  const auto full = count_M(p.pair, {X("0.1"), X("1"), X("2")});
  const auto odiag = oracle::count_diag(p.a, p.b, oracle::Real("0.1"), 10);
  const auto ofull = oracle::count_M(p.a, p.b, oracle::Real("0.1"), oracle::Real(1), 2);
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << "diag=" << diag << " (oracle " << odiag << "), full=" << full << " (oracle " << ofull << "), " << fmt("%.3fs", s);
  return {diag == 7 && full == 2 && odiag == 7 && ofull == 2 && s < 1.0, d.str()};
}

Outcome lattice_identity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20261018);
  std::uniform_int_distribution<int> ek(1, 200), tk(1, 12), qk(1, 10000), pk(0, 2);
  int mismatches = 0;
  for (int k = 0; k < 50; ++k) {
    const auto& np = grid_pairs()[pk(rng)];
    const std::string e = std::to_string(ek(rng)) + "/1000", t = std::to_string(tk(rng)) + "/4";
    const CountParams p{X(e.c_str()), X(t.c_str()), ExpRational(qk(rng))};
    const auto lat = count_in_region(lattice_from_pair(np.pair), region_Z(p.eps, p.T, p.Q));
    if (lat != count_M(np.pair, p)) {
      ++mismatches;
      std::cerr << "  lattice identity mismatch " << np.name << " " << p.to_string() << "\n";
    }
  }
  const double s = seconds_since(t0);
  return {mismatches == 0 && s < 60.0, "50 tuples, " + std::to_string(mismatches) + " mismatches, " + fmt("%.2fs", s)};
}

Outcome theorem_grid() {
  const auto t0 = Clock::now();
  std::vector<ExpRational> qs;
  for (const char* q : kQ) qs.push_back(X(q));
  int cells = 0, failures = 0;
  double worst = 0;  // largest discrepancy / bound
  for (const auto& np : grid_pairs()) {
    const auto prof = phi_profile(np.pair, 1000000, 1000000);
    for (const char* e : kEps)
      for (const char* t : kT) {
        const ExpRational eps = X(e), T = X(t);
        if (!in_condition(eps, T)) continue;
        const auto counts = count_M_checkpoints(np.pair, eps, T, qs, jobs());
        for (std::size_t k = 0; k < qs.size(); ++k) {
          const double phi = phi_at(prof, qs[k].approx());
          const auto r = theorem_report_from_count({eps, T, qs[k]}, phi, counts[k]);
          ++cells;
          worst = std::max(worst, r.discrepancy.mid() / r.error_bound.mid());
          if (!r.holds) {
            ++failures;
            std::cerr << "  theorem fails " << np.name << " eps=" << e << " T=" << t << " Q=" << qs[k].to_string()
                      << " suspect=" << detail::blame(np.pair, CountParams{eps, T, qs[k]}.q_floor(), phi) << "\n";
          }
        }
      }
  }
  const double s = seconds_since(t0);
  return {failures == 0 && s < 600.0, std::to_string(cells) + " cells, " + std::to_string(failures) +
                                          " failures, max discrepancy/bound " + fmt("%.2e", worst) + ", " +
                                          fmt("%.2fs", s)};
}

Outcome corollary_accuracy() {
  const auto& np = grid_pairs()[0];
  const ExpRational eps = X("1e-3"), Q = X("1e6");
  const double phi = phi_at(phi_profile(np.pair, 1000000, 1000000), 1e6);
  const auto r = corollary_report(np.pair, eps, Q, phi);
  const double rel = std::fabs(static_cast<double>(r.count) / r.main_term.mid() - 1.0);
  std::string d = "count=" + std::to_string(r.count) + " main=" + fmt("%.4f", r.main_term.mid()) +
                  " |count/main-1|=" + fmt("%.5f", rel);
  if (rel > 0.1) {
    std::cerr << "  warning: corollary relative error " << rel << " above the expected 0.1\n";
    d += " (soft expectation <= 0.1 missed)";
  }
  return {r.holds, d};
}

Outcome partition_exactness() {
  std::uint64_t samples = 0, failures = 0, inside = 0;
  bool identities = true;
  for (const char* e : {"exp(-2)", "1e-2", "1e-4"})
    for (const char* t : {"1", "2"}) {
      if (!in_condition(X(e), X(t))) continue;
      const auto plan = make_plan(X(e), X(t), X("1e4"));
      const auto r = partition_check(plan, 100000, 17);
      samples += r.z_samples + r.h_samples;
      failures += r.z_failures + r.h_failures;
      inside += r.z_inside + r.h_inside;
      identities = identities && r.nu_identity;
    }
  return {failures == 0 && identities, std::to_string(samples) + " classifications (" + std::to_string(inside) +
                                           " inside), " + std::to_string(failures) + " misclassified, nu^N identity " +
                                           (identities ? "exact" : "FAILED")};
}

Outcome flow_checks() {
  std::uint64_t dets = 0, bad_dets = 0, points = 0, violations = 0;
  double worst = 0;
  std::uint64_t seed = 1;
  for (const auto& plan : grid_plans()) {
    for (const auto& np : grid_pairs()) {
      const auto L = lattice_from_pair(np.pair);
      for (long i = -plan.N + 1; i <= plan.N; ++i)
        for (int j = 1; j <= 4; ++j) {
          ++dets;
          if (!unit_det_exact(apply_flow(plan, i, apply_tau(j, L)))) ++bad_dets;
        }
    }
    H1Classifier cls(plan);
    std::vector<HPiece> pieces{HPiece::delta_x(), HPiece::delta_y()};
    for (long i = -plan.N + 1; i <= plan.N; ++i) pieces.push_back(HPiece::slice(i));
    for (const auto& h : pieces) {
      const auto r = containment_check(cls, h, 10000, seed++);
      points += r.samples;
      violations += r.violations;
      worst = std::max(worst, r.max_coordinate / r.bound);
    }
  }
  return {bad_dets == 0 && violations == 0,
          std::to_string(dets) + " determinants (" + std::to_string(bad_dets) + " not exactly 1), " +
              std::to_string(points) + " contained points, " + std::to_string(violations) +
              " violations, max coordinate/bound " + fmt("%.3f", worst)};
}

Outcome lambda1_lower_bound() {
  const auto t0 = Clock::now();
  std::uint64_t cells = 0, violations = 0, uncertified = 0, vacuous = 0;
  double tightest = 1e300;
  for (const auto& np : grid_pairs()) {
    const auto prof = phi_profile(np.pair, 1000000, 1000000);
    for (const auto& plan : grid_plans()) {
      const double phi = phi_at(prof, plan.Q.approx());
      try {
        require_nonempty_regime(plan.eps, plan.Q, phi);
      } catch (const ConditionViolated&) {
        ++vacuous;
        continue;
      }
      for (long i = -plan.N + 1; i <= plan.N; ++i)
        for (int j = 1; j <= 4; ++j) {
          const auto r = minbound_check(np.pair, plan, i, j, phi);
          ++cells;
          if (!r.certified) ++uncertified;
          if (!r.holds) ++violations;
          tightest = std::min(tightest, r.lambda1.lo_down() / r.threshold.hi_up());
        }
    }
  }
  const double s = seconds_since(t0);
  return {violations == 0 && uncertified == 0 && s < 300.0,
          std::to_string(cells) + " cells, " + std::to_string(violations) + " violations, " +
              std::to_string(uncertified) + " uncertified, " + std::to_string(vacuous) +
              " plans skipped (eps*Q < phi), min lambda1/threshold " + fmt("%.3f", tightest) + ", " + fmt("%.2fs", s)};
}

Outcome lipschitz_covers() {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ek(1, 135), tk(1, 12), qk(10, 1000000);
  int plans = 0, failures = 0;
  double worst_sheet = 0, worst_all = 0, worst_gap = 0;
  while (plans < 20) {
    const std::string e = std::to_string(ek(rng)) + "/10000", t = std::to_string(tk(rng)) + "/4";
    if (!in_condition(X(e.c_str()), X(t.c_str()))) continue;
    const auto plan = make_plan(X(e.c_str()), X(t.c_str()), ExpRational(qk(rng)));
    ++plans;
    H1Classifier cls(plan);
    std::vector<HPiece> pieces{HPiece::delta_x(), HPiece::delta_y()};
    for (long i = -plan.N + 1; i <= plan.N; ++i) pieces.push_back(HPiece::slice(i));
    for (const auto& h : pieces) {
      const auto r = lipschitz_cover(cls, h, 2000, static_cast<std::uint64_t>(plans) * 101 + pieces.size());
      if (!r.holds()) {
        ++failures;
        std::cerr << "  cover fails " << plan.to_string() << " " << h.to_string() << "\n";
      }
      worst_all = std::max(worst_all, r.max_observed / r.lipschitz_bound);
      worst_sheet = std::max(worst_sheet, r.max_sheet / r.sheet_bound);
      worst_gap = std::max(worst_gap, r.coverage_gap / r.mesh);
    }
  }
  return {failures == 0, std::to_string(plans) + " plans, " + std::to_string(failures) +
                             " failing pieces, max stretch/12V^(1/3) " + fmt("%.3f", worst_all) +
                             ", max sheet/4V^(1/3) " + fmt("%.3f", worst_sheet) + ", max gap/mesh " +
                             fmt("%.2e", worst_gap)};
}

Outcome recsum_bound() {
  const auto& np = grid_pairs()[0];
  std::vector<ExpRational> qs;
  for (const char* q : kQ) qs.push_back(X(q));
  const auto prof = phi_profile(np.pair, 1000000, 1000000);
  const auto scan = recsum_scan(np.pair, qs);
  int fails = 0;
  std::string d;
  for (std::size_t c = 0; c < qs.size(); ++c) {
    const auto r = dyadic_report(scan, c, qs[c], phi_at(prof, qs[c].approx()));
    if (!(r.holds_upper && r.holds_dyadic)) ++fails;
    d += (c ? "; " : "") + std::string("Q=") + qs[c].to_string() + " sum/upper " +
         fmt("%.1e", r.sum.mid() / r.upper_bound.mid()) + (r.holds_dyadic ? " dyadic ok" : " dyadic FAIL");
  }
  return {fails == 0, d};
}

Outcome constant_audit() {
  using C = Constants;
  const bool ok = C::C2 == 4 * C::C1 && C::D3 == ipow(3, 18) && C::C5 == 8 * C::D3 * 5 * 12 * 12 &&
                  5 * C::C5 < C::C1 && C::C1 == ipow(3, 28);
  return {ok, "C1=3^28=" + std::to_string(C::C1) + ", C2=" + std::to_string(C::C2) + ", D3=" + std::to_string(C::D3) +
                  ", C5=" + std::to_string(C::C5) + ", 5*C5=" + std::to_string(5 * C::C5)};
}

Outcome lambda1_oracle() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-2, 2);
  int made = 0, mismatches = 0, uncertified = 0;
  while (made < 100) {
    double B[3][3];
    std::array<std::array<double, 3>, 3> rows;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rows[i][j] = B[i][j] = u(rng);
    const double dt = B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
                      B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
                      B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
    if (std::fabs(dt) < 0.05) continue;
    // Any vector of length <= |b_1| has coefficients bounded by |b_1|·|col k of B^-1|.
    double inv[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
        inv[i][j] = (B[r0][c0] * B[r1][c1] - B[r0][c1] * B[r1][c0]) / dt;
      }
    const double row0 = std::sqrt(B[0][0] * B[0][0] + B[0][1] * B[0][1] + B[0][2] * B[0][2]);
    int box = 1;
    for (int k = 0; k < 3; ++k)
      box = std::max(box, static_cast<int>(std::ceil(
                              row0 * std::sqrt(inv[0][k] * inv[0][k] + inv[1][k] * inv[1][k] + inv[2][k] * inv[2][k]))));
    if (box > 40) continue;
    ++made;
    const auto r = lambda1(basis_from_rows(rows));
    if (!r.certified) ++uncertified;
    const double o = oracle::box_lambda1(B, box);
    if (!(r.length.lo_down() - 1e-12 <= o && o <= r.length.hi_up() + 1e-12)) {
      ++mismatches;
      std::cerr << "  lambda1 mismatch: " << r.length.to_string() << " vs box " << o << "\n";
    }
  }
  return {mismatches == 0 && uncertified == 0, std::to_string(made) + " bases, " + std::to_string(mismatches) +
                                                   " mismatches, " + std::to_string(uncertified) + " uncertified"};
}

Outcome decomposition_identity() {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> ek(1, 130), tk(1, 12), qk(1, 20000), pk(0, 2);
  int tuples = 0, failures = 0;
  std::uint64_t r_total = 0, stated_total = 0;
  while (tuples < 20) {
    const std::string e = std::to_string(ek(rng)) + "/1000", t = std::to_string(tk(rng)) + "/4";
    const CountParams p{X(e.c_str()), X(t.c_str()), ExpRational(qk(rng))};
    if (!p.theorem_mode()) continue;
    ++tuples;
    const auto r = decomposition_identity_check(grid_pairs()[pk(rng)].pair, p, jobs());
    if (!(r.identity_holds && r.inequality_holds && r.tau_agrees)) {
      ++failures;
      std::cerr << "  decomposition fails " << p.to_string() << "\n";
    }
    r_total += r.r1 + r.r2;
    stated_total += 2 * r.stated_r;
  }
  return {failures == 0, std::to_string(tuples) + " tuples, " + std::to_string(failures) +
                             " failures; computed |R1|+|R2| summed " + std::to_string(r_total) +
                             " vs stated 2(2*floor(T)+1) summed " + std::to_string(stated_total)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact count oracle", exact_count_oracle},
      {"lattice identity", lattice_identity},
      {"counting theorem grid", theorem_grid},
      {"diagonal corollary accuracy", corollary_accuracy},
      {"partition exactness", partition_exactness},
      {"flow determinant and containment", flow_checks},
      {"first minimum lower bound", lambda1_lower_bound},
      {"Lipschitz boundary covers", lipschitz_covers},
      {"reciprocal sum bound", recsum_bound},
      {"constant audit", constant_audit},
      {"lambda1 oracle", lambda1_oracle},
      {"decomposition identity", decomposition_identity},
  };
  int failed = 0, n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << n << ". " << name << ": " << o.detail << std::endl;
  }
  std::cout << (n - failed) << "/" << n << " criteria passed" << std::endl;
  return failed;
}
