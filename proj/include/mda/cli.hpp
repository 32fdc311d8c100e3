#pragma once

// Command-line front end: subcommands, CSV/JSON tables and the result cache.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "mda/counting.hpp"
#include "mda/domain.hpp"
#include "mda/lattice.hpp"
#include "mda/phi.hpp"
#include "mda/recsum.hpp"

#ifndef MDA_VERSION
#define MDA_VERSION "dev"
#endif

namespace mda::cli {

inline constexpr const char* kVersion = MDA_VERSION;

// ---------------------------------------------------------------------------
// Tables.

using Cell = std::variant<std::monostate, std::string, std::int64_t, std::uint64_t, double, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  bool failed = false;  // some row has a false assertion
};

/// Appends an interval as (midpoint, width).
inline void push_interval(std::vector<Cell>& row, const Interval& v) {
  row.emplace_back(v.mid());
  row.emplace_back(v.hi_up() - v.lo_down());
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_text(const Cell& c) {
  struct V {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(std::uint64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
  };
  return std::visit(V{}, c);
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string render_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_quote(t.columns[i]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_quote(csv_text(row[i]));
    out += "\n";
  }
  return out;
}

inline std::string render_json(const Table& t) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& key = t.columns[i];
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) obj[key] = nullptr;
            else obj[key] = v;
          },
          row[i]);
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Cache.

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

struct CachedResult {
  std::string payload;
  int status = 0;
};

/// One file per key: a header with the full key, exit status and payload
/// checksum, then the payload bytes.
class Cache {
public:
  explicit Cache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const std::string& key) const { return dir_ / (hex64(fnv1a(key)) + ".mdac"); }

  /// nullopt on a miss; throws CacheCorrupt when the stored bytes do not
  /// match their checksum.
  std::optional<CachedResult> load(const std::string& key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::string magic, stored_key, status, sum;
    if (!std::getline(in, magic) || magic != "mda-cache 1") throw CacheCorrupt("bad cache header");
    if (!std::getline(in, stored_key) || !std::getline(in, status) || !std::getline(in, sum))
      throw CacheCorrupt("truncated cache header");
    if (stored_key != key) return std::nullopt;  // hash collision: treat as a miss
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (hex64(fnv1a(payload)) != sum) throw CacheCorrupt("cache checksum mismatch");
    CachedResult r;
    r.payload = std::move(payload);
    try {
      r.status = std::stoi(status);
    } catch (const std::exception&) {
      throw CacheCorrupt("bad cache status");
    }
    return r;
  }

  void store(const std::string& key, const CachedResult& r) const {
    std::filesystem::create_directories(dir_);
    const auto final_path = path_for(key);
    auto tmp = final_path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << "mda-cache 1\n" << key << "\n" << r.status << "\n" << hex64(fnv1a(r.payload)) << "\n" << r.payload;
    }
    std::filesystem::rename(tmp, final_path);
  }

private:
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Options and parsing helpers.

struct Options {
  std::vector<std::string> alpha, beta;
  std::string eps = "0.01", t = "1/2", q = "1000";
  std::string phi = "empirical";
  std::string q_max = "1000";
  std::uint64_t stride = 0;  // 0: qmax/1000 rounded down, at least 1
  std::uint64_t samples = 10000, seed = 1;
  unsigned jobs = 1;
  std::string format = "csv", out, cache;
  std::string check = "theorem";
};

class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

inline RealSpec parse_real(const std::string& s) {
  if (s == "golden") return RealSpec::golden();
  try {
    return RealSpec::parse(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

inline ExpRational parse_positive(const std::string& s, const char* what) {
  try {
    return ExpRational::parse(s);
  } catch (const std::invalid_argument&) {
    throw UsageError(std::string("--") + what + " must be a positive number, got '" + s + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<ExpRational> parse_list(const std::string& s, const char* what) {
  std::vector<ExpRational> out;
  for (const auto& item : split_list(s)) out.push_back(parse_positive(item, what));
  return out;
}

inline Pair single_pair(const Options& o) {
  if (o.alpha.size() != 1 || o.beta.size() != 1) throw UsageError("exactly one --alpha and one --beta required");
  return {parse_real(o.alpha[0]), parse_real(o.beta[0])};
}

inline std::uint64_t q_floor_of(const ExpRational& Q) {
  if (compare(Q, ExpRational(1)) < 0) throw UsageError("--q must be >= 1");
  return CountParams{1, 1, Q}.q_floor();
}

/// Empirical or fixed phi(Q) witness.
struct PhiSource {
  bool empirical = true;
  double fixed = 0.0;

  static PhiSource parse(const std::string& s) {
    if (s == "empirical") return {};
    if (s.rfind("fixed:", 0) == 0) {
      char* end = nullptr;
      const std::string v = s.substr(6);
      const double d = std::strtod(v.c_str(), &end);
      if (v.empty() || *end != '\0' || !(d > 0.0 && d <= 0.25)) throw UsageError("--phi fixed value must lie in (0, 1/4]");
      return {false, d};
    }
    throw UsageError("--phi must be 'empirical' or 'fixed:<v>'");
  }

  double at(const Pair& pair, std::uint64_t qfloor) const {
    if (!empirical) return fixed;
    return phi_at(phi_profile(pair, qfloor, qfloor), static_cast<double>(qfloor));
  }
};

// ---------------------------------------------------------------------------
// Subcommands.

inline const std::vector<std::string> kCheckColumns{
    "alpha", "beta", "eps", "T", "Q", "phi", "count", "main_term", "main_term_width", "error_bound",
    "error_bound_width", "discrepancy", "discrepancy_width", "ratio", "ratio_width", "holds", "suspect"};

inline std::vector<Cell> check_row(const Pair& pair, const ExpRational& eps, const ExpRational& T,
                                   const ExpRational& Q, double phi, const CountReport& r) {
  std::vector<Cell> row{pair.alpha.to_string(), pair.beta.to_string(), eps.to_string(), T.to_string(),
                        Q.to_string(), phi, r.count};
  push_interval(row, r.main_term);
  push_interval(row, r.error_bound);
  push_interval(row, r.discrepancy);
  push_interval(row, Interval::exact(mpz_class(std::to_string(r.count), 10)).widened_to(128) / r.main_term);
  row.emplace_back(r.holds);
  row.emplace_back(r.suspect);
  return row;
}

inline Table cmd_count(const Options& o) {
  const Pair pair = single_pair(o);
  const CountParams p{parse_positive(o.eps, "eps"), parse_positive(o.t, "t"), parse_positive(o.q, "q")};
  q_floor_of(p.Q);
  Table t{{"alpha", "beta", "eps", "T", "Q", "count"}, {}, false};
  t.rows.push_back({pair.alpha.to_string(), pair.beta.to_string(), p.eps.to_string(), p.T.to_string(),
                    p.Q.to_string(), count_M(pair, p, o.jobs)});
  return t;
}

inline Table cmd_theorem(const Options& o) {
  const Pair pair = single_pair(o);
  const CountParams p{parse_positive(o.eps, "eps"), parse_positive(o.t, "t"), parse_positive(o.q, "q")};
  const auto qf = q_floor_of(p.Q);
  if (!p.theorem_mode()) throw UsageError("theorem-check needs eps/T^2 <= e^-2");
  const double phi = PhiSource::parse(o.phi).at(pair, qf);
  auto r = theorem_report_from_count(p, phi, count_M(pair, p, o.jobs));
  if (!r.holds) r.suspect = detail::blame(pair, qf, phi);
  Table t{kCheckColumns, {check_row(pair, p.eps, p.T, p.Q, phi, r)}, !r.holds};
  return t;
}

inline Table cmd_corollary(const Options& o) {
  const Pair pair = single_pair(o);
  const ExpRational eps = parse_positive(o.eps, "eps"), Q = parse_positive(o.q, "q");
  const auto qf = q_floor_of(Q);
  const ExpRational half(mpq_class(1, 2));
  if (!CountParams{eps, half, Q}.corollary_mode()) throw UsageError("corollary-check needs eps <= 1/(2e)^2");
  const double phi = PhiSource::parse(o.phi).at(pair, qf);
  auto r = corollary_report_from_count(eps, Q, phi, count_M_diag(pair, eps, Q));
  if (!r.holds) r.suspect = detail::blame(pair, qf, phi);
  return {kCheckColumns, {check_row(pair, eps, half, Q, phi, r)}, !r.holds};
}

inline Table cmd_phi(const Options& o) {
  const Pair pair = single_pair(o);
  const auto qmax = q_floor_of(parse_positive(o.q_max, "q-max"));
  const std::uint64_t stride = o.stride ? o.stride : std::max<std::uint64_t>(1, qmax / 1000);
  const auto prof = phi_profile(pair, qmax, stride);
  Table t{{"alpha", "beta", "q", "value", "value_width", "running_min", "running_min_width", "argmin", "new_min"},
          {},
          false};
  for (const auto& r : prof.records)
    t.rows.push_back({pair.alpha.to_string(), pair.beta.to_string(), r.q, r.value.mid(), r.value.width(),
                      r.running_min.mid(), r.running_min.width(), r.argmin, r.new_min});
  return t;
}

inline Table cmd_recsum(const Options& o) {
  const Pair pair = single_pair(o);
  const ExpRational Q = parse_positive(o.q, "q");
  const auto qf = q_floor_of(Q);
  const double phi = PhiSource::parse(o.phi).at(pair, qf);
  const Interval sum = recsum(pair, Q);
  const Interval up = recsum_upper(Q, phi);
  const Tri le = less_eq(sum, up);
  if (le == Tri::unknown) throw UndecidablePredicate("recsum vs upper bound");
  Table t{{"alpha", "beta", "Q", "phi", "sum", "sum_width", "upper_bound", "upper_bound_width", "lower_ratio",
           "lower_ratio_width", "holds"},
          {},
          le != Tri::yes};
  std::vector<Cell> row{pair.alpha.to_string(), pair.beta.to_string(), Q.to_string(), phi};
  push_interval(row, sum);
  push_interval(row, up);
  push_interval(row, lower_ratio_from_sum(sum, Q));
  row.emplace_back(le == Tri::yes);
  t.rows.push_back(std::move(row));
  return t;
}

inline Table cmd_dyadic(const Options& o) {
  const Pair pair = single_pair(o);
  const ExpRational Q = parse_positive(o.q, "q");
  const auto qf = q_floor_of(Q);
  const double phi = PhiSource::parse(o.phi).at(pair, qf);
  const auto r = dyadic_check(pair, Q, phi);
  Table t{{"alpha", "beta", "Q", "phi", "K", "sum", "sum_width", "dyadic_majorant", "sandwich_lower",
           "sandwich_upper", "coarse_majorant", "coarse_majorant_width", "corollary_majorant",
           "corollary_majorant_width", "holds_upper", "holds_dyadic", "holds_sandwich", "tail_empty",
           "holds_coarse", "holds_corollary_chain"},
          {},
          false};
  std::vector<Cell> row{pair.alpha.to_string(), pair.beta.to_string(), Q.to_string(), phi,
                        static_cast<std::int64_t>(r.K)};
  push_interval(row, r.sum);
  row.emplace_back(r.dyadic_majorant.get_str());
  row.emplace_back(r.sandwich_lower.get_str());
  row.emplace_back(r.sandwich_upper.get_str());
  push_interval(row, r.coarse_majorant);
  push_interval(row, r.corollary_majorant);
  for (bool b : {r.holds_upper, r.holds_dyadic, r.holds_sandwich, r.tail_empty, r.holds_coarse,
                 r.holds_corollary_chain})
    row.emplace_back(b);
  t.failed = !(r.holds_upper && r.holds_dyadic && r.holds_sandwich && r.holds_coarse);
  t.rows.push_back(std::move(row));
  return t;
}

inline Table cmd_decomp(const Options& o) {
  const Pair pair = single_pair(o);
  const ExpRational eps = parse_positive(o.eps, "eps"), T = parse_positive(o.t, "t"), Q = parse_positive(o.q, "q");
  q_floor_of(Q);
  if (!CountParams{eps, T, Q}.theorem_mode()) throw UsageError("decomp-verify needs eps/T^2 <= e^-2");
  const auto plan = make_plan(eps, T, Q);
  Table t{{"check", "piece", "samples", "failures", "observed", "observed_width", "bound", "bound_width", "holds",
           "note"},
          {},
          false};
  auto add = [&](const std::string& check, const std::string& piece, std::uint64_t samples, std::uint64_t failures,
                 Cell observed, Cell observed_width, Cell bound, Cell bound_width, bool holds,
                 const std::string& note = "") {
    t.rows.push_back({check, piece, samples, failures, std::move(observed), std::move(observed_width),
                      std::move(bound), std::move(bound_width), holds, note});
    if (!holds) t.failed = true;
  };
  const auto part = partition_check(plan, o.samples, o.seed);
  add("partition", "Z", part.z_samples, part.z_failures, part.z_inside, std::uint64_t{0}, {}, {},
      part.z_failures == 0, "observed = samples inside Z");
  add("partition", "H1", part.h_samples, part.h_failures, part.h_inside, std::uint64_t{0}, {}, {},
      part.h_failures == 0, "observed = samples inside H1");
  add("nu-identity", "windows", 1, part.nu_identity ? 0 : 1, {}, {}, {}, {}, part.nu_identity,
      "nu^N = eps/T^2 and nu^-N = T^2/eps exactly");

  H1Classifier cls(plan);
  std::vector<HPiece> pieces{HPiece::delta_x(), HPiece::delta_y()};
  for (long i = -plan.N + 1; i <= plan.N; ++i) pieces.push_back(HPiece::slice(i));
  const Interval cube = cbrt(plan.V());
  std::uint64_t salt = 0;
  for (const auto& h : pieces) {
    ++salt;
    const auto c = containment_check(cls, h, o.samples, o.seed + salt);
    std::vector<Cell> b;
    push_interval(b, Interval::exact(3L) * cube);
    add("containment", h.to_string(), c.samples, c.violations, c.max_coordinate, 0.0, b[0], b[1], c.holds(),
        "flow index " + std::to_string(c.flow_index));
  }
  for (const auto& h : pieces) {
    ++salt;
    const auto c = lipschitz_cover(cls, h, o.samples, o.seed + salt);
    std::vector<Cell> b12, b4;
    push_interval(b12, Interval::exact(12L) * cube);
    push_interval(b4, Interval::exact(4L) * cube);
    add("cover-stretch", h.to_string(), o.samples, c.max_observed <= c.lipschitz_bound ? 0 : 1, c.max_observed, 0.0,
        b12[0], b12[1], c.max_observed <= c.lipschitz_bound, std::to_string(c.pieces.size()) + " pieces");
    if (h.kind == HPiece::Kind::Slice)
      add("cover-sheet", h.to_string(), o.samples, c.max_sheet <= c.sheet_bound ? 0 : 1, c.max_sheet, 0.0, b4[0],
          b4[1], c.max_sheet <= c.sheet_bound);
    add("cover-gap", h.to_string(), o.samples, c.coverage_gap <= c.mesh ? 0 : 1, c.coverage_gap, 0.0, c.mesh, 0.0,
        c.coverage_gap <= c.mesh, "bound = sampling mesh");
  }

  const auto d = decomposition_identity_check(pair, {eps, T, Q}, o.jobs);
  const std::uint64_t sum = d.zj[0] + d.zj[1] + d.zj[2] + d.zj[3];
  add("decomposition-identity", "Z", d.total, d.identity_holds ? 0 : 1, d.total, std::uint64_t{0},
      sum + d.r1 + d.r2 - d.r1r2, std::uint64_t{0}, d.identity_holds, "bound = sum Z_j + R1 + R2 - R1R2");
  std::vector<Cell> slack;
  push_interval(slack, d.slack);
  add("decomposition-inequality", "Z", d.total, d.inequality_holds ? 0 : 1,
      d.total > sum ? d.total - sum : sum - d.total, std::uint64_t{0}, slack[0], slack[1], d.inequality_holds,
      "|count Z - sum count Z_j| < 4(T+1)");
  for (int j = 1; j <= 4; ++j)
    add("sign-map", "Z" + std::to_string(j), d.zj[j - 1], d.zj[j - 1] == d.zj_via_tau[j - 1] ? 0 : 1,
        d.zj_via_tau[j - 1], std::uint64_t{0}, d.zj[j - 1], std::uint64_t{0}, d.zj[j - 1] == d.zj_via_tau[j - 1],
        "observed = count of tau_j Lambda in Z1");
  add("axis-count", "R1", d.r1, 0, d.r1, std::uint64_t{0}, d.stated_r, std::uint64_t{0}, true,
      "informational; bound = 2*floor(T)+1, the count with q = 0 included");
  add("axis-count", "R2", d.r2, 0, d.r2, std::uint64_t{0}, d.stated_r, std::uint64_t{0}, true,
      "informational; bound = 2*floor(T)+1, the count with q = 0 included");
  return t;
}

inline Table cmd_lattice_min(const Options& o) {
  const Pair pair = single_pair(o);
  const ExpRational eps = parse_positive(o.eps, "eps"), T = parse_positive(o.t, "t"), Q = parse_positive(o.q, "q");
  const auto qf = q_floor_of(Q);
  if (!CountParams{eps, T, Q}.theorem_mode()) throw UsageError("lattice-min needs eps/T^2 <= e^-2");
  const auto plan = make_plan(eps, T, Q);
  const double phi = PhiSource::parse(o.phi).at(pair, qf);
  Table t{{"i", "j", "lambda1", "lambda1_width", "threshold", "threshold_width", "q0_floor", "q0_floor_width",
           "witness_p1", "witness_p2", "witness_q", "certified", "holds"},
          {},
          false};
  for (long i = -plan.N + 1; i <= plan.N; ++i)
    for (int j = 1; j <= 4; ++j) {
      const auto r = minbound_check(pair, plan, i, j, phi);
      std::vector<Cell> row{static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)};
      push_interval(row, r.lambda1);
      push_interval(row, r.threshold);
      push_interval(row, r.q0_floor);
      for (long long w : r.witness) row.emplace_back(static_cast<std::int64_t>(w));
      row.emplace_back(r.certified);
      row.emplace_back(r.holds);
      if (!r.holds) t.failed = true;
      t.rows.push_back(std::move(row));
    }
  return t;
}

/// Grid of theorem (or corollary) checks; one single-pass count per
/// (pair, eps, T) group, groups distributed over `jobs` workers, rows emitted
/// in grid order.
inline Table cmd_sweep(const Options& o, std::ostream& err) {
  if (o.alpha.empty() || o.alpha.size() != o.beta.size())
    throw UsageError("sweep needs matching numbers of --alpha and --beta");
  if (o.check != "theorem" && o.check != "corollary") throw UsageError("--check must be theorem or corollary");
  const bool corollary = o.check == "corollary";
  std::vector<Pair> pairs;
  for (std::size_t k = 0; k < o.alpha.size(); ++k) pairs.push_back({parse_real(o.alpha[k]), parse_real(o.beta[k])});
  const auto epss = parse_list(o.eps, "eps");
  const auto ts = corollary ? std::vector<ExpRational>{ExpRational(mpq_class(1, 2))} : parse_list(o.t, "t");
  const auto qs = parse_list(o.q, "q");
  std::uint64_t qmax = 1;
  for (const auto& Q : qs) qmax = std::max(qmax, q_floor_of(Q));
  const PhiSource phis = PhiSource::parse(o.phi);

  struct Group {
    std::size_t pair;
    ExpRational eps, T;
  };
  std::vector<Group> groups;
  std::size_t skipped = 0;
  for (std::size_t pk = 0; pk < pairs.size(); ++pk)
    for (const auto& e : epss)
      for (const auto& T : ts) {
        const CountParams p{e, T, ExpRational(1)};
        if (corollary ? !p.corollary_mode() : !p.theorem_mode()) {
          skipped += qs.size();
          continue;
        }
        groups.push_back({pk, e, T});
      }
  if (skipped) err << "sweep: skipped " << skipped << " cells outside the parameter condition\n";

  std::vector<PhiProfile> profiles;
  if (phis.empirical)
    for (const auto& pr : pairs) profiles.push_back(phi_profile(pr, qmax, qmax));
  auto phi_for = [&](std::size_t pk, const ExpRational& Q) {
    return phis.empirical ? phi_at(profiles[pk], static_cast<double>(q_floor_of(Q))) : phis.fixed;
  };

  auto blocks = run_blocks(0, groups.empty() ? 0 : groups.size() - 1, o.jobs, [&](std::uint64_t lo, std::uint64_t hi) {
    std::vector<std::pair<bool, std::vector<Cell>>> rows;
    if (groups.empty()) return rows;
    for (std::uint64_t g = lo; g <= hi; ++g) {
      const auto& G = groups[g];
      const auto counts = count_M_checkpoints(pairs[G.pair], G.eps, G.T, qs, 1);
      for (std::size_t k = 0; k < qs.size(); ++k) {
        const double phi = phi_for(G.pair, qs[k]);
        CountReport r = corollary ? corollary_report_from_count(G.eps, qs[k], phi, counts[k])
                                  : theorem_report_from_count({G.eps, G.T, qs[k]}, phi, counts[k]);
        if (!r.holds) r.suspect = detail::blame(pairs[G.pair], q_floor_of(qs[k]), phi);
        rows.emplace_back(!r.holds, check_row(pairs[G.pair], G.eps, G.T, qs[k], phi, r));
      }
    }
    return rows;
  });
  Table t{kCheckColumns, {}, false};
  for (auto& b : blocks)
    for (auto& [failed, row] : b) {
      t.failed = t.failed || failed;
      t.rows.push_back(std::move(row));
    }
  return t;
}

// ---------------------------------------------------------------------------
// Entry point.

inline std::string cache_key(const std::string& sub, const Options& o) {
  std::string k = std::string("mda ") + kVersion + "|" + sub;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += x + ";";
    return s;
  };
  k += "|alpha=" + join(o.alpha) + "|beta=" + join(o.beta) + "|eps=" + o.eps + "|t=" + o.t + "|q=" + o.q +
       "|phi=" + o.phi + "|q-max=" + o.q_max + "|stride=" + std::to_string(o.stride) +
       "|samples=" + std::to_string(o.samples) + "|seed=" + std::to_string(o.seed) + "|format=" + o.format +
       "|check=" + o.check;
  return k;
}

/// Runs one command line. Exit codes: 0 success, 1 a false assertion row,
/// 2 usage error, 3 undecidable predicate.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified counts for multiplicative Diophantine approximation", "mda"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("--out", o.out, "Write output to this file instead of stdout");
    s->add_option("--cache", o.cache, "Cache directory (default: $MDA_CACHE_DIR, unset disables caching)");
  };
  auto pair_opts = [&](CLI::App* s) {
    s->add_option("--alpha", o.alpha, "alpha: sqrt:D, quad:A,B,C,D, golden or dec:CENTER:RADIUS")->required();
    s->add_option("--beta", o.beta, "beta, same grammar as --alpha")->required();
  };
  auto phi_opt = [&](CLI::App* s) { s->add_option("--phi", o.phi, "empirical or fixed:<v> with v in (0, 1/4]"); };
  auto jobs_opt = [&](CLI::App* s) { s->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1u, 256u)); };

  auto* count = app.add_subcommand("count", "Exact |M(eps, T, Q)|");
  pair_opts(count);
  count->add_option("--eps", o.eps)->required();
  count->add_option("--t", o.t)->required();
  count->add_option("--q", o.q)->required();
  jobs_opt(count);
  common(count);

  auto* theorem = app.add_subcommand("theorem-check", "Count against main term and error bound");
  pair_opts(theorem);
  theorem->add_option("--eps", o.eps)->required();
  theorem->add_option("--t", o.t)->required();
  theorem->add_option("--q", o.q)->required();
  phi_opt(theorem);
  jobs_opt(theorem);
  common(theorem);

  auto* corollary = app.add_subcommand("corollary-check", "T = 1/2 count against the corollary bound");
  pair_opts(corollary);
  corollary->add_option("--eps", o.eps)->required();
  corollary->add_option("--q", o.q)->required();
  phi_opt(corollary);
  common(corollary);

  auto* phi = app.add_subcommand("phi", "Running minima of q·||q alpha||·||q beta||");
  pair_opts(phi);
  phi->add_option("--q-max", o.q_max)->required();
  phi->add_option("--stride", o.stride, "Record stride (default q-max/1000)");
  common(phi);

  auto* rec = app.add_subcommand("recsum", "Reciprocal sum and its upper bound");
  pair_opts(rec);
  rec->add_option("--q", o.q)->required();
  phi_opt(rec);
  common(rec);

  auto* dyadic = app.add_subcommand("dyadic-check", "Dyadic layer majorants of the reciprocal sum");
  pair_opts(dyadic);
  dyadic->add_option("--q", o.q)->required();
  phi_opt(dyadic);
  common(dyadic);

  auto* decomp = app.add_subcommand("decomp-verify", "Partition, flow, cover and decomposition checks");
  pair_opts(decomp);
  decomp->add_option("--eps", o.eps)->required();
  decomp->add_option("--t", o.t)->required();
  decomp->add_option("--q", o.q)->required();
  decomp->add_option("--samples", o.samples, "Samples per check")->check(CLI::Range(1ULL, 100000000ULL));
  decomp->add_option("--seed", o.seed);
  jobs_opt(decomp);
  common(decomp);

  auto* lmin = app.add_subcommand("lattice-min", "First minima of the flowed lattices against the lower bound");
  pair_opts(lmin);
  lmin->add_option("--eps", o.eps)->required();
  lmin->add_option("--t", o.t)->required();
  lmin->add_option("--q", o.q)->required();
  phi_opt(lmin);
  common(lmin);

  auto* sweep = app.add_subcommand("sweep", "Grid of theorem or corollary checks");
  pair_opts(sweep);
  sweep->add_option("--eps", o.eps, "Comma-separated list")->required();
  sweep->add_option("--t", o.t, "Comma-separated list (ignored for --check corollary)");
  sweep->add_option("--q", o.q, "Comma-separated list")->required();
  sweep->add_option("--check", o.check, "theorem or corollary");
  phi_opt(sweep);
  jobs_opt(sweep);
  common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string sub = chosen->get_name();

  std::optional<Cache> cache;
  if (!o.cache.empty()) cache.emplace(o.cache);
  else if (const char* env = std::getenv("MDA_CACHE_DIR"); env && *env) cache.emplace(env);
  const std::string key = cache_key(sub, o);

  auto emit = [&](const std::string& payload) -> bool {
    if (o.out.empty()) {
      out << payload;
      return true;
    }
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) {
      err << "error: cannot write " << o.out << "\n";
      return false;
    }
    f << payload;
    return true;
  };

  if (cache) {
    try {
      if (auto hit = cache->load(key)) return emit(hit->payload) ? hit->status : 2;
    } catch (const CacheCorrupt& e) {
      err << "warning: " << e.what() << "; recomputing\n";
    }
  }

  Table table;
  try {
    if (sub == "count") table = cmd_count(o);
    else if (sub == "theorem-check") table = cmd_theorem(o);
    else if (sub == "corollary-check") table = cmd_corollary(o);
    else if (sub == "phi") table = cmd_phi(o);
    else if (sub == "recsum") table = cmd_recsum(o);
    else if (sub == "dyadic-check") table = cmd_dyadic(o);
    else if (sub == "decomp-verify") table = cmd_decomp(o);
    else if (sub == "lattice-min") table = cmd_lattice_min(o);
    else table = cmd_sweep(o, err);
  } catch (const UndecidablePredicate& e) {
    err << "undecidable: " << e.what() << "\n";
    return 3;
  } catch (const AmbiguousNearestInteger& e) {
    err << "undecidable: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const std::string payload = o.format == "json" ? render_json(table) : render_csv(table);
  const int status = table.failed ? 1 : 0;
  if (cache) {
    try {
      cache->store(key, {payload, status});
    } catch (const std::exception& e) {
      err << "warning: cache not written: " << e.what() << "\n";
    }
  }
  return emit(payload) ? status : 2;
}

}  // namespace mda::cli
