#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinning/config.hpp"
#include "pinning/pinning_parameter.hpp"
#include "pinning/profile.hpp"

namespace pinning {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind {
  repulsive_limit,
  sticky_limit,
  fourier_decay,
  termination_time,
  contact_decay,
  stefan_study,
  heat_study,
  oracle_study,
  coupling_study,
  agmon_study,
};

inline ExperimentKind parse_kind(const std::string& s) {
  if (s == "repulsive-limit") return ExperimentKind::repulsive_limit;
  if (s == "sticky-limit") return ExperimentKind::sticky_limit;
  if (s == "fourier-decay") return ExperimentKind::fourier_decay;
  if (s == "termination-time") return ExperimentKind::termination_time;
  if (s == "contact-decay") return ExperimentKind::contact_decay;
  if (s == "stefan-study") return ExperimentKind::stefan_study;
  if (s == "heat-study") return ExperimentKind::heat_study;
  if (s == "oracle-study") return ExperimentKind::oracle_study;
  if (s == "coupling-study") return ExperimentKind::coupling_study;
  if (s == "agmon-study") return ExperimentKind::agmon_study;
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::repulsive_limit: return "repulsive-limit";
    case ExperimentKind::sticky_limit: return "sticky-limit";
    case ExperimentKind::fourier_decay: return "fourier-decay";
    case ExperimentKind::termination_time: return "termination-time";
    case ExperimentKind::contact_decay: return "contact-decay";
    case ExperimentKind::stefan_study: return "stefan-study";
    case ExperimentKind::heat_study: return "heat-study";
    case ExperimentKind::oracle_study: return "oracle-study";
    case ExperimentKind::coupling_study: return "coupling-study";
    case ExperimentKind::agmon_study: return "agmon-study";
  }
  return "?";
}

/// Declarative experiment description; everything an acceptance run needs
/// is a value here, resolved once from the config file.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::stefan_study;
  std::string profile = "cosine";
  int profile_cells = 2048;
  std::vector<int> Ls = {64};
  int seeds = 20;
  std::uint64_t seed0 = 1;
  std::vector<PinningParameter> lambdas = {PinningParameter::finite(1.0)};
  std::vector<double> times;     // rescaled snapshot/sample grid
  double horizon = 0;            // 0: kind-specific default
  int threads = 0;               // 0: hardware
  std::string out_dir = "out";

  // solver knobs
  double dx = 1.0 / 1024;
  double dt = 0;
  double blowup_threshold = 0;
  int modes = 256;
  double fixed_point_t0 = 0;     // stefan-study: cross-validate when > 0
  double delta_bar = 0;          // heat-study: boundary-slope check when > 0

  // thresholds (acceptance criteria)
  double sup_tol = 0.1;
  double pass_fraction = 0.95;
  double tstar_rel_tol = 0.10;
  double fourier_rel_tol = 0.10;
  double front_tol = 0.1;
  double area_law_tol = 1e-3;
  double mean_profile_tol = 0.05;
  double slope_lo = -1.8, slope_hi = -1.2;
  std::string expect = "any";    // stefan-study verdict expectation

  // contact-decay specifics
  double t_lo = 1e2, t_hi = 1e4;
  int t_points = 9;
  int validation_L = 64;
  int validation_seeds = 2000;
  double validation_horizon_factor = 12.0;

  ConfigMap source;  // as parsed; hashed into outputs

  static ExperimentSpec from_config(const ConfigMap& c) {
    ExperimentSpec s;
    s.source = c;
    s.kind = parse_kind(c.str("kind"));
    s.profile = c.str_or("profile", s.profile);
    s.profile_cells = static_cast<int>(c.integer_or("profile_cells", s.profile_cells));
    if (c.has("L")) {
      s.Ls.clear();
      for (double v : c.numbers("L")) s.Ls.push_back(static_cast<int>(std::llround(v)));
    }
    s.seeds = static_cast<int>(c.integer_or("seeds", s.seeds));
    s.seed0 = static_cast<std::uint64_t>(c.integer_or("seed", 1));
    if (c.has("lambda")) {
      s.lambdas.clear();
      for (const std::string& v : c.strings("lambda")) s.lambdas.push_back(PinningParameter::parse(v));
    }
    if (c.has("times")) s.times = c.numbers("times");
    s.horizon = c.number_or("T", 0);
    s.threads = static_cast<int>(c.integer_or("threads", 0));
    s.out_dir = c.str_or("out_dir", s.out_dir);

    s.dx = c.number_or("dx", s.dx);
    s.dt = c.number_or("dt", s.dt);
    s.blowup_threshold = c.number_or("blowup_threshold", 0);
    s.modes = static_cast<int>(c.integer_or("modes", s.modes));
    s.fixed_point_t0 = c.number_or("fixed_point_t0", 0);
    s.delta_bar = c.number_or("delta_bar", 0);

    s.sup_tol = c.number_or("sup_tol", s.sup_tol);
    s.pass_fraction = c.number_or("pass_fraction", s.pass_fraction);
    s.tstar_rel_tol = c.number_or("tstar_rel_tol", s.tstar_rel_tol);
    s.fourier_rel_tol = c.number_or("fourier_rel_tol", s.fourier_rel_tol);
    s.front_tol = c.number_or("front_tol", s.front_tol);
    s.area_law_tol = c.number_or("area_law_tol", s.area_law_tol);
    s.mean_profile_tol = c.number_or("mean_profile_tol", s.mean_profile_tol);
    s.slope_lo = c.number_or("slope_lo", s.slope_lo);
    s.slope_hi = c.number_or("slope_hi", s.slope_hi);
    s.expect = c.str_or("expect", s.expect);

    s.t_lo = c.number_or("t_lo", s.t_lo);
    s.t_hi = c.number_or("t_hi", s.t_hi);
    s.t_points = static_cast<int>(c.integer_or("t_points", s.t_points));
    s.validation_L = static_cast<int>(c.integer_or("validation_L", s.validation_L));
    s.validation_seeds = static_cast<int>(c.integer_or("validation_seeds", s.validation_seeds));
    s.validation_horizon_factor =
        c.number_or("validation_horizon_factor", s.validation_horizon_factor);
    return s;
  }
};

inline constexpr double kNoValue = std::numeric_limits<double>::quiet_NaN();

struct ResultRow {
  int L = 0;
  std::uint64_t seed = 0;
  double t = kNoValue;
  double sup_distance = kNoValue;
  double area = kNoValue;
  double fourier = kNoValue;
  double contacts = kNoValue;
  double termination = kNoValue;
};

struct SummaryRow {
  std::string name;
  double value = kNoValue;
  double threshold = kNoValue;
  bool graded = true;  // false: informational only
  bool pass = true;
  std::string note;
};

struct ResultTable {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed_lo = 0, seed_hi = 0;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;

  bool all_pass() const {
    for (const SummaryRow& s : summary)
      if (s.graded && !s.pass) return false;
    return true;
  }

  void add_summary(std::string name, double value, double threshold, bool pass,
                   std::string note = {}) {
    summary.push_back({std::move(name), value, threshold, true, pass, std::move(note)});
  }
  void add_info(std::string name, double value, std::string note = {}) {
    summary.push_back({std::move(name), value, kNoValue, false, true, std::move(note)});
  }
};

namespace detail {
inline std::string csv_cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }
}  // namespace detail

inline void write_table_csv(const ResultTable& t, std::ostream& os) {
  os << "# experiment=" << t.experiment << " config=" << t.config_hash << " seeds=" << t.seed_lo
     << ".." << t.seed_hi << " version=" << kVersion << '\n';
  os << "L,seed,t,sup_distance,area,fourier,contacts,termination\n";
  for (const ResultRow& r : t.rows)
    os << r.L << ',' << r.seed << ',' << detail::csv_cell(r.t) << ','
       << detail::csv_cell(r.sup_distance) << ',' << detail::csv_cell(r.area) << ','
       << detail::csv_cell(r.fourier) << ',' << detail::csv_cell(r.contacts) << ','
       << detail::csv_cell(r.termination) << '\n';
}

inline void write_summary_text(const ResultTable& t, std::ostream& os) {
  os << "# experiment=" << t.experiment << " config=" << t.config_hash << " version=" << kVersion
     << '\n';
  for (const SummaryRow& s : t.summary) {
    if (s.graded)
      os << (s.pass ? "PASS " : "FAIL ") << s.name << " value=" << detail::csv_cell(s.value)
         << " threshold=" << detail::csv_cell(s.threshold);
    else
      os << "info " << s.name << " value=" << detail::csv_cell(s.value);
    if (!s.note.empty()) os << "  " << s.note;
    os << '\n';
  }
  os << "overall: " << (t.all_pass() ? "PASS" : "FAIL") << '\n';
}

/// Writes table.csv and summary.txt under dir. Deterministic byte-for-byte
/// for a fixed (spec, seed).
inline void emit(const ResultTable& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "table.csv", std::ios::binary);
    if (!os) throw std::runtime_error("emit: cannot write " + (dir / "table.csv").string());
    write_table_csv(t, os);
  }
  {
    std::ofstream os(dir / "summary.txt", std::ios::binary);
    if (!os) throw std::runtime_error("emit: cannot write " + (dir / "summary.txt").string());
    write_summary_text(t, os);
  }
}

}  // namespace pinning
