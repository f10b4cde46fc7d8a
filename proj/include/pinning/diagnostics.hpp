#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "pinning/profile.hpp"
#include "pinning/stefan.hpp"

namespace pinning {

/// Post-hoc checks of a Stefan run against the analytic structure of the
/// problem. All report-valued: a failing check is a finding, not an error.
struct DiagnosticsReport {
  struct Check {
    std::string name;
    bool applicable = true;
    bool pass = false;
    double residual = 0;
    double tolerance = 0;
    std::string detail;
  };
  std::vector<Check> checks;

  const Check& operator[](std::size_t i) const { return checks[i]; }

  bool all_pass() const {
    for (const Check& c : checks)
      if (c.applicable && !c.pass) return false;
    return true;
  }

  std::string to_text() const {
    std::ostringstream os;
    for (const Check& c : checks) {
      os << (c.applicable ? (c.pass ? "pass " : "FAIL ") : "n/a  ") << c.name;
      if (c.applicable)
        os << "  residual=" << detail::format_double(c.residual)
           << " tol=" << detail::format_double(c.tolerance);
      if (!c.detail.empty()) os << "  (" << c.detail << ")";
      os << '\n';
    }
    return os.str();
  }
};

struct DiagnosticsOptions {
  // (i) boundary relation k_x = -+ k^2: tolerance per unit dx
  double boundary_relation_per_dx = 60.0;
  // (ii) maximum principle slack
  double max_principle_rel = 0.02;
  double max_principle_abs = 1e-6;
  // (iv) concavity floor
  double concavity_tol = 5e-3;
  // (vi) width bound slack
  double width_bound_rel = 0.05;
};

inline DiagnosticsReport stefan_diagnostics(const StefanRun& run, DiagnosticsOptions opt = {}) {
  DiagnosticsReport rep;
  const auto& rows = run.series;
  if (rows.size() < 3) {
    rep.checks.push_back({"series", true, false, 0, 0, "too few recorded rows"});
    return rep;
  }
  const double k0_scale = 1.0 + rows.front().k_max;
  const bool concave_start = rows.front().k_min >= -opt.concavity_tol * k0_scale;

  // (i) boundary curvature relation k_x(l) = -k(l)^2, k_x(r) = k(r)^2.
  {
    std::vector<double> res;
    for (const StefanDiagRow& row : rows) {
      if (row.t <= 0) continue;
      if (row.k_max > 10.0 * k0_scale) continue;  // skip the collision endgame
      res.push_back(row.rel_res_l);
      res.push_back(row.rel_res_r);
    }
    DiagnosticsReport::Check c;
    c.name = "boundary-relation";
    c.applicable = !res.empty();
    if (c.applicable) {
      std::sort(res.begin(), res.end());
      c.residual = res[res.size() / 2];  // median
      c.tolerance = opt.boundary_relation_per_dx * run.dx_physical * k0_scale * k0_scale;
      c.pass = c.residual <= c.tolerance;
    }
    rep.checks.push_back(c);
  }

  // (ii) max principle: ||k||_inf <= max(initial sup, boundary values).
  {
    DiagnosticsReport::Check c;
    c.name = "curvature-max-principle";
    c.pass = true;
    const double k0_max = rows.front().k_max;
    for (const StefanDiagRow& row : rows) {
      const double bound = std::max({k0_max, row.k_at_l, row.k_at_r});
      const double excess = row.k_max - bound * (1.0 + opt.max_principle_rel) - opt.max_principle_abs;
      c.residual = std::max(c.residual, excess);
      if (excess > 0) c.pass = false;
    }
    c.tolerance = 0;
    rep.checks.push_back(c);
  }

  // (iii) inflection count nonincreasing.
  {
    DiagnosticsReport::Check c;
    c.name = "inflections-nonincreasing";
    c.pass = true;
    int prev = rows.front().inflections;
    for (const StefanDiagRow& row : rows) {
      if (row.inflections > prev) {
        c.pass = false;
        c.residual = row.t;
        c.detail = "count increased at t=" + detail::format_double(row.t);
        break;
      }
      prev = row.inflections;
    }
    rep.checks.push_back(c);
  }

  // (iv) concavification: some t2 < end with k >= 0 from there on.
  {
    DiagnosticsReport::Check c;
    c.name = "concavification";
    const double floor = -opt.concavity_tol * k0_scale;
    double t2 = -1;
    for (const StefanDiagRow& row : rows) {
      if (row.k_min >= floor) {
        if (t2 < 0) t2 = row.t;
      } else {
        t2 = -1;
      }
    }
    c.pass = t2 >= 0 && t2 < run.end_time;
    c.residual = t2;
    c.detail = t2 >= 0 ? "concave from t2=" + detail::format_double(t2) : "never concave";
    rep.checks.push_back(c);
  }

  // (v) collision for concave initial data.
  {
    DiagnosticsReport::Check c;
    c.name = "concave-data-collide";
    c.applicable = concave_start;
    c.pass = run.verdict == StefanVerdict::collided;
    c.detail = std::string("verdict=") + to_string(run.verdict);
    rep.checks.push_back(c);
  }

  // (vi) near-collision width bound (r-l)(t) <= 2 (8 (T*-t)/eta)^{1/4} with
  // eta the curvature floor on [T_c/2, t].
  {
    DiagnosticsReport::Check c;
    c.name = "near-collision-width";
    c.applicable = concave_start && run.collision_time.has_value();
    if (c.applicable) {
      const double tc = *run.collision_time;
      double eta = std::numeric_limits<double>::infinity();
      c.pass = true;
      for (const StefanDiagRow& row : rows) {
        if (row.t < 0.5 * tc) continue;
        eta = std::min(eta, row.k_min);
        if (!(eta > 0) || row.t >= tc) continue;
        const double bound = 2.0 * std::pow(8.0 * (tc - row.t) / eta, 0.25);
        const double excess = (row.r - row.l) - bound * (1.0 + opt.width_bound_rel);
        c.residual = std::max(c.residual, excess);
        if (excess > 0) c.pass = false;
      }
      if (!(eta > 0)) {
        c.applicable = false;
        c.detail = "no positive curvature floor";
      }
    }
    rep.checks.push_back(c);
  }

  return rep;
}

/// Local extrema monotonicity of the heat evolution between two recorded
/// states: interior maxima must not rise, interior minima must not fall.
/// Returns the worst violation (<= 0 when the property holds).
inline double extrema_monotonicity_violation(const StefanState& earlier, const StefanState& later) {
  auto local_extrema = [](const StefanState& st, bool maxima) {
    std::vector<std::pair<double, double>> out;  // (x, value)
    const int n = st.n_cells();
    for (int i = 1; i < n; ++i) {
      const double v = st.f[static_cast<std::size_t>(i)];
      const double a = st.f[static_cast<std::size_t>(i - 1)], b = st.f[static_cast<std::size_t>(i + 1)];
      if (maxima ? (v >= a && v >= b) : (v <= a && v <= b))
        out.emplace_back(st.l + (st.r - st.l) * i / n, v);
    }
    return out;
  };
  double worst = -std::numeric_limits<double>::infinity();
  const double global_max_early = *std::max_element(earlier.f.begin(), earlier.f.end());
  const double global_min_early = *std::min_element(earlier.f.begin(), earlier.f.end());
  for (const auto& [x, v] : local_extrema(later, true)) worst = std::max(worst, v - global_max_early);
  for (const auto& [x, v] : local_extrema(later, false)) worst = std::max(worst, global_min_early - v);
  return worst;
}

/// Agmon residual 4 (int gamma^2)(int gamma_x^2) - ||gamma||_inf^4; the
/// inequality asserts this is >= 0 up to grid error. gamma lives on [0, X],
/// derivative by forward differences (midpoint-rule consistent).
struct AgmonReport {
  double sup = 0;
  double l2_sq = 0;    // int gamma^2
  double l2_dx_sq = 0; // int gamma_x^2
  double residual = 0;
};

inline AgmonReport agmon_check(const Profile& gamma) {
  AgmonReport rep;
  const int n = gamma.n_cells();
  const double h = gamma.dx();
  for (int i = 0; i <= n; ++i) {
    const double v = gamma.value(i);
    rep.sup = std::max(rep.sup, std::abs(v));
    rep.l2_sq += (i == 0 || i == n ? 0.5 : 1.0) * v * v * h;
  }
  for (int i = 0; i < n; ++i) {
    const double d = (gamma.value(i + 1) - gamma.value(i)) / h;
    rep.l2_dx_sq += d * d * h;
  }
  rep.residual = 4.0 * rep.l2_sq * rep.l2_dx_sq - std::pow(rep.sup, 4);
  return rep;
}

}  // namespace pinning
