#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pinning/profile.hpp"
#include "pinning/stefan.hpp"

namespace pinning {

// Short-time solver built as a contraction-map construction: iterate the
// map Phi on boundary-data pairs (phi1, phi2). Each pass solves the two
// one-sided contracting problems for the derivative field rho = f_x (moving
// front with rho = +-1, imposed data phi at the fixed collar end), takes the
// resulting fronts (l, r), solves the heat equation for rho on that moving
// domain with +-1 boundary data, and reads the next (phi1, phi2) back at the
// collar ends. Exists for cross-validating the front tracker; short
// horizons only.

struct FixedPointOptions {
  int collar_cells = 192;   // grid of each one-sided problem
  int full_cells = 1024;    // grid of the two-sided rho solve
  double dt = 0;            // 0: t0/512
  int max_iterations = 64;
  double tolerance = 1e-8;  // sup-norm change of (phi1, phi2)
  std::vector<double> snapshot_times;
};

struct FixedPointRun {
  bool converged = false;
  bool contraction_detected = false;  // every factor after the first < 1
  double observed_contraction = 0;    // max of the observed factors
  std::vector<double> contraction_factors;
  int iterations = 0;
  double collar = 0;  // l_bar = 1/(4 ||rho0'||)
  double mass_defect = 0;  // |f(r,t)| of the reconstruction, worst over time
  std::vector<double> t, l, r;
  std::vector<StefanState> snapshots;  // reconstructed f at requested times
};

namespace stefan_detail {

// derivative of a grid profile: central interior, one-sided second order ends
inline std::vector<double> grid_derivative(const Profile& f) {
  const int n = f.n_cells();
  const double h = f.dx();
  std::vector<double> d(static_cast<std::size_t>(n) + 1);
  d[0] = (-3.0 * f.value(0) + 4.0 * f.value(1) - f.value(2)) / (2.0 * h);
  d[static_cast<std::size_t>(n)] =
      (3.0 * f.value(n) - 4.0 * f.value(n - 1) + f.value(n - 2)) / (2.0 * h);
  for (int i = 1; i < n; ++i)
    d[static_cast<std::size_t>(i)] = (f.value(i + 1) - f.value(i - 1)) / (2.0 * h);
  return d;
}

// One-sided contracting problem on [l(t), X] for rho with rho(l) = 1,
// l' = -rho_x(l), fixed-end data phi(t_m). Returns l(t_m); w0 holds rho0 on
// [l0, X]. Newton in the single unknown l_new per step.
inline std::vector<double> solve_one_sided(const std::vector<double>& w0, double l0, double X,
                                           const std::vector<double>& phi, double dt,
                                           double half_collar_guard) {
  const int n = static_cast<int>(w0.size()) - 1;
  const double dy = 1.0 / n;
  std::vector<double> w = w0;
  std::vector<double> l_path(phi.size());
  double l = l0;
  l_path[0] = l;

  auto speed_of = [&](const std::vector<double>& wv, double D) {
    const double wy0 = (-3.0 * wv[0] + 4.0 * wv[1] - wv[2]) / (2.0 * dy);
    return -wy0 / D;
  };

  double lp = speed_of(w, X - l);
  std::vector<double> w_trial;
  for (std::size_t m = 0; m + 1 < phi.size(); ++m) {
    const double b1_new = phi[m + 1];
    auto resid = [&](double l_new, double& lp_new) {
      const double d_new = X - l_new;
      lp_new = 2.0 * (l_new - l) / dt - lp;
      w_trial = w;
      cn_step(w_trial, dy, dt, X - l, d_new, lp, lp_new, 0.0, 0.0, 1.0, b1_new);
      return lp_new - speed_of(w_trial, d_new);
    };
    double l_new = l + dt * lp;
    double lp_new = lp;
    for (int it = 0; it < 24; ++it) {
      const double R = resid(l_new, lp_new);
      if (std::abs(R) * dt < 1e-13 * (X - l0)) break;
      const double eps = 1e-8 * (X - l0);
      double tmp;
      const double Rp = resid(l_new + eps, tmp);
      const double dR = (Rp - R) / eps;
      if (!std::isfinite(dR) || std::abs(dR) < 1e-300) break;
      l_new -= R / dR;
    }
    (void)resid(l_new, lp_new);
    w = w_trial;
    l = l_new;
    lp = lp_new;
    l_path[m + 1] = l;
    if (X - l < half_collar_guard)
      throw std::invalid_argument(
          "stefan_fixed_point: front crossed the half-collar guard; shorten the horizon");
  }
  return l_path;
}

}  // namespace stefan_detail

inline FixedPointRun stefan_fixed_point(const Profile& f0, double t0, double tolerance = 1e-8,
                                        FixedPointOptions opt = {}) {
  if (!(t0 > 0)) throw std::invalid_argument("stefan_fixed_point: t0 > 0 required");
  if (tolerance > 0) opt.tolerance = tolerance;
  const double l0 = f0.a(), r0 = f0.b();

  // rho0 and the collar width l_bar = (4 ||rho0'||)^-1
  const std::vector<double> rho0 = stefan_detail::grid_derivative(f0);
  double rho0p_max = 0;
  {
    const double h = f0.dx();
    for (std::size_t i = 1; i + 1 < rho0.size(); ++i)
      rho0p_max = std::max(rho0p_max, std::abs(rho0[i + 1] - rho0[i - 1]) / (2.0 * h));
  }
  if (rho0p_max <= 0) throw std::invalid_argument("stefan_fixed_point: flat derivative data");
  const double collar = 1.0 / (4.0 * rho0p_max);
  const double Xl = l0 + 2.0 * collar;
  const double Xr = r0 - 2.0 * collar;
  if (!(Xl < Xr))
    throw std::invalid_argument("stefan_fixed_point: collars overlap; data too rough");

  const Profile rho_profile(l0, r0, rho0);
  const int M = std::max(16, static_cast<int>(std::lround(t0 / (opt.dt > 0 ? opt.dt : t0 / 512))));
  const double dt = t0 / M;

  FixedPointRun out;
  out.collar = collar;
  out.t.resize(static_cast<std::size_t>(M) + 1);
  for (int m = 0; m <= M; ++m) out.t[static_cast<std::size_t>(m)] = m * dt;

  // initial boundary-data guess: frozen initial values at the collar ends
  std::vector<double> phi1(static_cast<std::size_t>(M) + 1, rho_profile(Xl));
  std::vector<double> phi2(static_cast<std::size_t>(M) + 1, rho_profile(Xr));

  // one-sided initial fields
  const int nc = opt.collar_cells;
  std::vector<double> wl0(static_cast<std::size_t>(nc) + 1), wr0(static_cast<std::size_t>(nc) + 1);
  for (int i = 0; i <= nc; ++i) {
    wl0[static_cast<std::size_t>(i)] = rho_profile(l0 + (Xl - l0) * i / nc);
    // right problem reflected onto a left one: sigma(x^) = -rho(-x^)
    wr0[static_cast<std::size_t>(i)] = -rho_profile(r0 - (r0 - Xr) * i / nc);
  }
  wl0[0] = 1.0;
  wr0[0] = 1.0;

  const int nf = opt.full_cells;
  const double dyf = 1.0 / nf;
  std::vector<double> l_path, r_path;
  std::vector<double> w_full;

  auto sweep = [&](std::vector<double>& phi1_new, std::vector<double>& phi2_new,
                   bool capture_snapshots) {
    // 1) fronts from the one-sided problems
    l_path = stefan_detail::solve_one_sided(wl0, l0, Xl, phi1, dt, collar);
    std::vector<double> phi2_reflected(phi2.size());
    for (std::size_t m = 0; m < phi2.size(); ++m) phi2_reflected[m] = -phi2[m];
    const std::vector<double> r_reflected =
        stefan_detail::solve_one_sided(wr0, -r0, -Xr, phi2_reflected, dt, collar);
    r_path.resize(r_reflected.size());
    for (std::size_t m = 0; m < r_reflected.size(); ++m) r_path[m] = -r_reflected[m];

    // 2) heat equation for rho on the contracting domain, +1/-1 data
    w_full.assign(static_cast<std::size_t>(nf) + 1, 0.0);
    for (int i = 0; i <= nf; ++i)
      w_full[static_cast<std::size_t>(i)] = rho_profile(l0 + (r0 - l0) * i / nf);
    w_full[0] = 1.0;
    w_full[static_cast<std::size_t>(nf)] = -1.0;
    phi1_new[0] = rho_profile(Xl);
    phi2_new[0] = rho_profile(Xr);
    auto read_back = [&](std::size_t m) {
      const Profile row(l_path[m], r_path[m], w_full);
      phi1_new[m] = std::clamp(row(Xl), 0.0, 1.0);
      phi2_new[m] = std::clamp(row(Xr), -1.0, 0.0);
    };
    std::size_t next_snap = 0;
    std::vector<double> snaps = opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    auto maybe_capture = [&](std::size_t m) {
      if (!capture_snapshots) return;
      while (next_snap < snaps.size() && snaps[next_snap] <= out.t[m] + dt * 0.5) {
        StefanState st;
        st.t = out.t[m];
        st.l = l_path[m];
        st.r = r_path[m];
        const double d = st.r - st.l;
        st.f.assign(static_cast<std::size_t>(nf) + 1, 0.0);
        double acc = 0;
        for (int i = 1; i <= nf; ++i) {
          acc += 0.5 * (w_full[static_cast<std::size_t>(i - 1)] + w_full[static_cast<std::size_t>(i)]) *
                 d * dyf;
          st.f[static_cast<std::size_t>(i)] = acc;
        }
        out.mass_defect = std::max(out.mass_defect, std::abs(acc));
        st.f.back() = 0.0;
        stefan_detail::curvature_profile(st.f, d, 1.0, dyf, st.k);
        out.snapshots.push_back(std::move(st));
        ++next_snap;
      }
    };
    maybe_capture(0);
    for (int m = 0; m < M; ++m) {
      const double d_old = r_path[static_cast<std::size_t>(m)] - l_path[static_cast<std::size_t>(m)];
      const double d_new =
          r_path[static_cast<std::size_t>(m) + 1] - l_path[static_cast<std::size_t>(m) + 1];
      const double lp = (l_path[static_cast<std::size_t>(m) + 1] - l_path[static_cast<std::size_t>(m)]) / dt;
      const double rp = (r_path[static_cast<std::size_t>(m) + 1] - r_path[static_cast<std::size_t>(m)]) / dt;
      stefan_detail::cn_step(w_full, dyf, dt, d_old, d_new, lp, lp, rp, rp, 1.0, -1.0);
      read_back(static_cast<std::size_t>(m) + 1);
      maybe_capture(static_cast<std::size_t>(m) + 1);
    }
  };

  std::vector<double> phi1_new(phi1.size()), phi2_new(phi2.size());
  double prev_delta = -1;
  for (int it = 0; it < opt.max_iterations; ++it) {
    sweep(phi1_new, phi2_new, false);
    double delta = 0;
    for (std::size_t m = 0; m < phi1.size(); ++m) {
      delta = std::max(delta, std::abs(phi1_new[m] - phi1[m]));
      delta = std::max(delta, std::abs(phi2_new[m] - phi2[m]));
    }
    phi1 = phi1_new;
    phi2 = phi2_new;
    out.iterations = it + 1;
    if (prev_delta > 0 && delta > 0) out.contraction_factors.push_back(delta / prev_delta);
    prev_delta = delta;
    if (delta < opt.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.observed_contraction = 0;
  for (double f : out.contraction_factors) out.observed_contraction = std::max(out.observed_contraction, f);
  out.contraction_detected =
      !out.contraction_factors.empty() && out.observed_contraction < 1.0;

  // final pass with the converged data, capturing the requested states
  sweep(phi1_new, phi2_new, true);
  out.l = l_path;
  out.r = r_path;
  return out;
}

}  // namespace pinning
