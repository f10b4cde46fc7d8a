#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pinning/profile.hpp"

namespace pinning {

/// Dirichlet heat solution on [a,b] as a sine series. Coefficients are the
/// exact transforms of the piecewise-linear interpolant, so the series is
/// the exact evolution of the input profile (no quadrature aliasing).
class HeatSeries {
 public:
  HeatSeries(const Profile& f0, int modes) : a_(f0.a()), len_(f0.b() - f0.a()) {
    if (modes < 1) throw std::invalid_argument("HeatSeries: modes >= 1 required");
    const double tol = 1e-7 * (1 + f0.max_abs());
    if (std::abs(f0.value(0)) > tol || std::abs(f0.value(f0.n_cells())) > tol)
      throw std::invalid_argument("HeatSeries: profile must vanish on the boundary");
    coef_.resize(static_cast<std::size_t>(modes));
    const int n_cells = f0.n_cells();
    const double h = f0.dx();
    for (int n = 1; n <= modes; ++n) {
      const double k = n * std::numbers::pi / len_;
      double s = 0;
      for (int i = 0; i < n_cells; ++i) {
        const double u0 = i * h, u1 = u0 + h;
        const double p0 = f0.value(i), p1 = f0.value(i + 1);
        const double m = (p1 - p0) / h;
        const double c = p0 - m * u0;
        // integral of (c + m u) sin(k u) over [u0, u1]
        auto anti = [&](double u, double p) { return -p * std::cos(k * u) / k + m * std::sin(k * u) / (k * k); };
        s += anti(u1, c + m * u1) - anti(u0, c + m * u0);
      }
      coef_[static_cast<std::size_t>(n - 1)] = 2.0 / len_ * s;
    }
  }

  int modes() const { return static_cast<int>(coef_.size()); }
  double coefficient(int n) const { return coef_[static_cast<std::size_t>(n - 1)]; }

  double eval(double x, double t) const {
    const double u = x - a_;
    double s = 0;
    for (int n = 1; n <= modes(); ++n) {
      const double k = n * std::numbers::pi / len_;
      s += coef_[static_cast<std::size_t>(n - 1)] * std::exp(-k * k * t) * std::sin(k * u);
    }
    return s;
  }

  double slope(double x, double t) const {
    const double u = x - a_;
    double s = 0;
    for (int n = 1; n <= modes(); ++n) {
      const double k = n * std::numbers::pi / len_;
      s += coef_[static_cast<std::size_t>(n - 1)] * std::exp(-k * k * t) * k * std::cos(k * u);
    }
    return s;
  }

  /// Area of the solution at time t (termwise integral).
  double integral(double t) const {
    double s = 0;
    for (int n = 1; n <= modes(); ++n) {
      const double k = n * std::numbers::pi / len_;
      s += coef_[static_cast<std::size_t>(n - 1)] * std::exp(-k * k * t) * (1.0 - std::cos(n * std::numbers::pi)) / k;
    }
    return s;
  }

  /// Upper bound on the truncated tail at time t (infinite at t = 0).
  double tail_bound(double t) const {
    if (t <= 0) return std::numeric_limits<double>::infinity();
    double bn_max = 0;
    for (int n = 1; n <= modes(); ++n)
      bn_max = std::max(bn_max, std::abs(coef_[static_cast<std::size_t>(n - 1)]) * n);
    const int N = modes();
    const double c = std::pow(std::numbers::pi / len_, 2) * t;
    const double first = std::exp(-c * (N + 1.0) * (N + 1.0));
    const double ratio = std::exp(-c * (2.0 * N + 3.0));
    return bn_max / (N + 1.0) * first / (1.0 - ratio);
  }

  Profile profile(double t, double a, double b, int n_cells) const {
    return Profile::sampled(a, b, n_cells, [&](double x) { return eval(x, t); });
  }

 private:
  double a_, len_;
  std::vector<double> coef_;
};

/// Series evaluation of the Dirichlet heat equation at time t on f0's grid.
inline Profile heat_dirichlet(const Profile& f0, double t, int modes = 128) {
  if (t < 0) throw std::invalid_argument("heat_dirichlet: t >= 0 required");
  if (t == 0) return f0;
  HeatSeries s(f0, modes);
  return s.profile(t, f0.a(), f0.b(), f0.n_cells());
}

/// Crank-Nicolson time stepping with Dirichlet zero boundary (independent
/// discretization used to cross-check the series solver). The first step is
/// split into implicit-Euler half steps to damp the high-mode ringing that
/// plain CN keeps from nonsmooth data.
inline Profile heat_crank_nicolson(const Profile& f0, double t_end, double dt,
                                   int rannacher_halfsteps = 2) {
  if (t_end < 0 || dt <= 0) throw std::invalid_argument("heat_crank_nicolson: bad times");
  const int n = f0.n_cells();
  const double h = f0.dx();
  std::vector<double> w = f0.values();
  w.front() = w.back() = 0;

  std::vector<double> aa(static_cast<std::size_t>(n) + 1), bb(static_cast<std::size_t>(n) + 1),
      cc(static_cast<std::size_t>(n) + 1), rhs(static_cast<std::size_t>(n) + 1),
      scratch(static_cast<std::size_t>(n) + 1);

  auto step = [&](double dtau, double theta) {
    const double r = dtau / (h * h);
    for (int i = 1; i < n; ++i) {
      aa[static_cast<std::size_t>(i)] = -theta * r;
      bb[static_cast<std::size_t>(i)] = 1.0 + 2.0 * theta * r;
      cc[static_cast<std::size_t>(i)] = -theta * r;
      rhs[static_cast<std::size_t>(i)] =
          w[static_cast<std::size_t>(i)] +
          (1.0 - theta) * r *
              (w[static_cast<std::size_t>(i) + 1] - 2.0 * w[static_cast<std::size_t>(i)] +
               w[static_cast<std::size_t>(i) - 1]);
    }
    // Thomas solve on 1..n-1
    scratch[1] = cc[1] / bb[1];
    rhs[1] = rhs[1] / bb[1];
    for (int i = 2; i < n; ++i) {
      const double m = 1.0 / (bb[static_cast<std::size_t>(i)] -
                              aa[static_cast<std::size_t>(i)] * scratch[static_cast<std::size_t>(i) - 1]);
      scratch[static_cast<std::size_t>(i)] = cc[static_cast<std::size_t>(i)] * m;
      rhs[static_cast<std::size_t>(i)] =
          (rhs[static_cast<std::size_t>(i)] - aa[static_cast<std::size_t>(i)] * rhs[static_cast<std::size_t>(i) - 1]) * m;
    }
    for (int i = n - 2; i >= 1; --i)
      rhs[static_cast<std::size_t>(i)] -= scratch[static_cast<std::size_t>(i)] * rhs[static_cast<std::size_t>(i) + 1];
    for (int i = 1; i < n; ++i) w[static_cast<std::size_t>(i)] = rhs[static_cast<std::size_t>(i)];
  };

  double t = 0;
  for (int k = 0; k < rannacher_halfsteps && t + dt / 2 <= t_end + 1e-15; ++k) {
    step(dt / 2, 1.0);
    t += dt / 2;
  }
  while (t < t_end - 1e-15) {
    const double dtau = std::min(dt, t_end - t);
    step(dtau, 0.5);
    t += dtau;
  }
  return Profile(f0.a(), f0.b(), std::move(w));
}

/// Boundary-slope checks for the heat evolution of a profile with unit
/// boundary slopes: the inward slope on the half-collar stays above
/// 1 - exp(-delta_bar^2/16t), and the area never decays faster than rate 2
/// (up to an exponentially small correction).
struct BoundarySlopeReport {
  double threshold = 0;       // 1 - exp(-delta_bar^2 / 16 t)
  double min_slope_left = 0;  // inward slopes over the half-collar
  double min_slope_right = 0;
  bool slope_ok = false;
  double area_0 = 0, area_t = 0;
  double area_slack = 0;  // 2 t exp(-delta_bar^2/16t) + grid tolerance
  bool area_ok = false;   // area_t >= area_0 - 2t - area_slack
  bool pass() const { return slope_ok && area_ok; }
};

inline BoundarySlopeReport heat_boundary_slope(const Profile& f0, double t, double delta_bar,
                                               int modes = 512) {
  if (t <= 0) throw std::invalid_argument("heat_boundary_slope: t > 0 required");
  if (delta_bar <= 0 || delta_bar > 0.5 * (f0.b() - f0.a()))
    throw std::invalid_argument("heat_boundary_slope: collar does not fit the domain");
  const double h = f0.dx();
  const double slope_l = (f0.value(1) - f0.value(0)) / h;
  const double slope_r = (f0.value(f0.n_cells()) - f0.value(f0.n_cells() - 1)) / h;
  if (std::abs(slope_l - 1.0) > 0.05 || std::abs(slope_r + 1.0) > 0.05)
    throw std::invalid_argument("heat_boundary_slope: profile lacks unit boundary slopes");

  HeatSeries s(f0, modes);
  BoundarySlopeReport rep;
  rep.threshold = 1.0 - std::exp(-delta_bar * delta_bar / (16.0 * t));
  const int probes = 64;
  rep.min_slope_left = rep.min_slope_right = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= probes; ++i) {
    const double d = 0.5 * delta_bar * i / probes;
    rep.min_slope_left = std::min(rep.min_slope_left, s.slope(f0.a() + d, t));
    rep.min_slope_right = std::min(rep.min_slope_right, -s.slope(f0.b() - d, t));
  }
  const double grid_tol = 1e-6 + s.tail_bound(t);
  rep.slope_ok = rep.min_slope_left >= rep.threshold - grid_tol &&
                 rep.min_slope_right >= rep.threshold - grid_tol;

  rep.area_0 = f0.integral();
  rep.area_t = s.integral(t);
  rep.area_slack = 2.0 * t * std::exp(-delta_bar * delta_bar / (16.0 * t)) + 1e-6 + h * h;
  rep.area_ok = rep.area_t >= rep.area_0 - 2.0 * t - rep.area_slack;
  return rep;
}

}  // namespace pinning
