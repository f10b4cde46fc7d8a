#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pinning/lattice_path.hpp"
#include "pinning/pinning_parameter.hpp"

namespace pinning {

/// Number of interior zeros N(eta).
inline int contacts(const LatticePath& path) {
  if (!path.walled) throw std::invalid_argument("contacts: walled path required");
  int n = 0;
  for (int x = -path.half_length + 1; x < path.half_length; ++x)
    if (path.at(x) == 0) ++n;
  return n;
}

namespace detail {
// Integral of max(eta,1) over one cell of the linear interpolant. Heights
// adjacent cells differ by one, so the only mixed cell is {0,1}.
inline double cell_area(int h0, int h1) {
  if (h0 >= 1 && h1 >= 1) return 0.5 * (h0 + h1);
  if (h0 <= 0 && h1 <= 0) return 1.0;  // below the floor (free paths)
  // one endpoint below 1: the {0,1} cell, or a free-path crossing
  if ((h0 == 0 && h1 == 1) || (h0 == 1 && h1 == 0)) return 1.0;
  // general crossing for unwalled paths: integrate max(linear,1) exactly
  const double lo = std::min(h0, h1), hi = std::max(h0, h1);
  const double frac = (hi - 1.0) / (hi - lo);  // portion of the cell above 1
  return (1.0 - frac) * 1.0 + frac * 0.5 * (hi + 1.0);
}
}  // namespace detail

/// A(eta) = integral of max(eta,1) over [x_l, x_r] (linear interpolation).
inline double windowed_area(const LatticePath& path, int x_l, int x_r) {
  const int L = path.half_length;
  if (!(x_l >= -L && x_r <= L && x_l < x_r))
    throw std::invalid_argument("windowed_area: need -L <= x_l < x_r <= L");
  double a = 0;
  for (int x = x_l; x < x_r; ++x) a += detail::cell_area(path.at(x), path.at(x + 1));
  return a;
}

/// A(eta) over the full interval; A(eta_min) = 2L.
inline double area(const LatticePath& path) {
  return windowed_area(path, -path.half_length, path.half_length);
}

/// Rate and area change of the flip at an interior site with neighbor
/// heights hm, hp and current height hc. Zero rate when nothing can move.
struct FlipTerm {
  double rate = 0;
  double dA = 0;
};

inline FlipTerm site_flip_term(int hm, int hc, int hp, PinningParameter lambda, bool walled) {
  if (hm != hp) return {};
  if (hc == hm - 1) {  // local minimum, candidate flip up
    if (!walled) return {1.0, +2.0};
    if (hc == 0) {  // removing a contact: A uses max(.,1), so dA = +1
      if (lambda.is_infinite()) return {0.0, +1.0};
      return {2.0 / (1.0 + lambda.value()), +1.0};
    }
    return {1.0, +2.0};
  }
  // local maximum, candidate flip down
  if (!walled) return {1.0, -2.0};
  if (hm == 0) return {};  // would reach height -1
  if (hc == 2) {           // creating a contact
    if (lambda.is_infinite()) return {2.0, -1.0};
    const double l = lambda.value();
    return {2.0 * l / (1.0 + l), -1.0};
  }
  return {1.0, -2.0};
}

/// Transition rate c(eta, eta^(x)) of the heat-bath dynamics.
inline double flip_rate(const LatticePath& path, int x, PinningParameter lambda) {
  const int L = path.half_length;
  if (!(x > -L && x < L)) throw std::out_of_range("flip_rate: site outside (-L, L)");
  return site_flip_term(path.at(x - 1), path.at(x), path.at(x + 1), lambda, path.walled).rate;
}

/// Exact generator drift of A, by enumerating every legal flip.
struct DriftReport {
  double value = 0;               // (L A)(eta)
  int excursion_count_ge4 = 0;    // brute-force count; the drift equals -2 times this
  struct Contribution {
    int site;
    double rate;
    double dA;
  };
  std::vector<Contribution> per_site;
};

inline DriftReport generator_drift_area(const LatticePath& path, PinningParameter lambda) {
  if (!path.walled) throw std::invalid_argument("generator_drift_area: walled path required");
  DriftReport rep;
  for (int x = -path.half_length + 1; x < path.half_length; ++x) {
    const FlipTerm t = site_flip_term(path.at(x - 1), path.at(x), path.at(x + 1), lambda, true);
    if (t.rate == 0) continue;
    rep.per_site.push_back({x, t.rate, t.dA});
    rep.value += t.rate * t.dA;
  }
  for (const Excursion& e : excursions(path))
    if (e.length() >= 4) ++rep.excursion_count_ge4;
  return rep;
}

/// Per-site drift contributions as CSV (site, rate, dA, contribution);
/// rows follow the deterministic site order of the enumeration.
inline void write_drift_csv(const DriftReport& rep, std::ostream& os) {
  os << "site,rate,dA,contribution\n";
  for (const DriftReport::Contribution& c : rep.per_site)
    os << c.site << ',' << detail::format_double(c.rate) << ',' << detail::format_double(c.dA)
       << ',' << detail::format_double(c.rate * c.dA) << '\n';
}

/// F(eta): jump rate of the quadratic variation of the compensated area,
/// lambda = infinity. Always <= 8L.
inline double martingale_bracket_rate(const LatticePath& path) {
  if (!path.walled) throw std::invalid_argument("martingale_bracket_rate: walled path required");
  double f = 0;
  for (int x = -path.half_length + 1; x < path.half_length; ++x) {
    const FlipTerm t =
        site_flip_term(path.at(x - 1), path.at(x), path.at(x + 1), PinningParameter::infinite(), true);
    f += t.rate * t.dA * t.dA;
  }
  return f;
}

/// Phi(eta) = sum_x cos(x pi / 2L) eta_x.
inline double fourier(const LatticePath& path) {
  const int L = path.half_length;
  double s = 0;
  for (int x = -L; x <= L; ++x)
    s += std::cos(x * std::numbers::pi / (2.0 * L)) * path.at(x);
  return s;
}

/// kappa_L = 2(1 - cos(pi/2L)): eigenvalue of the discrete Laplacian on
/// g(x) = cos(x pi / 2L).
inline double kappa(int L) {
  if (L < 1) throw std::invalid_argument("kappa: L >= 1 required");
  return 2.0 * (1.0 - std::cos(std::numbers::pi / (2.0 * L)));
}

/// Compensated-area residual M_t = A(t) - A(0) - int_0^t (L A) ds evaluated
/// on a sampled trajectory, plus its sampled quadratic variation.
struct MartingaleSeries {
  std::vector<double> t;
  std::vector<double> m;
  double quadratic_variation = 0;  // sum of squared increments
  double max_abs = 0;
};

inline MartingaleSeries martingale_residual(const std::vector<double>& times,
                                            const std::vector<double>& areas,
                                            const std::vector<double>& drift_integrals,
                                            std::size_t min_samples = 64) {
  if (times.size() != areas.size() || times.size() != drift_integrals.size())
    throw std::invalid_argument("martingale_residual: mismatched series");
  if (times.size() < min_samples)
    throw std::invalid_argument("martingale_residual: sampling too sparse");
  MartingaleSeries out;
  out.t = times;
  out.m.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    out.m[i] = areas[i] - areas[0] - drift_integrals[i];
    out.max_abs = std::max(out.max_abs, std::abs(out.m[i]));
    if (i) {
      const double d = out.m[i] - out.m[i - 1];
      out.quadratic_variation += d * d;
    }
  }
  return out;
}

}  // namespace pinning
