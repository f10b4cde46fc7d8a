#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pinning/profile.hpp"
#include "pinning/rng.hpp"

namespace testers {

/// Random piecewise-linear 1-Lipschitz profile on [-1,1] vanishing at the
/// ends, built from knot heights with bridge-closable increments.
inline pinning::Profile random_lipschitz_profile(std::uint64_t seed, bool nonneg, int knots = 9,
                                                 int n_cells = 512) {
  using namespace pinning;
  const rng::Key key = rng::stream_key(seed, rng::Stream::aux);
  const double step = 2.0 / knots;  // knot spacing; max height change per knot
  std::vector<double> v(static_cast<std::size_t>(knots) + 1, 0.0);
  for (int i = 1; i < knots; ++i) {
    const double u = 2.0 * rng::u01(rng::at(key, static_cast<std::uint64_t>(i))) - 1.0;
    double next = v[static_cast<std::size_t>(i - 1)] + u * step;
    const double cap = step * (knots - i);  // must reach zero at the right end
    next = std::clamp(next, -cap, cap);
    if (nonneg) next = std::max(next, 0.0);
    v[static_cast<std::size_t>(i)] = next;
  }
  const Profile knots_profile(-1.0, 1.0, v);
  return Profile::sampled(-1.0, 1.0, n_cells, [&](double x) { return knots_profile(x); });
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stderr_of_mean(const std::vector<double>& v) {
  const double m = mean(v);
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  return std::sqrt(var / (static_cast<double>(v.size()) - 1) / static_cast<double>(v.size()));
}

}  // namespace testers
