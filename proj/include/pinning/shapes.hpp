#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pinning/profile.hpp"

namespace pinning {

/// Named initial profiles used by the experiment harness.
///   cosine : (2/pi) cos(pi x/2) on [-1,1]; unit boundary slopes, concave
///   tent   : 1 - |x| on [-1,1]
///   zero   : 0 on [-1,1]
///   negcos : -cos(x) on [-3pi/2, 3pi/2]; admissible but sign-changing
///   wavy   : strictly positive, unit boundary slopes, non-concave
///   csv:<path> : two-column (x, value) file
inline Profile make_profile(const std::string& name, int n_cells = 2048) {
  const double pi = std::numbers::pi;
  if (name == "cosine")
    return Profile::sampled(-1, 1, n_cells,
                            [&](double x) { return 2.0 / pi * std::cos(pi * x / 2); });
  if (name == "tent")
    return Profile::sampled(-1, 1, n_cells, [](double x) { return 1.0 - std::abs(x); });
  if (name == "zero")
    return Profile::sampled(-1, 1, n_cells, [](double) { return 0.0; });
  if (name == "negcos")
    return Profile::sampled(-1.5 * pi, 1.5 * pi, n_cells, [](double x) { return -std::cos(x); });
  if (name == "wavy")
    return Profile::sampled(-1, 1, n_cells, [&](double x) {
      const double u = pi * (x + 1) / 2;
      return 2.0 / pi * (0.65 * std::sin(u) + (0.35 / 3.0) * std::sin(3 * u));
    });
  if (name.rfind("csv:", 0) == 0) {
    std::ifstream is(name.substr(4));
    if (!is) throw std::runtime_error("make_profile: cannot open " + name.substr(4));
    return Profile::read_csv(is);
  }
  throw std::invalid_argument("make_profile: unknown shape '" + name + "'");
}

}  // namespace pinning
