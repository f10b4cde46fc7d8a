#pragma once

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinning/profile.hpp"

namespace pinning {

/// Discrete interface: heights over x in {-L,...,L}, ±1 increments,
/// pinned to zero at both ends. `walled` adds the nonnegativity constraint.
struct LatticePath {
  int half_length = 0;        // L
  std::vector<int> heights;   // 2L+1 entries, index i <-> site x = i - L
  bool walled = true;

  int L() const { return half_length; }
  int size() const { return 2 * half_length + 1; }
  int at(int x) const { return heights[static_cast<std::size_t>(x + half_length)]; }
  int& at(int x) { return heights[static_cast<std::size_t>(x + half_length)]; }
};

struct ValidationReport {
  bool ok = true;
  std::string violation;  // first violated invariant, empty when ok
};

inline ValidationReport validate(const LatticePath& path) {
  const int L = path.half_length;
  if (L < 1) return {false, "half_length must be >= 1"};
  if (static_cast<int>(path.heights.size()) != 2 * L + 1)
    return {false, "heights must have 2L+1 entries"};
  if (path.at(-L) != 0 || path.at(L) != 0) return {false, "endpoint heights must be 0"};
  for (int x = -L; x < L; ++x)
    if (std::abs(path.at(x + 1) - path.at(x)) != 1)
      return {false, "increments must be +-1 (at x=" + std::to_string(x) + ")"};
  for (int x = -L; x <= L; ++x) {
    if (((path.at(x) - (x + L)) % 2 + 2) % 2 != 0)
      return {false, "parity violated at x=" + std::to_string(x)};
    if (path.walled && path.at(x) < 0)
      return {false, "wall constraint violated at x=" + std::to_string(x)};
  }
  return {};
}

/// Sawtooth ground state: 0 on even x+L, 1 on odd. Maximal contact number.
inline LatticePath eta_min(int L) {
  if (L < 1) throw std::invalid_argument("eta_min: L >= 1 required");
  LatticePath p{L, std::vector<int>(static_cast<std::size_t>(2 * L + 1)), true};
  for (int x = -L; x <= L; ++x) p.at(x) = ((x + L) % 2 == 0) ? 0 : 1;
  return p;
}

/// Builds eta0 with |eta0(x)/L - f0(x/L)| <= 2/L by a left-to-right greedy
/// increment choice; parity and wall admissibility hold by construction.
inline LatticePath discretize(const Profile& f0, int L, bool walled) {
  if (L < 1) throw std::invalid_argument("discretize: L >= 1 required");
  const double tol = 1e-9;
  if (std::abs(f0.a() + 1) > tol || std::abs(f0.b() - 1) > tol)
    throw std::invalid_argument("discretize: profile domain must be [-1,1]");
  if (!f0.is_lipschitz(1.0, 1e-7))
    throw std::invalid_argument("discretize: profile is not 1-Lipschitz");
  if (std::abs(f0(-1.0)) > 1e-7 || std::abs(f0(1.0)) > 1e-7)
    throw std::invalid_argument("discretize: profile must vanish at +-1");
  if (walled && f0.min_value() < -1e-7)
    throw std::invalid_argument("discretize: negative profile with wall");

  LatticePath p{L, std::vector<int>(static_cast<std::size_t>(2 * L + 1)), walled};
  p.at(-L) = 0;
  int h = 0;
  for (int x = -L; x < L; ++x) {
    const int pos = x + 1;
    const double target = L * f0(static_cast<double>(pos) / L);
    int step = (h < target) ? +1 : -1;
    if (walled && h == 0) step = +1;
    if (h + step > L - std::abs(pos)) step = -1;  // keep the bridge closable
    h += step;
    p.at(pos) = h;
  }
  return p;
}

/// Diffusive rescaling: profile on [-1,1], 2L cells, values heights/L.
inline Profile rescale(const LatticePath& path) {
  const int L = path.half_length;
  std::vector<double> v(static_cast<std::size_t>(2 * L + 1));
  for (int x = -L; x <= L; ++x)
    v[static_cast<std::size_t>(x + L)] = static_cast<double>(path.at(x)) / L;
  return Profile(-1.0, 1.0, std::move(v));
}

/// Maximal strictly-positive stretch between two zeros of a walled path.
struct Excursion {
  int left = 0;   // site of the zero opening the excursion
  int right = 0;  // site of the zero closing it
  int length() const { return right - left; }
};

inline std::vector<Excursion> excursions(const LatticePath& path) {
  if (!path.walled) throw std::invalid_argument("excursions: walled path required");
  std::vector<Excursion> out;
  const int L = path.half_length;
  int open = -L;
  bool inside = false;
  for (int x = -L + 1; x <= L; ++x) {
    if (path.at(x) == 0) {
      if (inside) out.push_back({open, x});
      open = x;
      inside = false;
    } else {
      inside = true;
    }
  }
  return out;
}

/// One line of space-separated heights.
inline void write_path(const LatticePath& path, std::ostream& os) {
  for (int i = 0; i < path.size(); ++i) {
    if (i) os << ' ';
    os << path.heights[static_cast<std::size_t>(i)];
  }
  os << '\n';
}

inline LatticePath read_path(std::istream& is, bool walled = true) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_path: empty input");
  std::istringstream ss(line);
  std::vector<int> h;
  for (int v; ss >> v;) h.push_back(v);
  if (h.size() < 3 || h.size() % 2 == 0) throw std::runtime_error("read_path: need 2L+1 heights");
  LatticePath p{static_cast<int>(h.size() / 2), std::move(h), walled};
  return p;
}

}  // namespace pinning
