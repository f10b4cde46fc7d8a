#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "pinning/lattice_path.hpp"
#include "pinning/rng.hpp"

namespace pinning {

/// Transfer-matrix tables for the pinning measure pi^lambda_L on walled
/// paths: prefix and suffix weighted counts with one lambda factor per
/// interior zero. Columns are rescaled to their maximum with a running log
/// factor, so arbitrarily long polymers stay representable.
class PartitionTable {
 public:
  PartitionTable(int L, double lambda) : L_(L), lambda_(lambda) {
    if (L < 1) throw std::invalid_argument("PartitionTable: L >= 1 required");
    if (!(lambda >= 0) || !std::isfinite(lambda))
      throw std::invalid_argument("PartitionTable: finite lambda >= 0 required");
    build();
  }

  int L() const { return L_; }
  double lambda() const { return lambda_; }

  double log_partition() const { return log_z_; }
  double partition() const { return std::exp(log_z_); }

  /// log of the weighted count of prefixes from (-L,0) to (x,h).
  double log_prefix_weight(int x, int h) const {
    const double v = cell(fwd_, x, h);
    return v > 0 ? std::log(v) + fwd_scale_[idx(x)] : -std::numeric_limits<double>::infinity();
  }

  double prefix_weight(int x, int h) const { return std::exp(log_prefix_weight(x, h)); }

  /// P(eta_x = 0) under pi^lambda_L; zero at interior x when lambda = 0.
  double site_zero_probability(int x) const {
    if (x <= -L_ || x >= L_) throw std::out_of_range("site_zero_probability: interior x required");
    if (lambda_ == 0) return 0.0;
    const double lf = log_prefix_weight(x, 0);
    const double ls = log_suffix(x, 0);
    if (!std::isfinite(lf) || !std::isfinite(ls)) return 0.0;
    return std::exp(lf + ls - std::log(lambda_) - log_z_);
  }

  double expected_contacts() const {
    double e = 0;
    for (int x = -L_ + 1; x < L_; ++x)
      if ((x + L_) % 2 == 0) e += site_zero_probability(x);
    return e;
  }

  /// E[eta_x] under pi^lambda_L.
  double site_height_mean(int x) const {
    if (x <= -L_ || x >= L_) return 0.0;
    double num = 0;
    for (int h = (x + L_) % 2; h <= hmax(x); h += 2) {
      if (h == 0) continue;
      const double lw = log_prefix_weight(x, h) + log_suffix(x, h) - log_z_;
      num += h * std::exp(lw);  // node weight is 1 for h > 0
    }
    return num;
  }

  /// E[Phi] = sum_x cos(x pi/2L) E[eta_x]: the equilibrium plateau of the
  /// Fourier observable.
  double fourier_mean() const {
    double s = 0;
    for (int x = -L_ + 1; x < L_; ++x)
      s += std::cos(x * std::numbers::pi / (2.0 * L_)) * site_height_mean(x);
    return s;
  }

  /// pi(eta_{x-1} = eta_{x+1} = 1): both neighbors of site x at height one,
  /// i.e. x is a contact or one flip away from it. x must have contact
  /// parity.
  double pin_probability_at(int x) const {
    if (x <= -L_ + 1 || x >= L_ - 1)
      throw std::out_of_range("pin_probability_at: need -L+1 < x < L-1");
    if ((x + L_) % 2 != 0)
      throw std::invalid_argument("pin_probability_at: site lacks contact parity");
    const double lf = log_prefix_weight(x - 1, 1);
    const double ls = log_suffix(x + 1, 1);
    return std::exp(lf + std::log1p(lambda_) + ls - log_z_);
  }

  /// The previous probability at the midpoint; needs even L.
  double midpoint_pin_probability() const {
    if (L_ % 2 != 0)
      throw std::invalid_argument("midpoint_pin_probability: even half-length required");
    return pin_probability_at(0);
  }

  /// Exact sample by forward decoding against the suffix table (lambda > 0).
  LatticePath sample(std::uint64_t seed) const {
    if (lambda_ <= 0)
      throw std::invalid_argument("PartitionTable::sample: lambda > 0 required");
    rng::Key key = rng::stream_key(seed, rng::Stream::init);
    LatticePath p{L_, std::vector<int>(static_cast<std::size_t>(2 * L_ + 1)), true};
    int h = 0;
    for (int x = -L_; x < L_; ++x) {
      const double wu = cell(bwd_, x + 1, h + 1);
      const double wd = (h >= 1) ? cell(bwd_, x + 1, h - 1) : 0.0;
      const double u = rng::u01(rng::at(key, static_cast<std::uint64_t>(x + L_)));
      h = (u * (wu + wd) < wu) ? h + 1 : h - 1;
      p.at(x + 1) = h;
    }
    return p;
  }

  /// Debug dump of the prefix table as (x, h, weight).
  void write_csv(std::ostream& os) const {
    os << "x,h,weight\n";
    for (int x = -L_; x <= L_; ++x)
      for (int h = (x + L_) % 2; h <= hmax(x); h += 2)
        os << x << ',' << h << ',' << detail::format_double(prefix_weight(x, h)) << '\n';
  }

 private:
  int L_;
  double lambda_;
  std::vector<std::vector<double>> fwd_, bwd_;  // rescaled columns
  std::vector<double> fwd_scale_, bwd_scale_;   // cumulative log scales
  double log_z_ = 0;

  int idx(int x) const { return x + L_; }
  int hmax(int x) const { return std::min(x + L_, L_ - x); }

  double cell(const std::vector<std::vector<double>>& t, int x, int h) const {
    if (h < 0 || h > hmax(x)) return 0.0;
    return t[static_cast<std::size_t>(idx(x))][static_cast<std::size_t>(h)];
  }

  double log_suffix(int x, int h) const {
    const double v = cell(bwd_, x, h);
    return v > 0 ? std::log(v) + bwd_scale_[static_cast<std::size_t>(idx(x))]
                 : -std::numeric_limits<double>::infinity();
  }

  // lambda factor carried by node (x,h)
  double node_weight(int x, int h) const {
    return (h == 0 && x > -L_ && x < L_) ? lambda_ : 1.0;
  }

  void rescale_column(std::vector<double>& col, double& scale) {
    double m = 0;
    for (double v : col) m = std::max(m, v);
    if (m > 0 && (m > 1e280 || m < 1e-280)) {
      for (double& v : col) v /= m;
      scale += std::log(m);
    }
  }

  void build() {
    const int n = 2 * L_ + 1;
    fwd_.assign(static_cast<std::size_t>(n), {});
    bwd_.assign(static_cast<std::size_t>(n), {});
    fwd_scale_.assign(static_cast<std::size_t>(n), 0.0);
    bwd_scale_.assign(static_cast<std::size_t>(n), 0.0);

    fwd_[0] = {1.0};
    for (int x = -L_ + 1; x <= L_; ++x) {
      auto& col = fwd_[static_cast<std::size_t>(idx(x))];
      col.assign(static_cast<std::size_t>(hmax(x)) + 1, 0.0);
      for (int h = (x + L_) % 2; h <= hmax(x); h += 2)
        col[static_cast<std::size_t>(h)] =
            node_weight(x, h) * (cell(fwd_, x - 1, h - 1) + cell(fwd_, x - 1, h + 1));
      fwd_scale_[static_cast<std::size_t>(idx(x))] = fwd_scale_[static_cast<std::size_t>(idx(x)) - 1];
      rescale_column(col, fwd_scale_[static_cast<std::size_t>(idx(x))]);
    }

    bwd_[static_cast<std::size_t>(2 * L_)] = {1.0};
    for (int x = L_ - 1; x >= -L_; --x) {
      auto& col = bwd_[static_cast<std::size_t>(idx(x))];
      col.assign(static_cast<std::size_t>(hmax(x)) + 1, 0.0);
      for (int h = (x + L_) % 2; h <= hmax(x); h += 2)
        col[static_cast<std::size_t>(h)] =
            node_weight(x, h) * (cell(bwd_, x + 1, h + 1) + (h >= 1 ? cell(bwd_, x + 1, h - 1) : 0.0));
      bwd_scale_[static_cast<std::size_t>(idx(x))] = bwd_scale_[static_cast<std::size_t>(idx(x)) + 1];
      rescale_column(col, bwd_scale_[static_cast<std::size_t>(idx(x))]);
    }

    log_z_ = std::log(cell(fwd_, L_, 0)) + fwd_scale_[static_cast<std::size_t>(2 * L_)];
  }
};

inline double log_partition_function(int L, double lambda) {
  return PartitionTable(L, lambda).log_partition();
}

/// Z^lambda_{2L}; overflows to +inf for very long polymers (use the log form).
inline double partition_function(int L, double lambda) {
  return PartitionTable(L, lambda).partition();
}

inline LatticePath equilibrium_sample(int L, double lambda, std::uint64_t seed) {
  return PartitionTable(L, lambda).sample(seed);
}

/// Equilibrium probability that both neighbors of the midpoint of a
/// length-2l polymer sit at height one; decays like l^{-3/2} off
/// criticality.
inline double midpoint_pin_probability(int l, double lambda) {
  return PartitionTable(l, lambda).midpoint_pin_probability();
}

/// All walled paths of half-length L, lexicographic with "up" before
/// "down" (deterministic order for golden files and oracles).
inline std::vector<LatticePath> enumerate_walled_paths(int L) {
  std::vector<LatticePath> out;
  LatticePath p{L, std::vector<int>(static_cast<std::size_t>(2 * L + 1)), true};
  auto rec = [&](auto&& self, int x, int h) -> void {
    if (x == L) {
      if (h == 0) out.push_back(p);
      return;
    }
    const int remaining = L - (x + 1);
    if (h + 1 <= remaining) {  // can still reach zero by the right end
      p.at(x + 1) = h + 1;
      self(self, x + 1, h + 1);
    }
    if (h - 1 >= 0) {
      p.at(x + 1) = h - 1;
      self(self, x + 1, h - 1);
    }
  };
  rec(rec, -L, 0);
  return out;
}

/// Weight lambda^N(eta) of one path (for enumeration-based oracles).
inline double path_weight(const LatticePath& path, double lambda) {
  double w = 1;
  for (int x = -path.half_length + 1; x < path.half_length; ++x)
    if (path.at(x) == 0) w *= lambda;
  return w;
}

}  // namespace pinning
