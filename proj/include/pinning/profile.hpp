#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinning {

/// Real-valued function on a uniform node-centered grid of an interval,
/// compared across grids by linear interpolation.
class Profile {
 public:
  Profile() : a_(0), b_(1), values_(2, 0.0) {}

  Profile(double a, double b, std::vector<double> values) : a_(a), b_(b), values_(std::move(values)) {
    if (!(a_ < b_)) throw std::invalid_argument("Profile: need a < b");
    if (values_.size() < 2) throw std::invalid_argument("Profile: need at least two nodes");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("Profile: non-finite value");
  }

  template <typename F>
  static Profile sampled(double a, double b, int n_cells, F&& f) {
    if (n_cells < 1) throw std::invalid_argument("Profile: n_cells < 1");
    std::vector<double> v(static_cast<std::size_t>(n_cells) + 1);
    for (int i = 0; i <= n_cells; ++i) v[static_cast<std::size_t>(i)] = f(a + (b - a) * i / n_cells);
    return Profile(a, b, std::move(v));
  }

  double a() const { return a_; }
  double b() const { return b_; }
  int n_cells() const { return static_cast<int>(values_.size()) - 1; }
  double dx() const { return (b_ - a_) / n_cells(); }
  const std::vector<double>& values() const { return values_; }
  double node(int i) const { return a_ + (b_ - a_) * i / n_cells(); }
  double value(int i) const { return values_[static_cast<std::size_t>(i)]; }

  /// Linear interpolation; x is clamped to the domain within a small slack.
  double operator()(double x) const {
    const int n = n_cells();
    double y = (x - a_) / (b_ - a_) * n;
    if (y <= 0) return values_.front();
    if (y >= n) return values_.back();
    const int i = static_cast<int>(y);
    const double w = y - i;
    return values_[static_cast<std::size_t>(i)] * (1.0 - w) + values_[static_cast<std::size_t>(i) + 1] * w;
  }

  /// Composite trapezoid over the whole domain.
  double integral() const {
    double s = 0.5 * (values_.front() + values_.back());
    for (std::size_t i = 1; i + 1 < values_.size(); ++i) s += values_[i];
    return s * dx();
  }

  double max_abs() const {
    double m = 0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }
  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

  /// |Δvalue| <= c·Δx + tol at every cell.
  bool is_lipschitz(double c, double tol = 1e-9) const {
    const double h = dx();
    for (std::size_t i = 0; i + 1 < values_.size(); ++i)
      if (std::abs(values_[i + 1] - values_[i]) > c * h + tol) return false;
    return true;
  }

  /// Two-column CSV (x, value).
  void write_csv(std::ostream& os) const;
  static Profile read_csv(std::istream& is);

 private:
  double a_, b_;
  std::vector<double> values_;
};

namespace detail {
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
}  // namespace detail

inline void Profile::write_csv(std::ostream& os) const {
  os << "x,value\n";
  for (int i = 0; i <= n_cells(); ++i)
    os << detail::format_double(node(i)) << ',' << detail::format_double(value(i)) << '\n';
}

inline Profile Profile::read_csv(std::istream& is) {
  std::string line;
  std::vector<double> xs, vs;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    char* end = nullptr;
    const double x = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) continue;  // header row
    xs.push_back(x);
    vs.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
  }
  if (xs.size() < 2) throw std::runtime_error("Profile::read_csv: fewer than two rows");
  // Nodes must be uniform.
  const double h = xs[1] - xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - xs[0] - h * static_cast<double>(i)) > 1e-9 * (1 + std::abs(xs.back())))
      throw std::runtime_error("Profile::read_csv: grid is not uniform");
  return Profile(xs.front(), xs.back(), std::move(vs));
}

/// Exact sup distance between the two linear interpolants (max over the
/// union of both node sets; the difference is piecewise linear, so node
/// values realize the sup).
inline double sup_distance(const Profile& p, const Profile& q) {
  const double tol = 1e-9 * (1.0 + std::abs(p.b() - p.a()));
  if (std::abs(p.a() - q.a()) > tol || std::abs(p.b() - q.b()) > tol)
    throw std::invalid_argument("sup_distance: mismatched domains");
  double m = 0;
  for (int i = 0; i <= p.n_cells(); ++i) m = std::max(m, std::abs(p.value(i) - q(p.node(i))));
  for (int i = 0; i <= q.n_cells(); ++i) m = std::max(m, std::abs(q.value(i) - p(q.node(i))));
  return m;
}

}  // namespace pinning
