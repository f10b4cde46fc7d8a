#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace pinning {

/// Wall interaction strength: finite lambda >= 0, or the sticky-wall limit.
/// The infinite case is a distinguished tag, never a floating-point inf
/// inside rate formulas.
class PinningParameter {
 public:
  PinningParameter() = default;

  static PinningParameter finite(double v) {
    if (!(v >= 0) || !std::isfinite(v))
      throw std::invalid_argument("PinningParameter: finite lambda must be >= 0");
    PinningParameter p;
    p.value_ = v;
    return p;
  }

  static PinningParameter infinite() {
    PinningParameter p;
    p.infinite_ = true;
    return p;
  }

  /// Accepts "inf"/"infinity" or a nonnegative number.
  static PinningParameter parse(const std::string& s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return infinite();
    return finite(std::strtod(s.c_str(), nullptr));
  }

  bool is_infinite() const { return infinite_; }

  double value() const {
    if (infinite_) throw std::logic_error("PinningParameter: value() on infinite lambda");
    return value_;
  }

  std::string str() const { return infinite_ ? "inf" : std::to_string(value_); }

  /// Order used by the monotone couplings: smaller lambda dominates.
  bool operator<=(const PinningParameter& o) const {
    if (infinite_) return o.infinite_;
    if (o.infinite_) return true;
    return value_ <= o.value_;
  }
  bool operator==(const PinningParameter& o) const {
    return infinite_ == o.infinite_ && (infinite_ || value_ == o.value_);
  }

 private:
  double value_ = 1.0;
  bool infinite_ = false;
};

}  // namespace pinning
