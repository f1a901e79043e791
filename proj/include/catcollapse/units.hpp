#pragma once

#include <cmath>

#include "catcollapse/errors.hpp"

namespace catcollapse {

/// Speed of light in SI units (exact by definition of the metre).
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Display scale for natural-unit quantities (hbar = c = 1 internally).
///
/// One internal length unit corresponds to `length_m` metres and one internal
/// time unit to `time_s` seconds. Because c = 1 internally the pair must
/// satisfy length_m / time_s = c.
class Units {
 public:
  /// Units with the time scale implied by c = 1.
  static Units from_length(double length_m) {
    if (!(length_m > 0.0) || !std::isfinite(length_m)) {
      throw InvalidArgument("length unit must be positive and finite");
    }
    return Units(length_m, length_m / kSpeedOfLight);
  }

  /// Explicit pair; rejected unless consistent with c = 1 to 1e-9 relative.
  static Units from_pair(double length_m, double time_s) {
    if (!(length_m > 0.0) || !(time_s > 0.0) || !std::isfinite(length_m) || !std::isfinite(time_s)) {
      throw InvalidArgument("unit scales must be positive and finite");
    }
    const double implied_c = length_m / time_s;
    if (std::abs(implied_c - kSpeedOfLight) > 1e-9 * kSpeedOfLight) {
      throw InvalidArgument("unit pair (length, time) is inconsistent with c = 1");
    }
    return Units(length_m, time_s);
  }

  [[nodiscard]] double length_m() const noexcept { return length_m_; }
  [[nodiscard]] double time_s() const noexcept { return time_s_; }

  [[nodiscard]] double to_seconds(double t_internal) const noexcept { return t_internal * time_s_; }
  [[nodiscard]] double to_metres(double l_internal) const noexcept { return l_internal * length_m_; }
  [[nodiscard]] double from_seconds(double t_s) const noexcept { return t_s / time_s_; }
  [[nodiscard]] double from_metres(double l_m) const noexcept { return l_m / length_m_; }

 private:
  Units(double length_m, double time_s) : length_m_(length_m), time_s_(time_s) {}

  double length_m_;
  double time_s_;
};

}  // namespace catcollapse
