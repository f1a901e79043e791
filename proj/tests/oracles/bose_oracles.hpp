#pragma once

// Test-only ideal Bose gas oracle: g_s(z) by direct quadrature of the Bose
// integral and U(T) by dense tabulation + bisection. Shares nothing with the
// series/expansion route in catcollapse/bose_gas.hpp.

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles/gaussian_oracles.hpp"

namespace catcollapse::oracle {

/// g_s(z) = 1/Gamma(s) int_0^inf x^{s-1} / (e^x / z - 1) dx with x = y^2.
inline double bose_integral(double s, double z) {
  auto f = [s, z](double y) {
    if (y == 0.0) return (s == 1.5 && z == 1.0) ? 2.0 : 0.0;  // limit of 2 y^2 / (e^{y^2} - 1)
    const double x = y * y;
    return 2.0 * std::pow(y, 2.0 * s - 1.0) / (std::exp(x) / z - 1.0);
  };
  return simpson(f, 0.0, 9.0, 4000) / std::tgamma(s);
}

inline double bose_energy(double temperature, double n, double tc) {
  const double zeta32 = bose_integral(1.5, 1.0);
  double z = 1.0;
  if (temperature > tc) {
    const double target = zeta32 * std::pow(tc / temperature, 1.5);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 50; ++i) {
      const double mid = 0.5 * (lo + hi);
      (bose_integral(1.5, mid) < target ? lo : hi) = mid;
    }
    z = 0.5 * (lo + hi);
  }
  return 1.5 * n * temperature * std::pow(temperature / tc, 1.5) * bose_integral(2.5, z) / zeta32;
}

/// Inverts U on a dense table over [t_lo, t_hi] then refines by bisection.
inline double bose_heated_temperature(double t0, double n, double tc, double energy, double t_hi) {
  const double target = bose_energy(t0, n, tc) + energy;
  const int samples = 40;
  double lo = t0, hi = t_hi;
  for (int i = 1; i <= samples; ++i) {
    const double t = t0 + (t_hi - t0) * i / samples;
    if (bose_energy(t, n, tc) >= target) {
      hi = t;
      lo = t0 + (t_hi - t0) * (i - 1) / samples;
      break;
    }
  }
  for (int i = 0; i < 50; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bose_energy(mid, n, tc) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace catcollapse::oracle
