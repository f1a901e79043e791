#pragma once

// Ideal Bose gas thermodynamics at fixed particle number, parameterized by the
// condensation temperature T_c (k_B = 1). Mass and volume enter only through
// T_c, so U(T) depends on (N, T, T_c) alone:
//
//   U(T) = 3/2 N T (T/T_c)^{3/2} g_{5/2}(z) / zeta(3/2),
//
// with fugacity z = 1 below T_c and g_{3/2}(z) = zeta(3/2) (T_c/T)^{3/2} above.

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <array>
#include <cmath>
#include <string>

#include "catcollapse/errors.hpp"

namespace catcollapse::bose {

namespace detail {

inline constexpr int kSeriesTerms = 120;
inline constexpr int kExpansionTerms = 48;

/// Cached k^{-s} and zeta(s - k) tables for one order s.
struct PolylogTables {
  double order;
  double gamma_one_minus_s;
  std::array<double, kSeriesTerms + 1> inv_pow{};
  std::array<double, kExpansionTerms> zeta_shift{};

  explicit PolylogTables(double s) : order(s), gamma_one_minus_s(boost::math::tgamma(1.0 - s)) {
    for (int k = 1; k <= kSeriesTerms; ++k) inv_pow[k] = std::pow(static_cast<double>(k), -s);
    for (int k = 0; k < kExpansionTerms; ++k) zeta_shift[k] = boost::math::zeta(s - k);
  }
};

inline const PolylogTables& tables_for(double s) {
  static const PolylogTables t32(1.5);
  static const PolylogTables t52(2.5);
  if (s == 1.5) return t32;
  if (s == 2.5) return t52;
  throw InvalidArgument("bose::polylog: only orders 3/2 and 5/2 are tabulated");
}

}  // namespace detail

/// Bose-Einstein function g_s(z) = sum_k z^k / k^s for 0 <= z <= 1, s in {3/2, 5/2}.
inline double polylog(double s, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw InvalidArgument("bose::polylog: fugacity must lie in [0, 1]");
  const auto& tab = detail::tables_for(s);
  if (z == 0.0) return 0.0;
  if (z <= 0.5) {
    double sum = 0.0, zk = z;
    for (int k = 1; k <= detail::kSeriesTerms; ++k) {
      const double term = zk * tab.inv_pow[k];
      sum += term;
      if (term < 1e-18 * sum) break;
      zk *= z;
    }
    return sum;
  }
  // Expansion about z = 1 in mu = -ln z (valid for mu < 2 pi):
  //   g_s(e^-mu) = Gamma(1-s) mu^{s-1} + sum_k zeta(s-k) (-mu)^k / k!
  const double mu = -std::log(z);
  double sum = mu > 0.0 ? tab.gamma_one_minus_s * std::pow(mu, s - 1.0) : 0.0;
  double coeff = 1.0;  // (-mu)^k / k!
  for (int k = 0; k < detail::kExpansionTerms; ++k) {
    const double term = tab.zeta_shift[k] * coeff;
    sum += term;
    if (k > 2 && std::abs(term) < 1e-17 * std::abs(sum)) break;
    coeff *= -mu / (k + 1);
  }
  return sum;
}

inline double zeta_3_2() { return detail::tables_for(1.5).zeta_shift[0]; }
inline double zeta_5_2() { return detail::tables_for(2.5).zeta_shift[0]; }

/// Fugacity at temperature T for a gas condensing at T_c.
inline double fugacity(double temperature, double critical_temperature) {
  if (temperature <= critical_temperature) return 1.0;
  const double target = zeta_3_2() * std::pow(critical_temperature / temperature, 1.5);
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (polylog(1.5, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Internal energy (relative to the ground state) of N ideal bosons.
inline double internal_energy(double temperature, double n_particles, double critical_temperature) {
  if (!(temperature >= 0.0)) throw InvalidArgument("bose::internal_energy: temperature must be >= 0");
  if (temperature == 0.0) return 0.0;
  const double z = fugacity(temperature, critical_temperature);
  return 1.5 * n_particles * temperature * std::pow(temperature / critical_temperature, 1.5) *
         polylog(2.5, z) / zeta_3_2();
}

/// Temperature T' with U(T') = U(T) + deposited_energy, by bracketed bisection
/// to 1e-10 relative width.
inline double heated_temperature(double temperature, double n_particles, double critical_temperature,
                                 double deposited_energy) {
  if (!(deposited_energy >= 0.0)) throw InvalidArgument("deposited energy must be >= 0");
  if (deposited_energy == 0.0) return temperature;
  const double target = internal_energy(temperature, n_particles, critical_temperature) + deposited_energy;
  double lo = temperature;
  double hi = std::max(2.0 * temperature, critical_temperature);
  int expansions = 0;
  while (internal_energy(hi, n_particles, critical_temperature) < target) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 400 || !std::isfinite(hi)) {
      throw NumericalBudgetError("heated_temperature: no bracket found up to T = " + std::to_string(hi));
    }
  }
  for (int i = 0; i < 400; ++i) {
    if (hi - lo <= 1e-10 * hi) return 0.5 * (lo + hi);
    const double mid = 0.5 * (lo + hi);
    (internal_energy(mid, n_particles, critical_temperature) < target ? lo : hi) = mid;
  }
  throw NumericalBudgetError("heated_temperature: bisection did not converge in [" + std::to_string(lo) +
                             ", " + std::to_string(hi) + "]");
}

}  // namespace catcollapse::bose
