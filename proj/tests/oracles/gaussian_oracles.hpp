#pragma once

// Test-only quadrature oracles for Gaussian momentum distributions. These do
// not touch the grid code: they integrate the continuum expressions directly.

#include <cmath>
#include <numbers>

namespace catcollapse::oracle {

/// Composite Simpson rule on [a, b] with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// <|k|> for the density exp(-|k - k0|^2 / 2 delta^2), |k0| = k0_mag.
///
/// Uses the exact angular average of |k0 + rho n| over directions n:
///   rho < k0: k0 + rho^2 / (3 k0);   rho >= k0: rho + k0^2 / (3 rho),
/// leaving a single radial integral.
inline double gaussian_mean_modulus(double k0_mag, double delta) {
  auto angular = [k0_mag](double rho) {
    return rho < k0_mag ? k0_mag + rho * rho / (3.0 * k0_mag) : rho + k0_mag * k0_mag / (3.0 * rho);
  };
  auto weight = [delta](double rho) { return rho * rho * std::exp(-rho * rho / (2.0 * delta * delta)); };
  const double upper = 14.0 * delta;
  const double num = simpson([&](double r) { return weight(r) * angular(r); }, 0.0, upper, 20000);
  const double den = simpson(weight, 0.0, upper, 20000);
  return num / den;
}

/// Continuum sum of exp(-|k-k0|^2/2 delta^2) restricted to the cube
/// |k_i - k0_i| <= half_width, in discrete-sum units (V / (2 pi)^3 per d^3k).
inline double gaussian_box_normalization(double delta, double half_width, double volume) {
  const double per_axis =
      delta * std::sqrt(2.0 * std::numbers::pi) * std::erf(half_width / (delta * std::numbers::sqrt2));
  return volume / std::pow(2.0 * std::numbers::pi, 3) * per_axis * per_axis * per_axis;
}

}  // namespace catcollapse::oracle
