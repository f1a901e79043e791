#pragma once

// Single-photon Gaussian wavepackets on a discrete momentum grid.
//
// Natural units (hbar = c = 1): the vacuum dispersion is omega(k) = |k| and the
// group velocity is the unit vector along k. A grid of spacing dk represents a
// periodic quantization box of volume V = (2 pi / dk)^3, so that the discrete
// sum over modes approximates V * integral d^3k / (2 pi)^3.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "catcollapse/errors.hpp"
#include "catcollapse/vec3.hpp"

namespace catcollapse {

using Complex = std::complex<double>;
using WaveVector = Vec3;

enum class Polarization : int { One = 1, Two = 2 };

/// Orthogonal polarization, 3 - alpha.
constexpr Polarization bar(Polarization p) noexcept {
  return p == Polarization::One ? Polarization::Two : Polarization::One;
}

constexpr int index_of(Polarization p) noexcept { return static_cast<int>(p); }

inline Polarization polarization_from_index(int alpha) {
  if (alpha != 1 && alpha != 2) {
    throw InvalidArgument("polarization index must be 1 or 2, got " + std::to_string(alpha));
  }
  return static_cast<Polarization>(alpha);
}

struct GaussianPulseSpec {
  WaveVector k0;
  double delta0 = 0.0;
  Polarization alpha0 = Polarization::One;

  void validate() const {
    if (!is_finite(k0)) throw InvalidArgument("pulse centre wavevector must be finite");
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw InvalidArgument("pulse width delta0 must be > 0");
  }

  /// Narrow-pulse regime delta0 << |k0|, checked against a ratio threshold.
  [[nodiscard]] bool is_narrow(double max_ratio = 0.1) const noexcept {
    return delta0 < max_ratio * norm(k0);
  }
};

/// Uniform Cartesian momentum grid of 2m cells per axis covering
/// [centre - K, centre + K]^3 with nodes at the cell midpoints.
class MomentumGrid {
 public:
  MomentumGrid(const WaveVector& centre, double half_extent, int cells_per_half)
      : centre_(centre), half_extent_(half_extent), cells_per_half_(cells_per_half) {
    if (!is_finite(centre)) throw InvalidArgument("grid centre must be finite");
    if (!(half_extent > 0.0) || !std::isfinite(half_extent)) throw InvalidArgument("grid half extent must be > 0");
    if (cells_per_half < 1) throw InvalidArgument("grid needs at least one cell per half axis");
  }

  /// Grid centred on the pulse with half width 5 delta0, rounded up to whole cells of size dk.
  static MomentumGrid for_pulse(const GaussianPulseSpec& spec, double dk) {
    spec.validate();
    if (!(dk > 0.0)) throw InvalidArgument("grid spacing dk must be > 0");
    const int m = static_cast<int>(std::ceil(5.0 * spec.delta0 / dk - 1e-9));
    return MomentumGrid(spec.k0, m * dk, m);
  }

  [[nodiscard]] const WaveVector& centre() const noexcept { return centre_; }
  [[nodiscard]] double half_extent() const noexcept { return half_extent_; }
  [[nodiscard]] int cells_per_half() const noexcept { return cells_per_half_; }
  [[nodiscard]] int points_per_axis() const noexcept { return 2 * cells_per_half_; }
  [[nodiscard]] double dk() const noexcept { return half_extent_ / cells_per_half_; }
  [[nodiscard]] std::size_t node_count() const noexcept {
    const auto n = static_cast<std::size_t>(points_per_axis());
    return n * n * n;
  }
  /// Quantization volume V = (2 pi / dk)^3.
  [[nodiscard]] double volume() const noexcept {
    const double side = 2.0 * std::numbers::pi / dk();
    return side * side * side;
  }

  /// Coordinate of node i along one axis, relative to the centre.
  [[nodiscard]] double axis_offset(int i) const noexcept {
    return (i + 0.5 - cells_per_half_) * dk();
  }

  [[nodiscard]] WaveVector node(std::size_t flat) const noexcept {
    const auto n = static_cast<std::size_t>(points_per_axis());
    const auto iz = static_cast<int>(flat % n);
    const auto iy = static_cast<int>((flat / n) % n);
    const auto ix = static_cast<int>(flat / (n * n));
    return centre_ + WaveVector{axis_offset(ix), axis_offset(iy), axis_offset(iz)};
  }

  [[nodiscard]] bool contains(const WaveVector& k) const noexcept {
    const WaveVector d = k - centre_;
    return std::abs(d.x) <= half_extent_ && std::abs(d.y) <= half_extent_ && std::abs(d.z) <= half_extent_;
  }

  friend bool operator==(const MomentumGrid&, const MomentumGrid&) = default;

 private:
  WaveVector centre_;
  double half_extent_;
  int cells_per_half_;
};

namespace detail {

inline double sum_sq(std::span<const Complex> c) noexcept {
  long double acc = 0.0L;
  for (const Complex& z : c) acc += static_cast<long double>(std::norm(z));
  return static_cast<double>(acc);
}

}  // namespace detail

/// Normalization tolerance on sum |C|^2.
inline constexpr double kWavepacketNormTolerance = 1e-12;

/// Photon state: amplitudes C_{k alpha} for both polarizations on a grid.
///
/// Immutable after construction; operations return new states.
class WavepacketState {
 public:
  /// Wraps explicit amplitudes; both channels must have grid.node_count() entries
  /// and the total norm must be 1 within kWavepacketNormTolerance.
  WavepacketState(MomentumGrid grid, std::vector<Complex> pol1, std::vector<Complex> pol2, double t = 0.0,
                  double norm_constant = std::numeric_limits<double>::quiet_NaN())
      : grid_(std::move(grid)), coeffs_{std::move(pol1), std::move(pol2)}, t_(t), norm_constant_(norm_constant) {
    if (coeffs_[0].size() != grid_.node_count() || coeffs_[1].size() != grid_.node_count()) {
      throw InvalidArgument("coefficient arrays do not match grid size");
    }
    if (!std::isfinite(t_)) throw InvalidArgument("state time must be finite");
    const double n = total_norm();
    if (std::abs(n - 1.0) > kWavepacketNormTolerance) {
      throw InvalidArgument("wavepacket is not normalized (sum |C|^2 = " + std::to_string(n) + ")");
    }
  }

  [[nodiscard]] const MomentumGrid& grid() const noexcept { return grid_; }
  [[nodiscard]] double time() const noexcept { return t_; }
  [[nodiscard]] std::span<const Complex> coefficients(Polarization p) const noexcept {
    return coeffs_[index_of(p) - 1];
  }
  [[nodiscard]] double total_norm() const noexcept {
    return detail::sum_sq(coeffs_[0]) + detail::sum_sq(coeffs_[1]);
  }

  /// Discrete sum of the unnormalized Gaussian weights before renormalization
  /// (NaN when the state was not produced by build_gaussian).
  [[nodiscard]] double normalization_constant() const noexcept { return norm_constant_; }

  /// Copy advanced by dt under free evolution (see propagate).
  [[nodiscard]] WavepacketState advanced(double dt) const {
    WavepacketState out = *this;
    out.t_ = t_ + dt;
    if (dt == 0.0) return out;
    for (auto& channel : out.coeffs_) {
      for (std::size_t i = 0; i < channel.size(); ++i) {
        if (channel[i] == Complex{}) continue;
        channel[i] *= std::polar(1.0, -norm(grid_.node(i)) * dt);
      }
    }
    return out;
  }

 private:
  MomentumGrid grid_;
  std::vector<Complex> coeffs_[2];
  double t_ = 0.0;
  double norm_constant_ = std::numeric_limits<double>::quiet_NaN();
};

/// Continuum normalization delta0^3 V / (2 pi)^{3/2}.
inline double continuum_normalization(double delta0, double volume) noexcept {
  return delta0 * delta0 * delta0 * volume / std::pow(2.0 * std::numbers::pi, 1.5);
}

/// Gaussian pulse exp(-|k - k0|^2 / 4 delta0^2) in polarization alpha0,
/// renormalized to unit norm on the grid.
inline WavepacketState build_gaussian(const GaussianPulseSpec& spec, const MomentumGrid& grid) {
  spec.validate();
  if (spec.delta0 < 2.0 * grid.dk()) {
    throw InvalidArgument("grid too coarse: delta0 = " + std::to_string(spec.delta0) +
                          " < 2 dk = " + std::to_string(2.0 * grid.dk()));
  }
  if (!grid.contains(spec.k0)) throw InvalidArgument("pulse centre k0 lies outside the grid extent");

  const std::size_t n = grid.node_count();
  std::vector<Complex> active(n);
  const double inv4d2 = 1.0 / (4.0 * spec.delta0 * spec.delta0);
  long double weight_sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const WaveVector d = grid.node(i) - spec.k0;
    const double amp = std::exp(-dot(d, d) * inv4d2);
    active[i] = amp;
    weight_sum += static_cast<long double>(amp) * amp;
  }
  const double norm_constant = static_cast<double>(weight_sum);
  const double scale = 1.0 / std::sqrt(norm_constant);
  for (Complex& c : active) c *= scale;

  std::vector<Complex> idle(n, Complex{});
  if (spec.alpha0 == Polarization::One) {
    return WavepacketState(grid, std::move(active), std::move(idle), 0.0, norm_constant);
  }
  return WavepacketState(grid, std::move(idle), std::move(active), 0.0, norm_constant);
}

/// Expectation of omega(k) = |k|.
inline double mean_energy(const WavepacketState& state) {
  if (std::abs(state.total_norm() - 1.0) > kWavepacketNormTolerance) {
    throw InvalidArgument("mean_energy requires a normalized state");
  }
  long double acc = 0.0L;
  const MomentumGrid& g = state.grid();
  for (Polarization p : {Polarization::One, Polarization::Two}) {
    const auto c = state.coefficients(p);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double w = std::norm(c[i]);
      if (w != 0.0) acc += static_cast<long double>(norm(g.node(i))) * w;
    }
  }
  return static_cast<double>(acc);
}

/// Free evolution by dt under H = sum |k| a^dag a: C -> C exp(-i |k| dt).
/// Negative dt runs time backwards.
inline WavepacketState propagate(const WavepacketState& state, double dt) {
  if (!std::isfinite(dt)) throw InvalidArgument("propagation interval must be finite");
  return state.advanced(dt);
}

/// <vacuum| A(r) |psi(t)>: mode sum weighted by sqrt(2 pi / omega) / sqrt(V),
/// projected on each mode's own polarization vector.
///
/// The state is advanced from its own time to `t` before evaluation. For many
/// probe points at one time use envelope_scan, which shares that work.
inline std::vector<Complex> envelope_scan(const WavepacketState& state, std::span<const Vec3> points, double t) {
  const WavepacketState at_t = propagate(state, t - state.time());
  const MomentumGrid& g = at_t.grid();
  const int n = g.points_per_axis();
  const std::size_t nodes = g.node_count();

  std::vector<Complex> weighted(nodes);
  const double inv_sqrt_v = 1.0 / std::sqrt(g.volume());
  for (std::size_t i = 0; i < nodes; ++i) {
    const Complex c = at_t.coefficients(Polarization::One)[i] + at_t.coefficients(Polarization::Two)[i];
    if (c == Complex{}) continue;
    const double omega = norm(g.node(i));
    const double w = omega > 0.0 ? std::sqrt(2.0 * std::numbers::pi / omega) * inv_sqrt_v : 0.0;
    weighted[i] = c * w;
  }

  std::vector<Complex> out;
  out.reserve(points.size());
  std::vector<Complex> px(n), py(n), pz(n);
  for (const Vec3& r : points) {
    for (int i = 0; i < n; ++i) {
      const double off = g.axis_offset(i);
      px[i] = std::polar(1.0, (g.centre().x + off) * r.x);
      py[i] = std::polar(1.0, (g.centre().y + off) * r.y);
      pz[i] = std::polar(1.0, (g.centre().z + off) * r.z);
    }
    Complex acc{};
    std::size_t flat = 0;
    for (int ix = 0; ix < n; ++ix) {
      for (int iy = 0; iy < n; ++iy) {
        const Complex pxy = px[ix] * py[iy];
        Complex row{};
        for (int iz = 0; iz < n; ++iz, ++flat) row += weighted[flat] * pz[iz];
        acc += pxy * row;
      }
    }
    out.push_back(acc);
  }
  return out;
}

inline Complex envelope_amplitude(const WavepacketState& state, const Vec3& r, double t) {
  const Vec3 pts[1] = {r};
  return envelope_scan(state, pts, t).front();
}

/// Inner product sum conj(C^a) C^b over both polarizations.
inline Complex pulse_overlap(const WavepacketState& a, const WavepacketState& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("pulse_overlap: states live on different grids");
  Complex acc{};
  for (Polarization p : {Polarization::One, Polarization::Two}) {
    const auto ca = a.coefficients(p);
    const auto cb = b.coefficients(p);
    for (std::size_t i = 0; i < ca.size(); ++i) acc += std::conj(ca[i]) * cb[i];
  }
  return acc;
}

}  // namespace catcollapse
