#pragma once

// Superspin-1/2 coupled linearly to a discretized boson bath:
//
//   H = sum_l w_l a_l^+ a_l - h . Sigma - Sigma_z sum_l lambda_l (a_l + a_l^+)
//
// on the truncated Fock space |sigma> (x) |n_1 ... n_L>, 0 <= n_l <= n_max.
// Basis index = spin * B + bath index with spin 0 = |+>, 1 = |->, and the bath
// index in mixed radix (n_max + 1) with mode 0 most significant. With h_y = 0
// every matrix element is real.

#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "catcollapse/errors.hpp"
#include "catcollapse/krylov.hpp"
#include "catcollapse/rng.hpp"
#include "catcollapse/vec3.hpp"

namespace catcollapse::spinboson {

using Complex = std::complex<double>;

/// J(w) = 2 pi alpha w^s exp(-w / w_c).
struct SpectralFunction {
  double alpha = 0.0;
  double s = 1.0;
  double omega_c = 1.0;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("spectral function: alpha must be >= 0");
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("spectral function: s must be > 0");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c)) throw InvalidArgument("spectral function: omega_c must be > 0");
  }

  [[nodiscard]] double operator()(double omega) const {
    if (omega <= 0.0) return 0.0;
    return 2.0 * std::numbers::pi * alpha * std::pow(omega, s) * std::exp(-omega / omega_c);
  }

  /// int_a^b w^p exp(-w / w_c) dw via the regularized lower incomplete gamma function.
  [[nodiscard]] double shape_moment(double a, double b, double p) const {
    const double order = s + p + 1.0;
    const double scale = std::pow(omega_c, order) * boost::math::tgamma(order);
    return scale * (boost::math::gamma_p(order, b / omega_c) - boost::math::gamma_p(order, a / omega_c));
  }
};

struct BathMode {
  double omega = 0.0;
  double lambda = 0.0;
};

struct BathDiscretization {
  std::vector<BathMode> modes;
  std::vector<std::pair<double, double>> bins;  // [lo, hi) per retained mode
  std::string scheme = "logarithmic";
  std::vector<std::string> notices;             // dropped-bin messages

  [[nodiscard]] std::size_t size() const noexcept { return modes.size(); }
};

inline constexpr double kBathUpperCutoffFactor = 5.0;

/// Logarithmic bins on [omega_min, 5 omega_c]; per bin lambda^2 = (1/pi) int J
/// and omega = J-weighted mean frequency. The representative frequency uses
/// the shape w^s exp(-w/w_c) so it stays defined when alpha = 0.
inline BathDiscretization discretize_bath(const SpectralFunction& j, int modes, double omega_min) {
  j.validate();
  if (modes < 1) throw InvalidArgument("discretize_bath: need at least one mode");
  const double omega_max = kBathUpperCutoffFactor * j.omega_c;
  if (!(omega_min > 0.0) || !(omega_min < j.omega_c)) {
    throw InvalidArgument("discretize_bath: requires 0 < omega_min < omega_c");
  }
  BathDiscretization bath;
  const double ratio = omega_max / omega_min;
  for (int l = 0; l < modes; ++l) {
    const double lo = omega_min * std::pow(ratio, static_cast<double>(l) / modes);
    const double hi = l + 1 == modes ? omega_max : omega_min * std::pow(ratio, static_cast<double>(l + 1) / modes);
    const double m0 = j.shape_moment(lo, hi, 0.0);
    const double m1 = j.shape_moment(lo, hi, 1.0);
    if (!(m0 > 0.0) || !std::isfinite(m1 / m0)) {
      bath.notices.push_back("bin [" + std::to_string(lo) + ", " + std::to_string(hi) + ") dropped: J vanishes");
      continue;
    }
    const double weight = 2.0 * std::numbers::pi * j.alpha * m0;  // int_bin J
    bath.modes.push_back({m1 / m0, std::sqrt(weight / std::numbers::pi)});
    bath.bins.emplace_back(lo, hi);
  }
  if (bath.modes.empty()) throw InvalidArgument("discretize_bath: every bin was dropped");
  return bath;
}

inline constexpr std::size_t kDefaultMaxDimension = std::size_t{1} << 22;

struct SpinBosonParams {
  Vec3 h;  // (hx, hy, hz); hy must vanish
  BathDiscretization bath;
  int n_max = 1;
  std::size_t max_dimension = kDefaultMaxDimension;

  [[nodiscard]] std::size_t bath_dimension() const {
    std::size_t b = 1;
    for (std::size_t l = 0; l < bath.size(); ++l) {
      if (b > max_dimension / static_cast<std::size_t>(n_max + 1)) {
        throw NumericalBudgetError("spin-boson Hilbert space exceeds the dimension budget of " +
                                   std::to_string(max_dimension));
      }
      b *= static_cast<std::size_t>(n_max + 1);
    }
    return b;
  }
  [[nodiscard]] std::size_t dimension() const { return 2 * bath_dimension(); }

  void validate() const {
    if (!is_finite(h)) throw InvalidArgument("spin-boson field must be finite");
    if (h.y != 0.0) throw InvalidArgument("spin-boson field requires h_y = 0");
    if (n_max < 1 || n_max > 250) throw InvalidArgument("spin-boson n_max must lie in [1, 250]");
    for (const auto& m : bath.modes) {
      if (!(m.omega > 0.0) || !std::isfinite(m.omega)) throw InvalidArgument("bath mode frequency must be > 0");
      if (!(m.lambda >= 0.0) || !std::isfinite(m.lambda)) throw InvalidArgument("bath coupling must be >= 0");
    }
    if (dimension() > max_dimension) {
      throw NumericalBudgetError("spin-boson dimension " + std::to_string(dimension()) + " exceeds budget " +
                                 std::to_string(max_dimension));
    }
  }
};

/// Matrix-free Hamiltonian; read-only after construction.
class Hamiltonian {
 public:
  explicit Hamiltonian(SpinBosonParams params) : params_(std::move(params)) {
    params_.validate();
    modes_ = params_.bath.size();
    bath_dim_ = params_.bath_dimension();
    const auto base = static_cast<std::size_t>(params_.n_max + 1);
    stride_.assign(modes_, 1);
    for (std::size_t l = modes_; l-- > 1;) stride_[l - 1] = stride_[l] * base;
    digits_.resize(bath_dim_ * modes_);
    energy_.resize(static_cast<Eigen::Index>(bath_dim_));
    top_.assign(bath_dim_, 0);
    for (std::size_t b = 0; b < bath_dim_; ++b) {
      double e = 0.0;
      for (std::size_t l = 0; l < modes_; ++l) {
        const auto n = static_cast<std::uint8_t>((b / stride_[l]) % base);
        digits_[b * modes_ + l] = n;
        e += params_.bath.modes[l].omega * n;
        if (n == params_.n_max) top_[b] = 1;
      }
      energy_[static_cast<Eigen::Index>(b)] = e;
    }
    sqrt_.resize(base + 1);
    for (std::size_t n = 0; n <= base; ++n) sqrt_[n] = std::sqrt(static_cast<double>(n));
  }

  [[nodiscard]] const SpinBosonParams& params() const noexcept { return params_; }
  [[nodiscard]] Eigen::Index dimension() const noexcept { return static_cast<Eigen::Index>(2 * bath_dim_); }
  [[nodiscard]] std::size_t bath_dimension() const noexcept { return bath_dim_; }
  [[nodiscard]] std::size_t modes() const noexcept { return modes_; }
  [[nodiscard]] int occupation(std::size_t bath_index, std::size_t mode) const {
    return digits_[bath_index * modes_ + mode];
  }
  /// True when some mode of this bath configuration sits at the cutoff.
  [[nodiscard]] bool at_cutoff(std::size_t bath_index) const { return top_[bath_index] != 0; }

  void apply(const Eigen::Ref<const StateVector>& x, StateVector& y) const {
    const double hx = params_.h.x;
    const double hz = params_.h.z;
    const auto bd = static_cast<Eigen::Index>(bath_dim_);
    y.resize(x.size());
    y.head(bd) = energy_.array() * x.head(bd).array() - hz * x.head(bd).array() - hx * x.tail(bd).array();
    y.tail(bd) = energy_.array() * x.tail(bd).array() + hz * x.tail(bd).array() - hx * x.head(bd).array();
    // Coupling -sigma lambda_l (a_l + a_l^+): for each mode, pair every
    // occupation-n slab with the n+1 slab one stride further on.
    const auto base = static_cast<Eigen::Index>(params_.n_max + 1);
    for (std::size_t l = 0; l < modes_; ++l) {
      const double lambda = params_.bath.modes[l].lambda;
      if (lambda == 0.0) continue;
      const auto st = static_cast<Eigen::Index>(stride_[l]);
      const Eigen::Index block = base * st;
      for (int s = 0; s < 2; ++s) {
        const double g = s == 0 ? -lambda : lambda;
        const Eigen::Index off = s * bd;
        for (Eigen::Index outer = 0; outer < bd; outer += block) {
          for (Eigen::Index n = 0; n + 1 < base; ++n) {
            const double c = g * sqrt_[static_cast<std::size_t>(n + 1)];
            const Eigen::Index lo = off + outer + n * st;
            y.segment(lo, st) += c * x.segment(lo + st, st);
            y.segment(lo + st, st) += c * x.segment(lo, st);
          }
        }
      }
    }
  }

  [[nodiscard]] double expectation(const StateVector& x) const {
    StateVector y;
    apply(x, y);
    return x.dot(y).real();
  }

 private:
  SpinBosonParams params_;
  std::size_t modes_ = 0;
  std::size_t bath_dim_ = 1;
  std::vector<std::size_t> stride_;
  std::vector<std::uint8_t> digits_;
  Eigen::VectorXd energy_;  // bath energy per configuration
  std::vector<std::uint8_t> top_;
  std::vector<double> sqrt_;
};

inline constexpr double kStateNormTolerance = 1e-10;

struct QuantumState {
  StateVector amplitudes;

  void validate(const Hamiltonian& h) const {
    if (amplitudes.size() != h.dimension()) throw InvalidArgument("state dimension does not match the Hamiltonian");
    if (std::abs(amplitudes.norm() - 1.0) > kStateNormTolerance) throw InvalidArgument("state is not normalized");
  }
};

/// Spin state (c_plus |+> + c_minus |->) (x) bath vacuum.
inline QuantumState product_vacuum_state(const Hamiltonian& h, Complex c_plus, Complex c_minus) {
  QuantumState st;
  st.amplitudes = StateVector::Zero(h.dimension());
  st.amplitudes[0] = c_plus;
  st.amplitudes[static_cast<Eigen::Index>(h.bath_dimension())] = c_minus;
  const double n = st.amplitudes.norm();
  if (!(n > 0.0)) throw InvalidArgument("spin amplitudes must not both vanish");
  st.amplitudes /= n;
  return st;
}

struct Observables {
  double mz = 0.0;
  double coherence = 0.0;   // |<+| rho_spin |->|
  double norm = 0.0;
  double energy = 0.0;
  double rho_plus = 0.0;    // <+| rho_spin |+>
  double rho_minus = 0.0;
  Complex rho_pm;           // <+| rho_spin |->
  double top_occupation = 0.0;  // weight on configurations with some n_l = n_max

  /// Smallest eigenvalue of the reduced 2x2 spin density matrix.
  [[nodiscard]] double spin_min_eigenvalue() const noexcept {
    const double mean = 0.5 * (rho_plus + rho_minus);
    const double half = 0.5 * (rho_plus - rho_minus);
    return mean - std::sqrt(half * half + std::norm(rho_pm));
  }
};

inline Observables measure(const Hamiltonian& h, const StateVector& x) {
  const auto bd = static_cast<Eigen::Index>(h.bath_dimension());
  Observables o;
  const auto plus = x.head(bd);
  const auto minus = x.tail(bd);
  o.rho_plus = plus.squaredNorm();
  o.rho_minus = minus.squaredNorm();
  o.rho_pm = minus.dot(plus);  // sum_b x_+[b] conj(x_-[b])
  o.mz = o.rho_plus - o.rho_minus;
  o.coherence = std::abs(o.rho_pm);
  o.norm = std::sqrt(o.rho_plus + o.rho_minus);
  o.energy = h.expectation(x);
  double top = 0.0;
  for (std::size_t b = 0; b < h.bath_dimension(); ++b) {
    if (h.at_cutoff(b)) top += std::norm(x[static_cast<Eigen::Index>(b)]) + std::norm(x[bd + static_cast<Eigen::Index>(b)]);
  }
  o.top_occupation = top;
  return o;
}

struct TrajectoryResult {
  std::vector<double> t;
  std::vector<double> mz;
  std::vector<double> coherence;
  std::vector<double> norm;
  std::vector<double> energy;
  std::vector<double> top_occupation;
  std::vector<double> spin_min_eigenvalue;
  KrylovStats stats;
  int n_max = 0;

  [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
  [[nodiscard]] double max_top_occupation() const noexcept {
    double m = 0.0;
    for (double v : top_occupation) m = std::max(m, v);
    return m;
  }
};

/// Evolve `state0` through the strictly increasing `t_grid` (first entry is
/// the start time), recording observables at every grid time.
inline TrajectoryResult evolve(const QuantumState& state0, const Hamiltonian& h, std::span<const double> t_grid,
                               double tol, StateVector* final_state = nullptr, int max_krylov = 20) {
  state0.validate(h);
  if (t_grid.empty()) throw InvalidArgument("evolve: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw InvalidArgument("evolve: time grid must be strictly increasing");
  }
  if (!(tol > 0.0)) throw InvalidArgument("evolve: tolerance must be > 0");
  KrylovOptions opts;
  opts.tol = tol;
  opts.max_krylov = max_krylov;
  const double horizon = t_grid.back() - t_grid.front();
  TrajectoryResult r;
  r.n_max = h.params().n_max;
  StateVector psi = state0.amplitudes;
  auto record = [&](double t) {
    const auto o = measure(h, psi);
    r.t.push_back(t);
    r.mz.push_back(o.mz);
    r.coherence.push_back(o.coherence);
    r.norm.push_back(o.norm);
    r.energy.push_back(o.energy);
    r.top_occupation.push_back(o.top_occupation);
    r.spin_min_eigenvalue.push_back(o.spin_min_eigenvalue());
  };
  record(t_grid[0]);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    krylov_propagate(h, psi, t_grid[i] - t_grid[i - 1], horizon, opts, r.stats);
    record(t_grid[i]);
  }
  if (final_state) *final_state = psi;
  return r;
}

/// Uniform grid t_0 + k (t_final - t_0) / steps, k = 0..steps.
inline std::vector<double> uniform_grid(double t_final, int steps, double t0 = 0.0) {
  if (steps < 1) throw InvalidArgument("time grid needs at least one step");
  if (!(t_final > t0)) throw InvalidArgument("time grid needs t_final > t0");
  std::vector<double> g(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) g[k] = t0 + (t_final - t0) * k / steps;
  return g;
}

/// Spectral span E_max - E_min from Lanczos extremes (inner estimate).
inline double spectral_span(const Hamiltonian& h) {
  const auto [lo, hi] = lanczos_extremes(h, h.dimension());
  return hi - lo;
}

/// Pure-dephasing coherence 1/2 exp(-Gamma(t)) with
/// Gamma(t) = sum_l (4 lambda_l^2 / w_l^2)(1 - cos w_l t), for h = 0 and a
/// spin starting in (|+> + |->)/sqrt 2 over the vacuum.
inline double dephasing_coherence(const BathDiscretization& bath, double t) {
  double gamma = 0.0;
  for (const auto& m : bath.modes) {
    const double r = m.lambda / m.omega;
    gamma += 4.0 * r * r * (1.0 - std::cos(m.omega * t));
  }
  return 0.5 * std::exp(-gamma);
}

/// Bose-Einstein occupation 1 / (e^{w/T} - 1); zero at T = 0.
inline double bose_occupation(double omega, double temperature) {
  if (temperature <= 0.0) return 0.0;
  return 1.0 / std::expm1(omega / temperature);
}

/// Truncated, renormalized coherent-state amplitudes c_n ~ z^n / sqrt(n!).
inline std::vector<Complex> coherent_amplitudes(Complex z, int n_max) {
  std::vector<Complex> c(static_cast<std::size_t>(n_max) + 1);
  c[0] = 1.0;
  for (int n = 1; n <= n_max; ++n) c[n] = c[n - 1] * z / std::sqrt(static_cast<double>(n));
  double s = 0.0;
  for (const auto& v : c) s += std::norm(v);
  const double inv = 1.0 / std::sqrt(s);
  for (auto& v : c) v *= inv;
  return c;
}

struct SampledBath {
  QuantumState state;
  std::vector<Complex> displacements;
};

/// Spin in the cat (c_plus |+> + c_minus |->), each bath mode in a coherent
/// state whose displacement is drawn from the thermal complex Gaussian with
/// E|z|^2 = n(w_l, T). Zero temperature gives the vacuum for every seed.
inline SampledBath sample_initial_bath(const Hamiltonian& h, double bath_temperature, std::uint64_t seed,
                                       Complex c_plus = std::numbers::sqrt2 / 2.0,
                                       Complex c_minus = std::numbers::sqrt2 / 2.0) {
  if (!(bath_temperature >= 0.0) || !std::isfinite(bath_temperature)) {
    throw InvalidArgument("bath temperature must be >= 0");
  }
  const auto& p = h.params();
  const int n_max = p.n_max;
  Rng rng(seed);
  SampledBath out;
  std::vector<std::vector<Complex>> mode_amps;
  for (const auto& m : p.bath.modes) {
    Complex z{0.0};
    const double nbar = bose_occupation(m.omega, bath_temperature);
    if (nbar > 0.0) {
      const auto [g1, g2] = rng.normal_pair();
      z = std::sqrt(nbar / 2.0) * Complex(g1, g2);
      if (std::norm(z) > n_max / 4.0) {
        throw NumericalBudgetError("sampled displacement |z|^2 = " + std::to_string(std::norm(z)) +
                                   " exceeds n_max/4; raise n_max above " + std::to_string(n_max));
      }
    }
    out.displacements.push_back(z);
    mode_amps.push_back(coherent_amplitudes(z, n_max));
  }
  const double spin_norm = std::sqrt(std::norm(c_plus) + std::norm(c_minus));
  if (!(spin_norm > 0.0)) throw InvalidArgument("spin amplitudes must not both vanish");
  const auto bd = h.bath_dimension();
  StateVector psi(h.dimension());
  for (std::size_t b = 0; b < bd; ++b) {
    Complex a{1.0};
    for (std::size_t l = 0; l < h.modes(); ++l) a *= mode_amps[l][static_cast<std::size_t>(h.occupation(b, l))];
    psi[static_cast<Eigen::Index>(b)] = c_plus / spin_norm * a;
    psi[static_cast<Eigen::Index>(bd + b)] = c_minus / spin_norm * a;
  }
  out.state.amplitudes = std::move(psi);
  return out;
}

/// |+> (x) the bath relaxed in the |+> well: mode l displaced to the
/// coherent amplitude lambda_l / omega_l (the adiabatic displaced-well start).
inline QuantumState displaced_well_state(const Hamiltonian& h) {
  const auto& p = h.params();
  std::vector<std::vector<Complex>> mode_amps;
  for (const auto& m : p.bath.modes) mode_amps.push_back(coherent_amplitudes(m.lambda / m.omega, p.n_max));
  QuantumState st;
  st.amplitudes = StateVector::Zero(h.dimension());
  for (std::size_t b = 0; b < h.bath_dimension(); ++b) {
    Complex a{1.0};
    for (std::size_t l = 0; l < h.modes(); ++l) a *= mode_amps[l][static_cast<std::size_t>(h.occupation(b, l))];
    st.amplitudes[static_cast<Eigen::Index>(b)] = a;
  }
  return st;
}

/// Smallest even-step starting cutoff whose Poisson tail at the largest
/// expected occupation is below 1e-7; the adaptive loop still validates it.
inline int suggested_n_max(const BathDiscretization& bath, double occupation_scale, int floor_n_max) {
  double mean = 0.0;
  for (const auto& m : bath.modes) mean = std::max(mean, occupation_scale * (m.lambda / m.omega) * (m.lambda / m.omega));
  int n = floor_n_max;
  auto tail = [mean](int cut) {
    // P(N >= cut) for N ~ Poisson(mean).
    double term = std::exp(-mean), cdf = 0.0;
    for (int k = 0; k < cut; ++k) {
      cdf += term;
      term *= mean / (k + 1);
    }
    return 1.0 - cdf;
  };
  while (n < 250 && tail(n) > 1e-7) n += 2;
  return n;
}

/// Mean photon number of every mode for a state.
inline std::vector<double> mode_occupations(const Hamiltonian& h, const StateVector& x) {
  std::vector<double> occ(h.modes(), 0.0);
  const auto bd = h.bath_dimension();
  for (std::size_t b = 0; b < bd; ++b) {
    const double w = std::norm(x[static_cast<Eigen::Index>(b)]) + std::norm(x[static_cast<Eigen::Index>(bd + b)]);
    if (w == 0.0) continue;
    for (std::size_t l = 0; l < h.modes(); ++l) occ[l] += w * h.occupation(b, l);
  }
  return occ;
}

inline constexpr double kCutoffOccupationLimit = 1e-6;
inline constexpr double kUndecidedThreshold = 0.05;
inline constexpr double kTailFraction = 0.2;

/// Trapezoidal time average of Mz over the final 20% of the recorded window.
inline double tail_average(const TrajectoryResult& r) {
  if (r.t.size() < 2) return r.mz.empty() ? 0.0 : r.mz.back();
  const double t0 = r.t.front();
  const double t1 = r.t.back();
  const double start = t1 - kTailFraction * (t1 - t0);
  double area = 0.0, span = 0.0;
  for (std::size_t i = 1; i < r.t.size(); ++i) {
    const double a = std::max(r.t[i - 1], start);
    const double b = r.t[i];
    if (b <= a) continue;
    // Linear interpolation of Mz on [t_{i-1}, t_i].
    const double w = r.t[i] - r.t[i - 1];
    auto mz_at = [&](double t) { return r.mz[i - 1] + (r.mz[i] - r.mz[i - 1]) * (t - r.t[i - 1]) / w; };
    area += 0.5 * (mz_at(a) + mz_at(b)) * (b - a);
    span += b - a;
  }
  return span > 0.0 ? area / span : r.mz.back();
}

struct CollapseVerdict {
  int sign = 0;  // +1, -1, or 0 for undecided
  double tail_average = 0.0;
  TrajectoryResult trajectory;

  [[nodiscard]] bool undecided() const noexcept { return sign == 0; }
};

inline CollapseVerdict verdict_of(TrajectoryResult r) {
  CollapseVerdict v;
  v.tail_average = tail_average(r);
  v.sign = std::abs(v.tail_average) < kUndecidedThreshold ? 0 : (v.tail_average > 0.0 ? 1 : -1);
  v.trajectory = std::move(r);
  return v;
}

struct RunProtocol {
  double t_final = 10.0;
  int steps = 200;
  double tol = 1e-10;
  int n_max_limit = 40;       // adaptive cutoff gives up beyond this
  bool adaptive_cutoff = true;
  int max_krylov = 20;
};

/// Run `make_state(h)` forward under params, raising n_max by 2 until the
/// cutoff occupation stays below 1e-6 at every recorded time.
inline TrajectoryResult run_adaptive(SpinBosonParams params, const RunProtocol& protocol,
                                     const std::function<QuantumState(const Hamiltonian&)>& make_state,
                                     StateVector* final_state = nullptr) {
  const auto grid = uniform_grid(protocol.t_final, protocol.steps);
  for (;;) {
    const Hamiltonian h(params);
    auto r = evolve(make_state(h), h, grid, protocol.tol, final_state, protocol.max_krylov);
    if (!protocol.adaptive_cutoff || r.max_top_occupation() < kCutoffOccupationLimit) return r;
    if (params.n_max + 2 > protocol.n_max_limit) {
      throw NumericalBudgetError("Fock cutoff not converged: occupation " + std::to_string(r.max_top_occupation()) +
                                 " at n_max = " + std::to_string(params.n_max) + " and limit " +
                                 std::to_string(protocol.n_max_limit));
    }
    params.n_max += 2;
  }
}

/// Sample a thermal bath under the given spin state, evolve, and read the sign
/// of the tail-averaged magnetization.
inline CollapseVerdict collapse_trajectory(const SpinBosonParams& params, double bath_temperature,
                                           const RunProtocol& protocol, std::uint64_t seed,
                                           Complex c_plus = std::numbers::sqrt2 / 2.0,
                                           Complex c_minus = std::numbers::sqrt2 / 2.0) {
  auto make = [&](const Hamiltonian& h) { return sample_initial_bath(h, bath_temperature, seed, c_plus, c_minus).state; };
  return verdict_of(run_adaptive(params, protocol, make));
}

struct ScanRow {
  double alpha = 0.0;
  double mz_tail_average = 0.0;
  double undecided_fraction = 0.0;
  int n_max = 0;
  TrajectoryResult trajectory;
};

enum class BathStart {
  Vacuum,         // |+> (x) |0...0>: a sudden quench of the coupling
  DisplacedWell,  // |+> (x) bath relaxed in the |+> well
};

struct ScanProtocol {
  int modes = 3;
  double omega_min = 0.3;
  int n_max = 6;  // lower bound; raised from the expected occupation
  BathStart start = BathStart::Vacuum;
  RunProtocol run;
};

/// Tail-averaged Mz from |+> (x) vacuum across increasing alpha. On a few
/// modes this is a qualitative crossover, not the thermodynamic transition.
inline std::vector<ScanRow> scan_localization(double hx, double omega_c, double s, std::span<const double> alpha_grid,
                                              const ScanProtocol& protocol) {
  for (std::size_t i = 1; i < alpha_grid.size(); ++i) {
    if (!(alpha_grid[i] > alpha_grid[i - 1])) throw InvalidArgument("scan: alpha grid must be increasing");
  }
  std::vector<ScanRow> rows;
  for (double alpha : alpha_grid) {
    SpinBosonParams p;
    p.h = {hx, 0.0, 0.0};
    p.bath = discretize_bath({alpha, s, omega_c}, protocol.modes, protocol.omega_min);
    // A vacuum quench swings each mode out to |2 lambda / omega|^2 quanta.
    const double scale = protocol.start == BathStart::Vacuum ? 4.0 : 1.0;
    p.n_max = protocol.run.adaptive_cutoff ? suggested_n_max(p.bath, scale, protocol.n_max) : protocol.n_max;
    auto make = [&protocol](const Hamiltonian& h) {
      return protocol.start == BathStart::Vacuum ? product_vacuum_state(h, 1.0, 0.0) : displaced_well_state(h);
    };
    auto verdict = verdict_of(run_adaptive(p, protocol.run, make));
    const int n_max = verdict.trajectory.n_max;
    rows.push_back({alpha, verdict.tail_average, verdict.undecided() ? 1.0 : 0.0, n_max, std::move(verdict.trajectory)});
  }
  return rows;
}

}  // namespace catcollapse::spinboson
