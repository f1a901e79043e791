#pragma once

// Single superfluid microdetector pass: Born-rule outcome weights, seeded
// pointer-state sampling, the diagonal measurement mixture, heating of the
// boson system and the decoherence-vs-transit timescale check.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "catcollapse/bose_gas.hpp"
#include "catcollapse/errors.hpp"
#include "catcollapse/rng.hpp"
#include "catcollapse/units.hpp"
#include "catcollapse/vec3.hpp"
#include "catcollapse/wavepacket.hpp"

namespace catcollapse {

/// Absorption and scattering probabilities given directly.
struct FixedAbsorption {
  double p_absorb = 0.0;
  double p_scatter = 0.0;
};

/// Phenomenological coupling scaling with the focusing parameter delta0^3 V_B.
struct GeometricAbsorption {
  double efficiency = 0.0;       // eta in [0, 1]
  double scatter_fraction = 0.0; // f_sc in [0, 1)
};

using AbsorptionModel = std::variant<FixedAbsorption, GeometricAbsorption>;

struct DetectorSpec {
  std::string id;
  Vec3 position;
  double volume = 0.0;            // V_B, internal length^3
  std::uint64_t n_bosons = 1;     // N_B
  double temperature = 0.0;       // T < T_c
  double critical_temperature = 0.0;
  AbsorptionModel absorption = FixedAbsorption{};

  void validate() const {
    if (id.empty()) throw InvalidArgument("detector id must not be empty");
    if (!is_finite(position)) throw InvalidArgument("detector " + id + ": position must be finite");
    if (!(volume > 0.0) || !std::isfinite(volume)) throw InvalidArgument("detector " + id + ": V_B must be > 0");
    if (n_bosons < 1) throw InvalidArgument("detector " + id + ": N_B must be >= 1");
    if (!(temperature > 0.0) || !(temperature < critical_temperature)) {
      throw InvalidArgument("detector " + id + ": requires 0 < T < T_c");
    }
  }

  /// Boson density rho_B = N_B / V_B.
  [[nodiscard]] double density() const noexcept { return static_cast<double>(n_bosons) / volume; }
};

inline constexpr double kProbabilityTolerance = 1e-12;

struct OutcomeProbabilities {
  double pass = 1.0;     // p0 = |C_0|^2
  double absorb = 0.0;   // pT = |C_T|^2
  double scatter = 0.0;  // p_sc = |C_sc|^2

  void validate() const {
    for (double p : {pass, absorb, scatter}) {
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("outcome probability outside [0, 1]");
    }
    if (std::abs(pass + absorb + scatter - 1.0) > kProbabilityTolerance) {
      throw InvalidArgument("outcome probabilities do not sum to 1");
    }
  }

  [[nodiscard]] std::array<double, 3> as_array() const noexcept { return {pass, absorb, scatter}; }
};

enum class OutcomeKind { Pass = 0, Absorb = 1, Scatter = 2 };

inline std::string_view to_string(OutcomeKind k) noexcept {
  switch (k) {
    case OutcomeKind::Pass: return "pass";
    case OutcomeKind::Absorb: return "absorb";
    case OutcomeKind::Scatter: return "scatter";
  }
  return "?";
}

struct DetectionOutcome {
  OutcomeKind kind = OutcomeKind::Pass;
  double post_temperature = 0.0;
  /// False when an absorption did not carry the detector past T_c (flagged, not an error).
  bool above_critical = false;

  friend bool operator==(const DetectionOutcome&, const DetectionOutcome&) = default;
};

/// Born-rule weights for one pulse crossing one detector.
///
/// Geometric model: with x = min(1, delta0^3 V_B),
///   pT = eta x,  p_sc = f_sc (1 - pT) x,  p0 = 1 - pT - p_sc.
inline OutcomeProbabilities outcome_probabilities(const GaussianPulseSpec& pulse, const DetectorSpec& det) {
  pulse.validate();
  det.validate();
  OutcomeProbabilities p;
  if (const auto* fixed = std::get_if<FixedAbsorption>(&det.absorption)) {
    p.absorb = fixed->p_absorb;
    p.scatter = fixed->p_scatter;
    p.pass = 1.0 - p.absorb - p.scatter;
  } else {
    const auto& geo = std::get<GeometricAbsorption>(det.absorption);
    if (!(geo.efficiency >= 0.0 && geo.efficiency <= 1.0)) throw InvalidArgument("efficiency must lie in [0, 1]");
    if (!(geo.scatter_fraction >= 0.0 && geo.scatter_fraction < 1.0)) {
      throw InvalidArgument("scatter fraction must lie in [0, 1)");
    }
    const double focus = std::min(1.0, pulse.delta0 * pulse.delta0 * pulse.delta0 * det.volume);
    p.absorb = geo.efficiency * focus;
    p.scatter = geo.scatter_fraction * (1.0 - p.absorb) * focus;
    p.pass = 1.0 - p.absorb - p.scatter;
  }
  if (p.pass < 0.0 && p.pass > -kProbabilityTolerance) p.pass = 0.0;
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("detector " + det.id + ": " + e.what());
  }
  return p;
}

/// Equilibrated temperature after depositing photon_energy into the detector.
inline double post_absorption_temperature(const DetectorSpec& det, double photon_energy) {
  det.validate();
  if (!(photon_energy >= 0.0) || !std::isfinite(photon_energy)) {
    throw InvalidArgument("photon energy must be >= 0");
  }
  return bose::heated_temperature(det.temperature, static_cast<double>(det.n_bosons), det.critical_temperature,
                                  photon_energy);
}

/// Photon energy together with the full-absorption temperature it produces in
/// one detector; lets ensembles solve for T' once instead of per sample.
struct AbsorbedPhoton {
  double energy = 0.0;
  double absorbed_temperature = 0.0;

  static AbsorbedPhoton solve(const DetectorSpec& det, double photon_energy) {
    if (!(photon_energy > 0.0)) throw InvalidArgument("photon energy must be > 0");
    return {photon_energy, post_absorption_temperature(det, photon_energy)};
  }
};

/// Seeded inverse-CDF draw over (p0, pT, p_sc). A scatter deposits a uniformly
/// drawn fraction of the photon energy.
inline DetectionOutcome collapse_single(const OutcomeProbabilities& probs, const DetectorSpec& det,
                                        const AbsorbedPhoton& photon, std::uint64_t seed) {
  probs.validate();
  Rng rng(seed);
  const double u = rng.uniform();
  DetectionOutcome out;
  if (u < probs.pass) {
    out.kind = OutcomeKind::Pass;
    out.post_temperature = det.temperature;
  } else if (u < probs.pass + probs.absorb || probs.scatter == 0.0) {
    out.kind = OutcomeKind::Absorb;
    out.post_temperature = photon.absorbed_temperature;
  } else {
    out.kind = OutcomeKind::Scatter;
    out.post_temperature = post_absorption_temperature(det, rng.uniform() * photon.energy);
  }
  out.above_critical = out.post_temperature > det.critical_temperature;
  return out;
}

inline DetectionOutcome collapse_single(const OutcomeProbabilities& probs, const DetectorSpec& det,
                                        double photon_energy, std::uint64_t seed) {
  probs.validate();
  if (!(photon_energy > 0.0)) throw InvalidArgument("photon energy must be > 0");
  const bool needs_full = probs.absorb > 0.0 || probs.scatter == 0.0;
  const AbsorbedPhoton photon{photon_energy,
                              needs_full ? post_absorption_temperature(det, photon_energy) : det.temperature};
  return collapse_single(probs, det, photon, seed);
}

/// Block-diagonal mixture of labelled macroscopic branches.
struct MixedState {
  struct Branch {
    double weight = 0.0;
    std::string label;
  };
  std::vector<Branch> branches;

  [[nodiscard]] double trace() const noexcept {
    double t = 0.0;
    for (const auto& b : branches) t += b.weight;
    return t;
  }
  /// Tr rho^2 = sum w^2 (no cross terms).
  [[nodiscard]] double purity() const noexcept {
    double p = 0.0;
    for (const auto& b : branches) p += b.weight * b.weight;
    return p;
  }
};

/// Diagonal mixture with weights (p0, pT, p_sc); zero-weight branches are omitted.
inline MixedState measurement_density_matrix(const OutcomeProbabilities& probs,
                                             const std::array<std::string, 3>& labels = {"pass", "absorb",
                                                                                         "scatter"}) {
  probs.validate();
  MixedState m;
  const auto w = probs.as_array();
  for (std::size_t i = 0; i < 3; ++i) {
    if (w[i] > 0.0) m.branches.push_back({w[i], labels[i]});
  }
  return m;
}

/// Required separation between decoherence and transit times.
inline constexpr double kTimescaleMargin = 0.1;

struct TimescaleCheck {
  double decoherence_s = 0.0;
  double transit_s = 0.0;       // V_B^{1/3} / c
  double pulse_duration_s = 0.0; // 1 / delta0, informational
  bool pass = false;
};

/// Passes iff decoherence_time < 0.1 x transit time through the detector.
inline TimescaleCheck validate_timescales(const DetectorSpec& det, const GaussianPulseSpec& pulse,
                                          double decoherence_time_s, const Units& units) {
  det.validate();
  pulse.validate();
  if (!(decoherence_time_s > 0.0)) throw InvalidArgument("decoherence time must be > 0");
  TimescaleCheck r;
  r.decoherence_s = decoherence_time_s;
  r.transit_s = units.to_seconds(std::cbrt(det.volume));
  r.pulse_duration_s = units.to_seconds(1.0 / pulse.delta0);
  r.pass = decoherence_time_s < kTimescaleMargin * r.transit_s;
  return r;
}

}  // namespace catcollapse
