#pragma once

// Two-photon product and entangled states sent towards four detectors. Each
// nonzero coefficient D_{a1 a2} evolves independently into its own pointer
// outcome; the superposition of those macroscopic outcomes is the cat state.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iterator>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "catcollapse/detection.hpp"
#include "catcollapse/errors.hpp"
#include "catcollapse/rng.hpp"
#include "catcollapse/spacetime.hpp"
#include "catcollapse/wavepacket.hpp"

namespace catcollapse {

/// D[a1 - 1][a2 - 1] = D_{a1 a2}.
using CoefficientMatrix = std::array<std::array<Complex, 2>, 2>;

/// (1/sqrt 2) (-1)^{a2} delta_{a1, bar a2}: D_12 = +1/sqrt 2, D_21 = -1/sqrt 2.
inline CoefficientMatrix antisymmetric_coefficients() noexcept {
  const double r = std::numbers::sqrt2 / 2.0;  // correctly rounded 1/sqrt 2
  return {{{Complex{0.0}, Complex{r}}, {Complex{-r}, Complex{0.0}}}};
}

inline double coefficient_norm(const CoefficientMatrix& d) noexcept {
  double s = 0.0;
  for (const auto& row : d) {
    for (const auto& c : row) s += std::norm(c);
  }
  return s;
}

struct PhotonMode {
  WaveVector k;
  std::string detector_id;
  double emission_time = 0.0;  // pulse centre leaves the source at this time
};

inline constexpr double kCoefficientNormTolerance = 1e-12;
inline constexpr double kMinModeSeparation = 6.0;  // in units of delta0

struct TwoPhotonSpec {
  CoefficientMatrix D = antisymmetric_coefficients();
  /// modes[l - 1][a - 1] is the wavevector k_{l,a} and the detector it points at.
  std::array<std::array<PhotonMode, 2>, 2> modes;
  double delta0 = 0.0;
  Vec3 source;

  [[nodiscard]] const PhotonMode& mode(int slot, Polarization a) const { return modes.at(slot - 1)[index_of(a) - 1]; }
  [[nodiscard]] Complex coefficient(Polarization a1, Polarization a2) const noexcept {
    return D[index_of(a1) - 1][index_of(a2) - 1];
  }

  void validate() const {
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw InvalidArgument("two-photon delta0 must be > 0");
    for (const auto& row : D) {
      for (const auto& c : row) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw InvalidArgument("D has a non-finite entry");
      }
    }
    if (std::abs(coefficient_norm(D) - 1.0) > kCoefficientNormTolerance) {
      throw InvalidArgument("sum |D|^2 must equal 1, got " + std::to_string(coefficient_norm(D)));
    }
    std::vector<const PhotonMode*> all;
    for (const auto& row : modes) {
      for (const auto& m : row) all.push_back(&m);
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!is_finite(all[i]->k)) throw InvalidArgument("photon wavevector must be finite");
      if (!std::isfinite(all[i]->emission_time)) throw InvalidArgument("photon emission time must be finite");
      if (all[i]->detector_id.empty()) throw InvalidArgument("photon mode has no detector id");
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        if (all[i]->detector_id == all[j]->detector_id) {
          throw InvalidArgument("photon modes must target distinct detectors, " + all[i]->detector_id + " repeats");
        }
        if (norm(all[i]->k - all[j]->k) < kMinModeSeparation * delta0) {
          throw InvalidArgument("photon wavevectors closer than 6 delta0 (" + all[i]->detector_id + ", " +
                                all[j]->detector_id + ")");
        }
      }
    }
  }
};

/// 3x3 joint[o1][o2] over (pass, absorb, scatter) for two independent photons.
using JointDistribution = std::array<std::array<double, 3>, 3>;

inline JointDistribution product_joint_probabilities(const OutcomeProbabilities& p1, const OutcomeProbabilities& p2) {
  p1.validate();
  p2.validate();
  const auto a = p1.as_array();
  const auto b = p2.as_array();
  JointDistribution j{};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) j[r][c] = a[r] * b[c];
  }
  return j;
}

enum class OutcomePolicy {
  Sampled,       // Born-rule draw at every targeted detector
  ForcedAbsorb,  // post-select on both photons absorbed
  ForcedPass,    // both photons pass unabsorbed
};

struct DetectorLabel {
  std::string detector_id;
  DetectionOutcome outcome;
  std::optional<Polarization> polarization;  // set when a photon reached this detector
  int photon_slot = 0;                       // 1 or 2, 0 when no photon arrived

  friend bool operator==(const DetectorLabel&, const DetectorLabel&) = default;
};

struct BranchRecord {
  Complex amplitude;
  std::vector<DetectorLabel> detectors;  // one entry per detector, sorted by id
  /// Free photons left after detection, e.g. "1.1:pass 2.2:scatter"; "vacuum" when both absorbed.
  std::string photon_sector;
  std::vector<std::pair<int, int>> terms;  // contributing (a1, a2)

  [[nodiscard]] std::vector<std::string> fired() const {
    std::vector<std::string> ids;
    for (const auto& d : detectors) {
      if (d.outcome.kind == OutcomeKind::Absorb) ids.push_back(d.detector_id);
    }
    return ids;
  }

  /// Macroscopic label: outcome per detector.
  [[nodiscard]] std::string label() const {
    std::string s;
    for (const auto& d : detectors) {
      if (!s.empty()) s += ' ';
      s += d.detector_id + '=' + std::string(to_string(d.outcome.kind));
    }
    return s;
  }

  [[nodiscard]] bool same_macroscopic_state(const BranchRecord& o) const {
    if (detectors.size() != o.detectors.size()) return false;
    for (std::size_t i = 0; i < detectors.size(); ++i) {
      if (detectors[i].detector_id != o.detectors[i].detector_id || !(detectors[i].outcome == o.detectors[i].outcome)) {
        return false;
      }
    }
    return true;
  }

  friend bool operator==(const BranchRecord&, const BranchRecord&) = default;
};

inline constexpr double kBranchNormTolerance = 1e-12;

struct CatState {
  std::vector<BranchRecord> branches;
  bool collapsed = false;

  [[nodiscard]] double total_weight() const noexcept {
    double w = 0.0;
    for (const auto& b : branches) w += std::norm(b.amplitude);
    return w;
  }

  void validate() const {
    if (branches.empty()) throw StateError("cat state has no branches");
    if (collapsed) {
      if (branches.size() != 1 || std::abs(std::abs(branches[0].amplitude) - 1.0) > kBranchNormTolerance) {
        throw StateError("collapsed cat state must hold exactly one unit branch");
      }
    } else if (std::abs(total_weight() - 1.0) > kBranchNormTolerance) {
      throw StateError("cat state branch weights do not sum to 1");
    }
  }

  friend bool operator==(const CatState&, const CatState&) = default;
};

struct JointOutcome {
  std::size_t branch_index = 0;
  std::map<std::string, DetectionOutcome> outcomes;
  std::map<std::string, Polarization> polarizations;  // fired detectors only

  friend bool operator==(const JointOutcome&, const JointOutcome&) = default;
};

inline JointOutcome joint_outcome_of(const CatState& cat, std::size_t index) {
  const auto& b = cat.branches.at(index);
  JointOutcome j;
  j.branch_index = index;
  for (const auto& d : b.detectors) {
    j.outcomes.emplace(d.detector_id, d.outcome);
    if (d.outcome.kind == OutcomeKind::Absorb && d.polarization) j.polarizations.emplace(d.detector_id, *d.polarization);
  }
  return j;
}

/// Seed stream for photon `slot` of the (a1, a2) term; fixed so that a
/// single-term D reproduces the product-state draws exactly.
constexpr std::uint64_t photon_stream(int a1, int a2, int slot) noexcept {
  return static_cast<std::uint64_t>(4 * (a1 - 1) + 2 * (a2 - 1) + (slot - 1));
}

/// Absorption event at a detector: the pulse centre leaves the source at the
/// mode's emission time and travels at c = 1.
inline SpacetimeEvent absorption_event(const TwoPhotonSpec& spec, const PhotonMode& mode, const DetectorSpec& det) {
  return {det.position, mode.emission_time + norm(det.position - spec.source)};
}

/// Spec, detectors and per-mode detection data resolved once so ensembles do
/// not repeat the heating solve for every run.
class PreparedTwoPhoton {
 public:
  PreparedTwoPhoton(TwoPhotonSpec spec, const std::vector<DetectorSpec>& detectors) : spec_(std::move(spec)) {
    spec_.validate();
    std::map<std::string, const DetectorSpec*> by_id;
    for (const auto& d : detectors) {
      d.validate();
      if (!by_id.emplace(d.id, &d).second) throw InvalidArgument("duplicate detector id " + d.id);
    }
    for (int slot = 1; slot <= 2; ++slot) {
      for (int a = 1; a <= 2; ++a) {
        const auto& m = spec_.modes[slot - 1][a - 1];
        const auto it = by_id.find(m.detector_id);
        if (it == by_id.end()) throw InvalidArgument("photon mode targets unknown detector " + m.detector_id);
        const DetectorSpec& det = *it->second;
        const GaussianPulseSpec pulse{m.k, spec_.delta0, polarization_from_index(a)};
        ModeData md{det, outcome_probabilities(pulse, det), AbsorbedPhoton::solve(det, norm(m.k))};
        modes_[slot - 1][a - 1] = std::move(md);
      }
    }
    // Every detector that can fire must be space-like to every other at absorption.
    std::vector<std::pair<std::string, SpacetimeEvent>> events;
    for (int slot = 1; slot <= 2; ++slot) {
      for (int a = 1; a <= 2; ++a) {
        const auto& md = modes_[slot - 1][a - 1];
        detectors_.push_back(md->detector);
        events.emplace_back(md->detector.id, absorption_event(spec_, spec_.modes[slot - 1][a - 1], md->detector));
      }
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
      for (std::size_t j = i + 1; j < events.size(); ++j) {
        const auto status = interval(events[i].second, events[j].second);
        if (status != CausalStatus::Spacelike) {
          throw ScenarioRejected("absorption events at " + events[i].first + " and " + events[j].first + " are " +
                                 std::string(to_string(status)) + "; cat formation requires space-like separation");
        }
      }
    }
    std::sort(detectors_.begin(), detectors_.end(),
              [](const DetectorSpec& a, const DetectorSpec& b) { return a.id < b.id; });
  }

  [[nodiscard]] const TwoPhotonSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::vector<DetectorSpec>& detectors() const noexcept { return detectors_; }
  [[nodiscard]] const OutcomeProbabilities& probabilities(int slot, Polarization a) const {
    return modes_.at(slot - 1)[index_of(a) - 1]->probabilities;
  }
  [[nodiscard]] const DetectorSpec& detector(int slot, Polarization a) const {
    return modes_.at(slot - 1)[index_of(a) - 1]->detector;
  }
  [[nodiscard]] const AbsorbedPhoton& photon(int slot, Polarization a) const {
    return modes_.at(slot - 1)[index_of(a) - 1]->photon;
  }
  [[nodiscard]] SpacetimeEvent event(int slot, Polarization a) const {
    return absorption_event(spec_, spec_.mode(slot, a), detector(slot, a));
  }

 private:
  struct ModeData {
    DetectorSpec detector;
    OutcomeProbabilities probabilities;
    AbsorbedPhoton photon;
  };
  TwoPhotonSpec spec_;
  std::array<std::array<std::optional<ModeData>, 2>, 2> modes_;
  std::vector<DetectorSpec> detectors_;
};

namespace detail {

inline DetectionOutcome forced_outcome(OutcomeKind kind, const DetectorSpec& det, const AbsorbedPhoton& photon) {
  DetectionOutcome o;
  o.kind = kind;
  o.post_temperature = kind == OutcomeKind::Absorb ? photon.absorbed_temperature : det.temperature;
  o.above_critical = o.post_temperature > det.critical_temperature;
  return o;
}

/// Merge branches with equal macroscopic outcomes. Within one photon sector the
/// amplitudes add coherently; distinct photon sectors are orthogonal, so their
/// weights add and the merged record keeps the phase of the first sector.
inline std::vector<BranchRecord> merge_branches(std::vector<BranchRecord> raw) {
  std::vector<BranchRecord> merged;
  std::vector<bool> used(raw.size(), false);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::pair<std::string, Complex>> sectors;
    BranchRecord rec = raw[i];
    rec.terms.clear();
    for (std::size_t j = i; j < raw.size(); ++j) {
      if (used[j] || !raw[i].same_macroscopic_state(raw[j])) continue;
      used[j] = true;
      for (std::size_t k = 0; k < rec.detectors.size(); ++k) {
        auto& d = rec.detectors[k];
        if (d.polarization != raw[j].detectors[k].polarization || d.photon_slot != raw[j].detectors[k].photon_slot) {
          d.polarization.reset();  // terms disagree on which photon arrived here
          d.photon_slot = 0;
        }
      }
      rec.terms.insert(rec.terms.end(), raw[j].terms.begin(), raw[j].terms.end());
      auto it = std::find_if(sectors.begin(), sectors.end(),
                             [&](const auto& s) { return s.first == raw[j].photon_sector; });
      if (it == sectors.end()) {
        sectors.emplace_back(raw[j].photon_sector, raw[j].amplitude);
      } else {
        it->second += raw[j].amplitude;
      }
    }
    double weight = 0.0;
    Complex phase_source{0.0};
    std::string sector_label;
    for (const auto& [name, amp] : sectors) {
      if (std::abs(amp) == 0.0) continue;
      if (phase_source == Complex{0.0}) phase_source = amp;
      weight += std::norm(amp);
      if (!sector_label.empty()) sector_label += " | ";
      sector_label += name;
    }
    if (weight == 0.0) continue;  // fully destructive interference
    rec.amplitude = sectors.size() == 1 ? phase_source : std::polar(std::sqrt(weight), std::arg(phase_source));
    rec.photon_sector = sector_label;
    merged.push_back(std::move(rec));
  }
  return merged;
}

}  // namespace detail

/// Evolve every nonzero D term into its pointer outcome and superpose them.
inline CatState evolve_entangled(const PreparedTwoPhoton& prep, OutcomePolicy policy, std::uint64_t seed) {
  const auto& spec = prep.spec();
  std::vector<BranchRecord> raw;
  for (int a1 = 1; a1 <= 2; ++a1) {
    for (int a2 = 1; a2 <= 2; ++a2) {
      const Polarization p1 = polarization_from_index(a1);
      const Polarization p2 = polarization_from_index(a2);
      const Complex amp = spec.coefficient(p1, p2);
      if (amp == Complex{0.0}) continue;
      BranchRecord b;
      b.amplitude = amp;
      b.terms.emplace_back(a1, a2);
      for (const auto& det : prep.detectors()) {
        b.detectors.push_back({det.id, detail::forced_outcome(OutcomeKind::Pass, det, AbsorbedPhoton{}), std::nullopt, 0});
      }
      std::string sector;
      const std::array<std::pair<int, Polarization>, 2> photons{{{1, p1}, {2, p2}}};
      for (const auto& [slot, pol] : photons) {
        const auto& det = prep.detector(slot, pol);
        const auto& photon = prep.photon(slot, pol);
        DetectionOutcome o;
        switch (policy) {
          case OutcomePolicy::Sampled:
            o = collapse_single(prep.probabilities(slot, pol), det, photon,
                                derive_seed(seed, photon_stream(a1, a2, slot)));
            break;
          case OutcomePolicy::ForcedAbsorb: o = detail::forced_outcome(OutcomeKind::Absorb, det, photon); break;
          case OutcomePolicy::ForcedPass: o = detail::forced_outcome(OutcomeKind::Pass, det, photon); break;
        }
        auto it = std::find_if(b.detectors.begin(), b.detectors.end(),
                               [&](const DetectorLabel& l) { return l.detector_id == det.id; });
        it->outcome = o;
        it->polarization = pol;
        it->photon_slot = slot;
        if (o.kind != OutcomeKind::Absorb) {
          if (!sector.empty()) sector += ' ';
          sector += std::to_string(slot) + '.' + std::to_string(index_of(pol)) + ':' + std::string(to_string(o.kind));
        }
      }
      b.photon_sector = sector.empty() ? "vacuum" : sector;
      raw.push_back(std::move(b));
    }
  }
  CatState cat;
  cat.branches = detail::merge_branches(std::move(raw));
  if (cat.branches.empty()) throw StateError("evolution produced no surviving branch");
  const double scale = 1.0 / std::sqrt(cat.total_weight());
  for (auto& b : cat.branches) b.amplitude *= scale;
  return cat;
}

inline CatState evolve_entangled(const TwoPhotonSpec& spec, const std::vector<DetectorSpec>& detectors,
                                 OutcomePolicy policy, std::uint64_t seed) {
  return evolve_entangled(PreparedTwoPhoton(spec, detectors), policy, seed);
}

struct CollapseResult {
  JointOutcome outcome;
  MixedState mixture;  // diagonal, weights |amplitude|^2
  CatState state;      // the single selected branch, collapsed = true
};

/// Diagonal mixture of the cat's branches with weights |a|^2.
inline MixedState diagonal_mixture(const CatState& cat) {
  MixedState m;
  for (const auto& b : cat.branches) m.branches.push_back({std::norm(b.amplitude), b.label()});
  return m;
}

/// Collapse onto a branch chosen externally (e.g. by the spin-boson verdict).
inline CollapseResult collapse_cat_to(const CatState& cat, std::size_t index) {
  if (cat.collapsed) throw StateError("cat state already collapsed");
  cat.validate();
  if (index >= cat.branches.size()) throw InvalidArgument("branch index out of range");
  CollapseResult r;
  r.mixture = diagonal_mixture(cat);
  r.outcome = joint_outcome_of(cat, index);
  BranchRecord chosen = cat.branches[index];
  chosen.amplitude /= std::abs(chosen.amplitude);
  r.state.branches = {std::move(chosen)};
  r.state.collapsed = true;
  r.outcome.branch_index = index;
  return r;
}

/// Born-rule collapse: one uniform draw against the cumulative branch weights.
inline CollapseResult collapse_cat(const CatState& cat, std::uint64_t seed) {
  if (cat.collapsed) throw StateError("cat state already collapsed");
  cat.validate();
  Rng rng(seed);
  const double u = rng.uniform() * cat.total_weight();
  double acc = 0.0;
  std::size_t pick = cat.branches.size() - 1;
  for (std::size_t i = 0; i < cat.branches.size(); ++i) {
    acc += std::norm(cat.branches[i].amplitude);
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return collapse_cat_to(cat, pick);
}

struct CorrelationSummary {
  std::size_t runs = 0;
  std::size_t two_detection_runs = 0;
  std::size_t anticorrelated_runs = 0;
  std::size_t same_polarization_runs = 0;

  /// Fraction of two-detection runs with orthogonal polarizations; empty when there are none.
  [[nodiscard]] std::optional<double> anticorrelation_fraction() const noexcept {
    if (two_detection_runs == 0) return std::nullopt;
    return static_cast<double>(anticorrelated_runs) / static_cast<double>(two_detection_runs);
  }
  [[nodiscard]] std::optional<double> same_polarization_rate() const noexcept {
    if (two_detection_runs == 0) return std::nullopt;
    return static_cast<double>(same_polarization_runs) / static_cast<double>(two_detection_runs);
  }
};

/// A run is anticorrelated when exactly two detectors fired with orthogonal polarizations.
inline bool is_anticorrelated(const JointOutcome& o) noexcept {
  if (o.polarizations.size() != 2) return false;
  return o.polarizations.begin()->second == bar(std::next(o.polarizations.begin())->second);
}

inline CorrelationSummary correlation_statistics(const std::vector<JointOutcome>& outcomes) {
  CorrelationSummary s;
  s.runs = outcomes.size();
  for (const auto& o : outcomes) {
    if (o.polarizations.size() != 2) continue;
    ++s.two_detection_runs;
    if (is_anticorrelated(o)) {
      ++s.anticorrelated_runs;
    } else {
      ++s.same_polarization_runs;
    }
  }
  return s;
}

}  // namespace catcollapse
