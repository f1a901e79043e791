#pragma once

// End-to-end EPR pipeline: photon pair -> detector absorption events -> cat
// state frozen until light-cone contact -> spin-boson collapse verdict ->
// collapsed branch, plus the decoherence/transit/contact timescale report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catcollapse/entangle.hpp"
#include "catcollapse/spacetime.hpp"
#include "catcollapse/spinboson.hpp"
#include "catcollapse/units.hpp"

namespace catcollapse {

enum class UndecidedPolicy {
  Retry,   // resample the bath with the next derived seed
  Report,  // stop and report the run as undecided
};

struct SpinBosonSetup {
  spinboson::SpinBosonParams params;
  double bath_temperature = 0.0;
  spinboson::RunProtocol protocol;
  double time_unit_s = 1e-15;  // seconds per spin-boson time unit
};

struct EprScenario {
  TwoPhotonSpec photons;
  std::vector<DetectorSpec> detectors;
  SpinBosonSetup spinboson;
  Units units = Units::from_length(1e-6);
  std::vector<double> probe_times;  // internal time units
  ContactRule contact_rule = ContactRule::OneWay;
  OutcomePolicy outcome_policy = OutcomePolicy::Sampled;
  UndecidedPolicy undecided_policy = UndecidedPolicy::Retry;
  int max_retries = 50;
  double decoherence_time_s = 1e-15;
};

enum class Phase { Superposed, Collapsing, Collapsed };

inline std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Superposed: return "superposed";
    case Phase::Collapsing: return "collapsing";
    case Phase::Collapsed: return "collapsed";
  }
  return "?";
}

struct TimelineEntry {
  double t = 0.0;
  Phase phase = Phase::Superposed;
  std::string detail;
};

struct ProbeRecord {
  double t = 0.0;
  Phase phase = Phase::Superposed;
  CatState state;
};

struct EprResult {
  std::vector<LabelledEvent> events;  // absorption events of detectors that fire in some branch
  ContactSchedule contact;
  CatState formed;
  std::optional<CollapseResult> collapse;  // empty when undecided or never in contact
  int spin_sign = 0;
  double tail_average = 0.0;
  int attempts = 0;
  bool undecided = false;
  double collapse_duration = 0.0;  // internal time units
  std::vector<ProbeRecord> probes;
  std::vector<TimelineEntry> timeline;

  [[nodiscard]] bool anticorrelated() const { return collapse && is_anticorrelated(collapse->outcome); }
  /// Selected branch index, or -1 when no branch was selected.
  [[nodiscard]] long branch() const { return collapse ? static_cast<long>(collapse->outcome.branch_index) : -1; }
};

namespace detail {

inline constexpr std::uint64_t kEntangleStream = 0;
inline constexpr std::uint64_t kBornStream = 1;
inline constexpr std::uint64_t kBathStreamBase = 16;

inline std::string branch_description(const BranchRecord& b) {
  std::string s;
  for (const auto& d : b.detectors) {
    if (d.outcome.kind == OutcomeKind::Pass) continue;
    if (!s.empty()) s += ' ';
    s += d.detector_id + ':' + std::string(to_string(d.outcome.kind));
  }
  return s.empty() ? "none fired" : s;
}

}  // namespace detail

/// Run one scenario. Rejects non-spacelike absorption geometries before any
/// cat state is formed.
inline EprResult run_epr_scenario(const EprScenario& sc, std::uint64_t seed) {
  const PreparedTwoPhoton prep(sc.photons, sc.detectors);  // throws ScenarioRejected
  EprResult r;
  r.formed = evolve_entangled(prep, sc.outcome_policy, derive_seed(seed, detail::kEntangleStream));

  // Detectors that fire in at least one branch, with their absorption events.
  for (const auto& det : prep.detectors()) {
    bool fires = false;
    for (const auto& b : r.formed.branches) {
      for (const auto& d : b.detectors) fires = fires || (d.detector_id == det.id && d.outcome.kind != OutcomeKind::Pass);
    }
    if (!fires) continue;
    for (int slot = 1; slot <= 2; ++slot) {
      for (Polarization p : {Polarization::One, Polarization::Two}) {
        if (sc.photons.mode(slot, p).detector_id == det.id) r.events.push_back({det.id, prep.event(slot, p)});
      }
    }
  }
  std::sort(r.events.begin(), r.events.end(), [](const auto& a, const auto& b) {
    return a.event.time != b.event.time ? a.event.time < b.event.time : a.detector_id < b.detector_id;
  });
  if (!r.events.empty()) r.contact = contact_time(r.events, sc.contact_rule);

  for (const auto& e : r.events) {
    r.timeline.push_back({e.event.time, Phase::Superposed, "absorption event at " + e.detector_id});
  }
  for (std::size_t i = 0; i < r.formed.branches.size(); ++i) {
    const auto& b = r.formed.branches[i];
    const double t0 = r.events.empty() ? 0.0 : r.events.front().event.time;
    r.timeline.push_back({t0, Phase::Superposed,
                          "branch " + std::to_string(i) + " weight " + std::to_string(std::norm(b.amplitude)) + ": " +
                              detail::branch_description(b)});
  }

  const bool superposition = r.formed.branches.size() > 1;
  if (!superposition) {
    // Nothing to decohere: the single branch is the outcome.
    r.collapse = collapse_cat_to(r.formed, 0);
    r.spin_sign = 0;
  } else if (r.contact.has_contact()) {
    if (r.formed.branches.size() == 2) {
      const auto& sb = sc.spinboson;
      const Complex c_plus = r.formed.branches[0].amplitude;
      const Complex c_minus = r.formed.branches[1].amplitude;
      const int max_attempts = sc.undecided_policy == UndecidedPolicy::Retry ? std::max(sc.max_retries, 1) : 1;
      for (int k = 0; k < max_attempts; ++k) {
        const auto v = spinboson::collapse_trajectory(sb.params, sb.bath_temperature, sb.protocol,
                                                      derive_seed(seed, detail::kBathStreamBase + k), c_plus, c_minus);
        ++r.attempts;
        r.spin_sign = v.sign;
        r.tail_average = v.tail_average;
        if (!v.undecided()) break;
      }
      r.collapse_duration = sc.units.from_seconds(sb.protocol.t_final * sb.time_unit_s);
      if (r.spin_sign != 0) {
        // |+> carries the first branch, |-> the second.
        r.collapse = collapse_cat_to(r.formed, r.spin_sign > 0 ? 0 : 1);
      } else {
        r.undecided = true;
      }
    } else {
      // More than two macroscopic branches have no two-level spin image; fall
      // back to a Born-rule draw at contact.
      r.collapse = collapse_cat(r.formed, derive_seed(seed, detail::kBornStream));
    }
  }

  const double t_contact = r.contact.t_contact;
  const double t_done = t_contact + r.collapse_duration;
  if (superposition && r.contact.has_contact()) {
    r.timeline.push_back({t_contact, Phase::Collapsing,
                          "light-cone contact; spin-boson attempts " + std::to_string(r.attempts) + ", tail Mz " +
                              std::to_string(r.tail_average)});
    if (r.collapse) {
      const auto& b = r.formed.branches[r.collapse->outcome.branch_index];
      r.timeline.push_back({t_done, Phase::Collapsed,
                            "branch " + std::to_string(r.collapse->outcome.branch_index) + " selected: " +
                                detail::branch_description(b)});
    } else {
      r.timeline.push_back({t_done, Phase::Collapsing, "undecided verdict reported"});
    }
  } else if (!superposition) {
    const double t0 = r.events.empty() ? 0.0 : r.events.back().event.time;
    r.timeline.push_back({t0, Phase::Collapsed, "single branch: " + detail::branch_description(r.formed.branches[0])});
  } else {
    r.timeline.push_back({r.events.back().event.time, Phase::Superposed, "no causal contact between firing detectors"});
  }
  std::stable_sort(r.timeline.begin(), r.timeline.end(), [](const auto& a, const auto& b) { return a.t < b.t; });

  for (double t : sc.probe_times) {
    ProbeRecord p;
    p.t = t;
    if (!superposition) {
      p.phase = Phase::Collapsed;
      p.state = r.collapse->state;
    } else if (!(t >= t_contact)) {
      p.phase = Phase::Superposed;
      p.state = r.formed;  // frozen: causally disconnected branches cannot decohere
    } else if (t < t_done || !r.collapse) {
      p.phase = Phase::Collapsing;
      p.state = r.formed;
    } else {
      p.phase = Phase::Collapsed;
      p.state = r.collapse->state;
    }
    r.probes.push_back(std::move(p));
  }
  return r;
}

struct TimescaleReport {
  double decoherence_s = 0.0;
  double transit_s = 0.0;
  double contact_s = 0.0;
  bool ordered = false;  // decoherence < transit < contact, strictly
  std::vector<std::string> flags;
};

/// Comparator on the three scales.
inline TimescaleReport timescale_report(double decoherence_s, double transit_s, double contact_s) {
  TimescaleReport r{decoherence_s, transit_s, contact_s, false, {}};
  if (!(decoherence_s < transit_s)) r.flags.push_back("decoherence time is not shorter than the transit time");
  if (!(transit_s < contact_s)) r.flags.push_back("transit time is not shorter than the contact delay");
  r.ordered = r.flags.empty();
  return r;
}

/// Scales for a scenario: the configured decoherence time, the longest
/// detector transit V_B^{1/3}/c and the contact delay after the first
/// absorption (all firing detectors, forced-absorb geometry).
inline TimescaleReport timescale_report(const EprScenario& sc) {
  const PreparedTwoPhoton prep(sc.photons, sc.detectors);
  double transit = 0.0;
  for (const auto& d : prep.detectors()) transit = std::max(transit, std::cbrt(d.volume));
  std::vector<LabelledEvent> events;
  for (int slot = 1; slot <= 2; ++slot) {
    for (Polarization p : {Polarization::One, Polarization::Two}) {
      events.push_back({sc.photons.mode(slot, p).detector_id, prep.event(slot, p)});
    }
  }
  double first = std::numeric_limits<double>::infinity();
  for (const auto& e : events) first = std::min(first, e.event.time);
  const auto schedule = contact_time(events, sc.contact_rule);
  return timescale_report(sc.decoherence_time_s, sc.units.to_seconds(transit),
                          sc.units.to_seconds(schedule.t_contact - first));
}

}  // namespace catcollapse
