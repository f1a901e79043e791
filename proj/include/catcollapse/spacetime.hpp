#pragma once

// Flat-spacetime bookkeeping with c = 1: interval classification between
// events and light-cone contact times among detectors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "catcollapse/errors.hpp"
#include "catcollapse/vec3.hpp"

namespace catcollapse {

struct SpacetimeEvent {
  Vec3 position;
  double time = 0.0;

  [[nodiscard]] bool is_finite() const noexcept { return catcollapse::is_finite(position) && std::isfinite(time); }
  friend bool operator==(const SpacetimeEvent&, const SpacetimeEvent&) = default;
};

enum class CausalStatus { Spacelike, Lightlike, Timelike };

inline std::string_view to_string(CausalStatus s) noexcept {
  switch (s) {
    case CausalStatus::Spacelike: return "spacelike";
    case CausalStatus::Lightlike: return "lightlike";
    case CausalStatus::Timelike: return "timelike";
  }
  return "?";
}

inline constexpr double kLightlikeTolerance = 1e-12;

/// Classify the separation of two events. Equal spatial and temporal
/// separations (within 1e-12 relative) count as lightlike, including e1 == e2.
inline CausalStatus interval(const SpacetimeEvent& e1, const SpacetimeEvent& e2) {
  const double dr = norm(e1.position - e2.position);
  const double dt = std::abs(e1.time - e2.time);
  const double scale = std::max(dr, dt);
  if (std::abs(dr - dt) <= kLightlikeTolerance * scale) return CausalStatus::Lightlike;
  return dr > dt ? CausalStatus::Spacelike : CausalStatus::Timelike;
}

/// Invariant dt^2 - |dr|^2 (positive for timelike separation).
inline double interval_squared(const SpacetimeEvent& e1, const SpacetimeEvent& e2) noexcept {
  const Vec3 d = e1.position - e2.position;
  const double dt = e1.time - e2.time;
  return dt * dt - dot(d, d);
}

struct LabelledEvent {
  std::string detector_id;
  SpacetimeEvent event;
};

enum class ContactRule {
  OneWay,  // earliest signal from either detector reaching the other
  Mutual,  // both detectors have received a signal from each other
};

struct ContactSchedule {
  struct Entry {
    std::string from;
    std::string to;
    double time = 0.0;  // t_from + |r_from - r_to|
  };
  std::vector<Entry> entries;  // ordered pairs i != j, in input order
  double t_contact = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool has_contact() const noexcept { return std::isfinite(t_contact); }
};

/// Light-cone arrival times between every ordered pair of detector events.
/// A single event has no partner, so t_contact stays at +infinity.
inline ContactSchedule contact_time(const std::vector<LabelledEvent>& events, ContactRule rule = ContactRule::OneWay) {
  if (events.empty()) throw InvalidArgument("contact_time needs at least one event");
  std::set<std::string> seen;
  for (const auto& e : events) {
    if (!e.event.is_finite()) throw InvalidArgument("event at detector " + e.detector_id + " is not finite");
    if (!seen.insert(e.detector_id).second) throw InvalidArgument("duplicate detector id " + e.detector_id);
  }
  ContactSchedule s;
  const std::size_t n = events.size();
  std::vector<double> arrival(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double t = events[i].event.time + norm(events[i].event.position - events[j].event.position);
      arrival[i * n + j] = t;
      s.entries.push_back({events[i].detector_id, events[j].detector_id, t});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = arrival[i * n + j];
      const double b = arrival[j * n + i];
      const double pair = rule == ContactRule::OneWay ? std::min(a, b) : std::max(a, b);
      s.t_contact = std::min(s.t_contact, pair);
    }
  }
  return s;
}

}  // namespace catcollapse
