#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "catcollapse/spacetime.hpp"
#include "catcollapse/rng.hpp"
#include "catcollapse/units.hpp"

using namespace catcollapse;

namespace {

/// Boost with velocity v (|v| < 1) applied to an event; test-side only.
SpacetimeEvent boost(const SpacetimeEvent& e, const Vec3& v) {
  const double v2 = dot(v, v);
  if (v2 == 0.0) return e;
  const double gamma = 1.0 / std::sqrt(1.0 - v2);
  const double vx = dot(v, e.position);
  SpacetimeEvent out;
  out.time = gamma * (e.time - vx);
  out.position = e.position + v * (((gamma - 1.0) * vx / v2) - gamma * e.time);
  return out;
}

}  // namespace

TEST(Interval, Trichotomy) {
  const SpacetimeEvent a{{1, 2, 3}, 4};
  EXPECT_EQ(interval(a, a), CausalStatus::Lightlike);
  EXPECT_EQ(interval(a, {{2, 2, 3}, 4}), CausalStatus::Spacelike);
  EXPECT_EQ(interval(a, {{1, 2, 3}, 5}), CausalStatus::Timelike);
  EXPECT_EQ(interval(a, {{4, 6, 3}, 9}), CausalStatus::Lightlike);
  EXPECT_EQ(interval(a, {{4, 6, 3}, 9.0 + 1e-9}), CausalStatus::Timelike);
}

TEST(Interval, SymmetricAndBoostInvariant) {
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    auto u = [&] { return 20.0 * rng.uniform() - 10.0; };
    const SpacetimeEvent a{{u(), u(), u()}, u()};
    const SpacetimeEvent b{{u(), u(), u()}, u()};
    ASSERT_EQ(interval(a, b), interval(b, a));
    const int axis = i % 3;
    const double speed = 1.8 * rng.uniform() - 0.9;
    Vec3 v;
    (axis == 0 ? v.x : axis == 1 ? v.y : v.z) = speed;
    const auto ab = boost(a, v);
    const auto bb = boost(b, v);
    const double s0 = interval_squared(a, b);
    const double s1 = interval_squared(ab, bb);
    ASSERT_NEAR(s1, s0, 1e-9 * std::max(1.0, std::abs(s0)));
    if (std::abs(s0) > 1e-6) {
      ASSERT_EQ(interval(ab, bb), interval(a, b));
    }
  }
}

TEST(ContactTime, TwoSimultaneousEvents) {
  const auto s = contact_time({{"A", {{0, 0, 0}, 2.0}}, {"B", {{3, 4, 0}, 2.0}}});
  EXPECT_EQ(s.t_contact, 7.0);
  ASSERT_EQ(s.entries.size(), 2u);
  for (const auto& e : s.entries) EXPECT_GE(e.time, 2.0);
}

TEST(ContactTime, SingleEventSentinelAndDuplicates) {
  const auto s = contact_time({{"A", {{0, 0, 0}, 0.0}}});
  EXPECT_TRUE(s.entries.empty());
  EXPECT_EQ(s.t_contact, std::numeric_limits<double>::infinity());
  EXPECT_FALSE(s.has_contact());
  EXPECT_THROW(contact_time({{"A", {}}, {"A", {{1, 0, 0}, 0}}}), InvalidArgument);
  EXPECT_THROW(contact_time({}), InvalidArgument);
}

TEST(ContactTime, ThreeDetectorsBruteForceMinimum) {
  const std::vector<LabelledEvent> ev{{"A", {{0, 0, 0}, 1.0}}, {"B", {{10, 0, 0}, 0.0}}, {"C", {{0, 7, 0}, 3.0}}};
  double brute = std::numeric_limits<double>::infinity();
  for (const auto& i : ev) {
    for (const auto& j : ev) {
      if (i.detector_id != j.detector_id) brute = std::min(brute, i.event.time + norm(i.event.position - j.event.position));
    }
  }
  EXPECT_EQ(contact_time(ev).t_contact, brute);
  EXPECT_EQ(brute, 8.0);
  EXPECT_EQ(contact_time(ev).entries.size(), 6u);
}

TEST(ContactTime, MutualRuleWaitsForBothDirections) {
  const std::vector<LabelledEvent> ev{{"A", {{0, 0, 0}, 0.0}}, {"B", {{5, 0, 0}, 2.0}}};
  EXPECT_EQ(contact_time(ev, ContactRule::OneWay).t_contact, 5.0);
  EXPECT_EQ(contact_time(ev, ContactRule::Mutual).t_contact, 7.0);
}

TEST(ContactTime, LabScaleAnchor) {
  const auto units = Units::from_length(1e-3);  // millimetres
  const auto s = contact_time({{"A", {{0, 0, 0}, 0.0}}, {"B", {{3, 0, 0}, 0.0}}});
  EXPECT_EQ(s.t_contact, 3.0);
  EXPECT_DOUBLE_EQ(units.to_seconds(s.t_contact), 3e-3 / kSpeedOfLight);
  EXPECT_NEAR(units.to_seconds(s.t_contact) * 1e12, 10.0, 0.01);
}
