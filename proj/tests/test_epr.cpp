#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "catcollapse/epr.hpp"
#include "fixtures.hpp"

using namespace catcollapse;

namespace {

std::set<std::string> fired(const JointOutcome& o) {
  std::set<std::string> s;
  for (const auto& [id, out] : o.outcomes) {
    if (out.kind == OutcomeKind::Absorb) s.insert(id);
  }
  return s;
}

bool bitwise_equal(const CatState& a, const CatState& b) {
  if (a.branches.size() != b.branches.size() || a.collapsed != b.collapsed) return false;
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    if (std::memcmp(&a.branches[i].amplitude, &b.branches[i].amplitude, sizeof(Complex)) != 0) return false;
  }
  return a == b;
}

}  // namespace

TEST(RunEpr, CatIsFrozenBeforeContact) {
  auto sc = fixture::ring_scenario();
  // Absorptions at t = 100; nearest pair D1-D2 is 100 sqrt 2 apart.
  sc.probe_times = {0.0, 100.0, 150.0, 100.0 + 100.0 * std::sqrt(2.0) - 1e-9, 1e6};
  const auto r = run_epr_scenario(sc, 3);
  ASSERT_EQ(r.formed.branches.size(), 2u);
  EXPECT_NEAR(r.contact.t_contact, 100.0 + 100.0 * std::sqrt(2.0), 1e-12);
  for (std::size_t i = 0; i + 1 < r.probes.size(); ++i) {
    EXPECT_EQ(r.probes[i].phase, Phase::Superposed);
    EXPECT_TRUE(bitwise_equal(r.probes[i].state, r.formed)) << r.probes[i].t;
  }
  ASSERT_TRUE(r.collapse.has_value());
  EXPECT_EQ(r.probes.back().phase, Phase::Collapsed);
  EXPECT_TRUE(r.probes.back().state.collapsed);
  EXPECT_EQ(r.probes.back().state, r.collapse->state);
}

TEST(RunEpr, PositiveSignSelectsFirstBranch) {
  const auto sc = fixture::ring_scenario();
  bool seen_plus = false, seen_minus = false;
  for (std::uint64_t seed = 0; seed < 40 && !(seen_plus && seen_minus); ++seed) {
    const auto r = run_epr_scenario(sc, seed);
    ASSERT_TRUE(r.collapse.has_value());
    if (r.spin_sign > 0) {
      seen_plus = true;
      EXPECT_EQ(r.branch(), 0);
      EXPECT_EQ(fired(r.collapse->outcome), (std::set<std::string>{"D1", "D3"}));
    } else {
      seen_minus = true;
      EXPECT_EQ(r.branch(), 1);
      EXPECT_EQ(fired(r.collapse->outcome), (std::set<std::string>{"D2", "D4"}));
    }
    EXPECT_TRUE(r.anticorrelated());
  }
  EXPECT_TRUE(seen_plus);
  EXPECT_TRUE(seen_minus);
}

TEST(RunEpr, TimelinePhasesInOrder) {
  const auto r = run_epr_scenario(fixture::ring_scenario(), 5);
  ASSERT_GE(r.timeline.size(), 3u);
  EXPECT_EQ(r.timeline.front().phase, Phase::Superposed);
  EXPECT_EQ(r.timeline.back().phase, Phase::Collapsed);
  for (std::size_t i = 1; i < r.timeline.size(); ++i) EXPECT_LE(r.timeline[i - 1].t, r.timeline[i].t);
  int collapsing = 0;
  for (const auto& e : r.timeline) collapsing += e.phase == Phase::Collapsing;
  EXPECT_EQ(collapsing, 1);
  EXPECT_EQ(r.events.size(), 4u);
}

TEST(RunEpr, DeterministicPerSeed) {
  auto sc = fixture::ring_scenario(FixedAbsorption{0.6, 0.1});
  sc.probe_times = {50.0, 500.0};
  for (std::uint64_t seed : {1u, 2u, 77u}) {
    const auto a = run_epr_scenario(sc, seed);
    const auto b = run_epr_scenario(sc, seed);
    EXPECT_EQ(a.formed, b.formed);
    EXPECT_EQ(a.branch(), b.branch());
    EXPECT_EQ(a.tail_average, b.tail_average);
    ASSERT_EQ(a.timeline.size(), b.timeline.size());
    for (std::size_t i = 0; i < a.timeline.size(); ++i) EXPECT_EQ(a.timeline[i].detail, b.timeline[i].detail);
  }
}

TEST(RunEpr, EnsembleSplitsEvenlyAndAnticorrelates) {
  const auto sc = fixture::ring_scenario();
  const int n = 1000;
  int first = 0, anti = 0;
  std::vector<JointOutcome> outcomes;
  for (int i = 0; i < n; ++i) {
    const auto r = run_epr_scenario(sc, 1000 + i);
    ASSERT_TRUE(r.collapse.has_value()) << "seed " << 1000 + i;
    first += r.branch() == 0;
    anti += r.anticorrelated();
    outcomes.push_back(r.collapse->outcome);
  }
  EXPECT_NEAR(static_cast<double>(first) / n, 0.5, 3.0 * std::sqrt(0.25 / n));
  EXPECT_EQ(anti, n);
  const auto stats = correlation_statistics(outcomes);
  EXPECT_EQ(stats.same_polarization_runs, 0u);
  EXPECT_EQ(stats.anticorrelation_fraction(), 1.0);
}

TEST(RunEpr, UndecidedPolicies) {
  auto sc = fixture::ring_scenario();
  sc.spinboson = fixture::fast_spinboson(0.0);  // uncoupled: the cat is a field eigenstate
  sc.undecided_policy = UndecidedPolicy::Report;
  sc.probe_times = {1e6};
  auto r = run_epr_scenario(sc, 9);
  EXPECT_TRUE(r.undecided);
  EXPECT_EQ(r.attempts, 1);
  EXPECT_FALSE(r.collapse.has_value());
  EXPECT_EQ(r.branch(), -1);
  EXPECT_EQ(r.probes[0].phase, Phase::Collapsing);
  EXPECT_EQ(r.probes[0].state, r.formed);
  sc.undecided_policy = UndecidedPolicy::Retry;
  sc.max_retries = 3;
  r = run_epr_scenario(sc, 9);
  EXPECT_TRUE(r.undecided);
  EXPECT_EQ(r.attempts, 3);
}

TEST(RunEpr, NonSpacelikeScenarioIsRejected) {
  auto sc = fixture::ring_scenario();
  sc.photons.modes[1][1].emission_time = 500.0;  // D3 fires inside D1's future light cone
  EXPECT_THROW(run_epr_scenario(sc, 1), ScenarioRejected);
  auto lightlike = fixture::ring_scenario();
  lightlike.detectors[2].position = {-300.0, 0.0, 0.0};
  lightlike.photons.modes[1][1].emission_time = -200.0;  // D3 event (300, 100): |dr| = 400 vs dt = 0
  EXPECT_NO_THROW(run_epr_scenario(lightlike, 1));
  lightlike.photons.modes[1][1].emission_time = 200.0;   // dt = 400 = |dr|
  EXPECT_THROW(run_epr_scenario(lightlike, 1), ScenarioRejected);
}

TEST(RunEpr, SingleBranchCollapsesImmediately) {
  auto sc = fixture::ring_scenario();
  CoefficientMatrix d{};
  d[0][0] = 1.0;
  sc.photons.D = d;
  sc.probe_times = {0.0};
  const auto r = run_epr_scenario(sc, 2);
  ASSERT_EQ(r.formed.branches.size(), 1u);
  ASSERT_TRUE(r.collapse.has_value());
  EXPECT_EQ(r.attempts, 0);
  EXPECT_EQ(r.probes[0].phase, Phase::Collapsed);
  EXPECT_EQ(fired(r.collapse->outcome), (std::set<std::string>{"D1", "D4"}));
}

TEST(TimescaleReport, DefaultScalesAreOrdered) {
  const auto r = timescale_report(1e-15, 1e-12, 1e-11);
  EXPECT_TRUE(r.ordered);
  EXPECT_TRUE(r.flags.empty());
}

TEST(TimescaleReport, ViolationsAreFlagged) {
  EXPECT_FALSE(timescale_report(1e-15, 1e-11, 1e-12).ordered);
  EXPECT_FALSE(timescale_report(1e-12, 1e-12, 1e-11).ordered);
  EXPECT_FALSE(timescale_report(1e-15, 1e-11, 1e-11).ordered);
  EXPECT_EQ(timescale_report(1e-11, 1e-12, 1e-13).flags.size(), 2u);
}

TEST(TimescaleReport, LabScaleScenario) {
  // 1 internal length = 1 um; detectors 1.5 mm from the source, 1 um^3 x 1e6.
  auto sc = fixture::ring_scenario();
  sc.units = Units::from_length(1e-6);
  sc.detectors = fixture::ring_detectors(1500.0, FixedAbsorption{1.0, 0.0});
  for (auto& d : sc.detectors) d.volume = 27.0e6;  // (300 um)^3 -> 1 ps transit
  const auto r = timescale_report(sc);
  EXPECT_NEAR(r.transit_s, 300e-6 / kSpeedOfLight, 1e-18);
  EXPECT_NEAR(r.contact_s, 1500e-6 * std::sqrt(2.0) / kSpeedOfLight, 1e-18);
  EXPECT_TRUE(r.ordered);
}
