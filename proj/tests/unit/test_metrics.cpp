#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "wdn/error.hpp"
#include "wdn/evaluation.hpp"
#include "wdn/metrics.hpp"

using namespace wdn;

namespace {

// One-tank trajectory, every state at `fill` except the listed overrides.
Trajectory levels_trajectory(double fill, std::vector<std::pair<int, double>> overrides) {
  Trajectory t;
  for (int k = 0; k <= 96; ++k) t.states.push_back({k, {fill}});
  for (auto [k, v] : overrides) t.states[k].levels[0] = v;
  t.outputs.resize(96);
  return t;
}

EvaluationResult single(std::string label, double area, long count, double cost, std::uint64_t pool = 1) {
  EvaluationResult r;
  r.label = std::move(label);
  r.pool_id = pool;
  r.episodes.push_back({area, count, cost});
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("area outside boundary examples") {
  const std::vector<LevelBounds> b{{2.5, 4.0}};
  CHECK(area_outside_boundary(levels_trajectory(3.0, {}), b, 0.25) == 0.0);
  CHECK(area_outside_boundary(levels_trajectory(3.0, {{10, 2.0}}), b, 0.25) == doctest::Approx(0.125));
  CHECK(area_outside_boundary(levels_trajectory(3.0, {{1, 2.0}, {2, 3.5}, {3, 4.2}}), b, 0.25) ==
        doctest::Approx(0.175));
  // the initial state is not scored
  CHECK(area_outside_boundary(levels_trajectory(3.0, {{0, 0.0}}), b, 0.25) == 0.0);
}

TEST_CASE("violation counts") {
  const std::vector<LevelBounds> b{{2.5, 4.0}};
  CHECK(violation_count(levels_trajectory(3.0, {}), b) == 0);
  std::vector<std::pair<int, double>> eight;
  for (int k = 40; k < 48; ++k) eight.push_back({k, 5.0});
  CHECK(violation_count(levels_trajectory(3.0, eight), b) == 8);

  Trajectory two;
  for (int k = 0; k <= 96; ++k) two.states.push_back({k, {3.0, 3.0}});
  two.states[5].levels = {1.0, 9.0};
  const std::vector<LevelBounds> b2{{2.5, 4.0}, {2.5, 4.0}};
  CHECK(violation_count(two, b2) == 2);
}

TEST_CASE("episode cost: 200 kW for a day at 0.1 is 480") {
  auto topo = testing::one_tank(1000.0, 400.0, 200.0);
  topo.tariff.values.assign(96, 0.1);
  const auto traj = simulate(topo, std::vector<double>{3.0}, testing::constant_schedule(1, 1.0),
                             testing::flat_demand(topo, 400.0));
  CHECK(episode_cost(traj) == doctest::Approx(480.0).epsilon(1e-12));
  const auto off = simulate(topo, std::vector<double>{3.0}, testing::constant_schedule(1, 0.0),
                            testing::flat_demand(topo, 0.0));
  CHECK(episode_cost(off) == 0.0);
}

TEST_CASE("mape") {
  const auto ref = levels_trajectory(3.0, {{4, 2.0}});
  CHECK(mape(ref, ref).mean == 0.0);
  auto scaled = ref;
  for (auto& s : scaled.states) s.levels[0] *= 1.1;
  CHECK(mape(scaled, ref).mean == doctest::Approx(10.0));
  CHECK(mape(scaled, ref).per_tank.size() == 1);
  auto shorter = ref;
  shorter.states.pop_back();
  CHECK_THROWS_AS(mape(shorter, ref), ValidationError);
}

TEST_CASE("shift prediction vs re-simulation has zero mape") {
  const auto topo = generate_synthetic_network(42);
  const std::vector<double> delta(6, 0.05);
  std::mt19937_64 rng(17);
  Scenario sc;
  ControlSchedule sched;
  Trajectory base;
  int tries = 0;
  do {
    sc = sample_scenario(topo, rng());
    sched = testing::random_schedule(6, rng, 0.3, 0.7);
    base = simulate(topo, sc.initial_levels, sched, sc.demands);
  } while (!shift_valid(topo, base, delta) && ++tries < 500);
  REQUIRE(shift_valid(topo, base, delta));
  std::vector<double> l0 = sc.initial_levels;
  for (auto& v : l0) v += 0.05;
  CHECK(mape(shift_predict(base, delta), simulate(topo, l0, sched, sc.demands)).mean <= 1e-9);
}

TEST_CASE("properties on random trajectories") {
  const auto topo = generate_synthetic_network(42);
  const auto bounds = topo.bounds();
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const auto sc = sample_scenario(topo, rng());
    const auto traj = simulate(topo, sc.initial_levels, testing::random_schedule(6, rng), sc.demands);
    const double area = area_outside_boundary(traj, bounds, 0.25);
    CHECK((area == 0.0) == (violation_count(traj, bounds) == 0));
    // additivity over a split point
    for (int cut : {0, 17, 50, 96})
      CHECK(area_outside_boundary(traj, bounds, 0.25, 0, cut) + area_outside_boundary(traj, bounds, 0.25, cut, 96) ==
            doctest::Approx(area).epsilon(1e-12));
    // widening the band never adds area
    auto wide = bounds;
    for (auto& b : wide) {
      b.lower -= 0.3;
      b.upper += 0.3;
    }
    CHECK(area_outside_boundary(traj, wide, 0.25) <= area);
  }
}

TEST_CASE("compare") {
  SUBCASE("table rounding examples") {
    const auto ref = single("historical", 51475.0, 1185, 100.0);
    const auto table = compare({single("agent", 5314.0, 239, 99.8)}, ref);
    REQUIRE(table.size() == 2);
    CHECK(table[0].label == "historical");
    CHECK(*table[0].area_improvement_pct == 0.0);
    CHECK(*table[1].area_improvement_pct == doctest::Approx(89.676).epsilon(1e-4));
    CHECK(std::round(*table[1].area_improvement_pct) == 90.0);
    CHECK(*table[1].count_improvement_pct == doctest::Approx(79.83).epsilon(1e-3));
    CHECK(std::round(*table[1].count_improvement_pct) == 80.0);
    CHECK(*table[1].cost_delta_pct == doctest::Approx(-0.2));
  }
  SUBCASE("identity is zero and swapping flips the sign") {
    const auto a = single("a", 10.0, 5, 100.0), b = single("b", 4.0, 2, 120.0);
    const auto t = compare({a}, a);
    CHECK(*t[1].area_improvement_pct == 0.0);
    CHECK(*t[1].cost_delta_pct == 0.0);
    const auto ab = compare({b}, a), ba = compare({a}, b);
    CHECK(*ab[1].area_improvement_pct > 0.0);
    CHECK(*ba[1].area_improvement_pct < 0.0);
    CHECK(*ab[1].cost_delta_pct > 0.0);
    CHECK(*ba[1].cost_delta_pct < 0.0);
  }
  SUBCASE("zero reference gives n/a") {
    const auto t = compare({single("x", 1.0, 1, 5.0)}, single("ref", 0.0, 0, 5.0));
    CHECK_FALSE(t[1].area_improvement_pct.has_value());
    const auto csv = comparison_to_csv(t);
    CHECK(csv.find("n/a") != std::string::npos);
    CHECK(comparison_to_json(t).find("null") != std::string::npos);
  }
  SUBCASE("mismatched pools") {
    CHECK_THROWS_AS(compare({single("x", 1, 1, 1, 2)}, single("ref", 1, 1, 1, 1)), ValidationError);
  }
}

}  // TEST_SUITE
