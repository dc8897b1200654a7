#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wdn/model.hpp"
#include "wdn/simulator.hpp"

namespace wdn::testing {

// One tank, one pump filling it, one zone drawing 200 m³/h.
inline NetworkTopology one_tank(double area = 1000.0, double max_flow = 400.0, double rated = 200.0) {
  NetworkTopology t;
  t.tanks.push_back({"T1", area, 10.0, 2.5, 4.0, 3.0});
  PumpStationSpec p;
  p.id = "P1";
  p.max_flow = max_flow;
  p.rated_power = rated;
  p.fills = {{0, 1.0}};
  t.stations.push_back(p);
  t.zones.push_back({"Z1", 0, 200.0, 0.0, 0.0, 0.0});
  t.tariff.values.assign(kStepsPerDay, 0.1);
  t.tariff.values[0] = 0.05;
  return t;
}

inline DemandSet flat_demand(const NetworkTopology& t, double v) {
  DemandSet d;
  d.per_zone.assign(t.zone_count(), std::vector<double>(kStepsPerDay, v));
  return d;
}

inline ControlSchedule constant_schedule(std::size_t stations, double speed) {
  return ControlSchedule(kStepsPerDay, ActionVector(stations, speed));
}

inline ControlSchedule random_schedule(std::size_t stations, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ControlSchedule s(kStepsPerDay, ActionVector(stations));
  for (auto& a : s)
    for (double& v : a) v = u(rng);
  return s;
}

// Unique scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("wdn_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace wdn::testing
