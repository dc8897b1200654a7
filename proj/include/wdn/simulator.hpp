#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wdn/model.hpp"

namespace wdn {

struct SystemState {
  int t = 0;
  std::vector<double> levels;  // m

  bool operator==(const SystemState&) const = default;
};

/// One speed fraction in [0,1] per station.
using ActionVector = std::vector<double>;

/// 96 action vectors covering one day.
using ControlSchedule = std::vector<ActionVector>;

struct StepOutputs {
  std::vector<double> flows;     // m³/h per station
  std::vector<double> powers;    // kW per station
  std::vector<double> energies;  // kWh per station
  double tariff = 0.0;           // currency/kWh applied to this step
  double cost = 0.0;             // currency
  std::vector<char> clamped;     // per tank, 1 when the physical limit bound

  double energy() const;
  bool any_clamped() const;
  bool operator==(const StepOutputs&) const = default;
};

struct Trajectory {
  std::vector<SystemState> states;    // t = 0..96
  std::vector<StepOutputs> outputs;   // steps 0..95

  double level(int t, std::size_t tank) const { return states[static_cast<std::size_t>(t)].levels[tank]; }
  bool operator==(const Trajectory&) const = default;
};

/// Cubic affinity law; throws ValidationError when speed is outside [0,1].
double pump_power(const PumpStationSpec& station, double speed);
/// Linear affinity law.
double pump_flow(const PumpStationSpec& station, double speed);

/// Advances one step of the tank mass balance. `demands` holds one value per
/// zone for the current step.
std::pair<SystemState, StepOutputs> step(const NetworkTopology& topology, const SystemState& state,
                                         std::span<const double> action, std::span<const double> demands,
                                         double tariff);

Trajectory simulate(const NetworkTopology& topology, std::span<const double> initial_levels,
                    const ControlSchedule& schedule, const DemandSet& demands);

/// Offsets every state's levels by `delta` from `first_state` onward; outputs
/// are left untouched.
Trajectory shift_predict(const Trajectory& base, std::span<const double> delta, int first_state = 0);

/// True iff `base` has no clamped step at or after `first_state` and every
/// shifted level from `first_state` on stays strictly inside (0, level_max).
bool shift_valid(const NetworkTopology& topology, const Trajectory& base, std::span<const double> delta,
                 int first_state = 0);

/// Same column convention as the history CSV plus a per-step cost column.
/// Row t carries state t, action t and step-t outputs; the terminal state is
/// not exported.
std::string trajectory_to_csv(const Trajectory& trajectory, const ControlSchedule& schedule,
                              const DemandSet& demands);

}  // namespace wdn
