#include "wdn/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "wdn/error.hpp"

namespace wdn {

double StepOutputs::energy() const {
  double e = 0.0;
  for (double v : energies) e += v;
  return e;
}

bool StepOutputs::any_clamped() const {
  return std::any_of(clamped.begin(), clamped.end(), [](char c) { return c != 0; });
}

namespace {

void check_speed(const PumpStationSpec& station, double speed) {
  if (!(speed >= 0.0 && speed <= 1.0))
    throw ValidationError("station '" + station.id + "': speed " + std::to_string(speed) + " outside [0,1]");
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what + " in simulator step");
}

}  // namespace

double pump_power(const PumpStationSpec& station, double speed) {
  check_speed(station, speed);
  return station.rated_power * speed * speed * speed;
}

double pump_flow(const PumpStationSpec& station, double speed) {
  check_speed(station, speed);
  return station.max_flow * speed;
}

std::pair<SystemState, StepOutputs> step(const NetworkTopology& topology, const SystemState& state,
                                         std::span<const double> action, std::span<const double> demands,
                                         double tariff) {
  const std::size_t n_tanks = topology.tank_count();
  const std::size_t n_stations = topology.station_count();
  if (state.t < 0 || state.t >= kStepsPerDay) throw ValidationError("step called at t outside [0,96)");
  if (state.levels.size() != n_tanks) throw ValidationError("state level count does not match the network");
  if (action.size() != n_stations) throw ValidationError("action size does not match the station count");
  if (demands.size() != topology.zone_count()) throw ValidationError("demand size does not match the zone count");
  if (!(tariff >= 0.0) || !std::isfinite(tariff)) throw ValidationError("tariff must be finite and >= 0");

  StepOutputs out;
  out.flows.resize(n_stations);
  out.powers.resize(n_stations);
  out.energies.resize(n_stations);
  out.clamped.assign(n_tanks, 0);
  out.tariff = tariff;

  std::vector<double> net(n_tanks, 0.0);  // m³/h
  for (std::size_t s = 0; s < n_stations; ++s) {
    const auto& st = topology.stations[s];
    const double flow = pump_flow(st, action[s]);
    const double power = pump_power(st, action[s]);
    out.flows[s] = flow;
    out.powers[s] = power;
    out.energies[s] = power * topology.dt_hours;
    for (const auto& f : st.fills) net[f.tank] += f.fraction * flow;
    if (st.draws_from) net[*st.draws_from] -= flow;
  }
  for (std::size_t z = 0; z < topology.zone_count(); ++z) {
    const double d = demands[z];
    if (!(d >= 0.0) || !std::isfinite(d)) throw ValidationError("demand must be finite and >= 0");
    net[topology.zones[z].served_by] -= d;
  }

  SystemState next;
  next.t = state.t + 1;
  next.levels.resize(n_tanks);
  for (std::size_t i = 0; i < n_tanks; ++i) {
    const auto& tank = topology.tanks[i];
    check_finite(state.levels[i], "level");
    const double raw = state.levels[i] + topology.dt_hours * net[i] / tank.surface_area;
    check_finite(raw, "level");
    if (raw < 0.0) {
      next.levels[i] = 0.0;
      out.clamped[i] = 1;
    } else if (raw > tank.level_max) {
      next.levels[i] = tank.level_max;
      out.clamped[i] = 1;
    } else {
      next.levels[i] = raw;
    }
  }
  double cost = 0.0;
  for (double e : out.energies) cost += e * tariff;
  check_finite(cost, "cost");
  out.cost = cost;
  return {std::move(next), std::move(out)};
}

Trajectory simulate(const NetworkTopology& topology, std::span<const double> initial_levels,
                    const ControlSchedule& schedule, const DemandSet& demands) {
  if (schedule.size() != static_cast<std::size_t>(kStepsPerDay))
    throw ValidationError("control schedule must have exactly 96 action vectors");
  if (initial_levels.size() != topology.tank_count())
    throw ValidationError("initial level count does not match the network");
  demands.validate(topology.zone_count());

  Trajectory traj;
  traj.states.reserve(kStepsPerDay + 1);
  traj.outputs.reserve(kStepsPerDay);
  traj.states.push_back({0, std::vector<double>(initial_levels.begin(), initial_levels.end())});
  std::vector<double> d(topology.zone_count());
  for (int t = 0; t < kStepsPerDay; ++t) {
    for (std::size_t z = 0; z < d.size(); ++z) d[z] = demands.per_zone[z][static_cast<std::size_t>(t)];
    auto [next, out] = step(topology, traj.states.back(), schedule[static_cast<std::size_t>(t)], d,
                            topology.tariff.at(t));
    traj.states.push_back(std::move(next));
    traj.outputs.push_back(std::move(out));
  }
  return traj;
}

Trajectory shift_predict(const Trajectory& base, std::span<const double> delta, int first_state) {
  Trajectory out = base;
  for (std::size_t k = static_cast<std::size_t>(std::max(first_state, 0)); k < out.states.size(); ++k) {
    auto& levels = out.states[k].levels;
    for (std::size_t i = 0; i < levels.size() && i < delta.size(); ++i) levels[i] += delta[i];
  }
  return out;
}

bool shift_valid(const NetworkTopology& topology, const Trajectory& base, std::span<const double> delta,
                 int first_state) {
  const auto first = static_cast<std::size_t>(std::max(first_state, 0));
  for (std::size_t k = first; k < base.outputs.size(); ++k)
    if (base.outputs[k].any_clamped()) return false;
  for (std::size_t k = first; k < base.states.size(); ++k) {
    const auto& levels = base.states[k].levels;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const double shifted = levels[i] + (i < delta.size() ? delta[i] : 0.0);
      if (!(shifted > 0.0 && shifted < topology.tanks[i].level_max)) return false;
    }
  }
  return true;
}

std::string trajectory_to_csv(const Trajectory& trajectory, const ControlSchedule& schedule,
                              const DemandSet& demands) {
  HistoryArchive rows;
  for (int t = 0; t < static_cast<int>(trajectory.outputs.size()); ++t) {
    HistorySnapshot s;
    s.day = 0;
    s.t = t;
    s.levels = trajectory.states[static_cast<std::size_t>(t)].levels;
    s.actions = schedule.at(static_cast<std::size_t>(t));
    s.powers = trajectory.outputs[static_cast<std::size_t>(t)].powers;
    s.demands = demands.at(t);
    s.tariff = trajectory.outputs[static_cast<std::size_t>(t)].tariff;
    rows.snapshots.push_back(std::move(s));
  }
  // Append the cost column to the history layout.
  const std::string base = history_to_csv(rows);
  std::string out;
  std::size_t pos = 0;
  int row = -1;
  while (pos < base.size()) {
    const auto eol = base.find('\n', pos);
    out.append(base, pos, eol - pos);
    out += row < 0 ? std::string(",cost") : "," + format_double(trajectory.outputs[static_cast<std::size_t>(row)].cost);
    out += '\n';
    pos = eol + 1;
    ++row;
  }
  return out;
}

}  // namespace wdn
