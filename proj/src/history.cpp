#include "wdn/history.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "wdn/error.hpp"
#include "wdn/random.hpp"

namespace wdn {

HysteresisSettings RuleBasedOperator::nominal(const NetworkTopology& topology) const {
  HysteresisSettings s;
  for (const auto& st : topology.stations) {
    const auto& tank = topology.tanks[st.primary_tank()];
    s.trigger.push_back(tank.lower_bound + kTriggerMargin * tank.band());
    s.release.push_back(tank.upper_bound - kReleaseMargin * tank.band());
    s.duty.push_back(kNominalDuty);
  }
  return s;
}

HysteresisSettings RuleBasedOperator::settings_for(const NetworkTopology& topology, std::uint64_t day_key) const {
  HysteresisSettings s = nominal(topology);
  if (imperfection <= 0.0) return s;
  Rng rng(derive_seed({stream::kHistory, seed, day_key}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  // Day severity: most days are benign, a tail of days is badly tuned.
  const double severity = imperfection * expo(rng);
  for (std::size_t k = 0; k < topology.station_count(); ++k) {
    const auto& tank = topology.tanks[topology.stations[k].primary_tank()];
    const double u1 = unit(rng);
    const double u2 = unit(rng);
    const double u3 = unit(rng);
    s.trigger[k] -= 0.5 * severity * u1 * tank.band();
    s.release[k] += 0.5 * severity * u2 * tank.band();
    s.duty[k] *= 1.0 - 0.4 * std::min(1.0, severity) * u3;
    s.trigger[k] = std::max(s.trigger[k], 0.05);
    s.release[k] = std::min(s.release[k], tank.level_max - 0.05);
  }
  return s;
}

std::string RuleBasedOperator::to_json() const {
  nlohmann::json doc{{"kind", "hysteresis"},
                     {"imperfection", imperfection},
                     {"seed", seed},
                     {"trigger_margin", kTriggerMargin},
                     {"release_margin", kReleaseMargin},
                     {"nominal_duty", kNominalDuty}};
  return doc.dump(2) + "\n";
}

RuleBasedOperator RuleBasedOperator::from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    RuleBasedOperator op;
    op.imperfection = doc.at("imperfection").get<double>();
    op.seed = doc.at("seed").get<std::uint64_t>();
    if (!(op.imperfection >= 0.0)) throw ValidationError("operator imperfection must be >= 0");
    return op;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("operator JSON: ") + e.what());
  }
}

void RuleBasedOperator::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json()); }

RuleBasedOperator RuleBasedOperator::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

HysteresisController::HysteresisController(const NetworkTopology& topology, HysteresisSettings settings,
                                           std::span<const double> initial_levels)
    : topology_(&topology), settings_(std::move(settings)), running_(topology.station_count(), 0) {
  for (std::size_t k = 0; k < running_.size(); ++k) {
    const double level = initial_levels[topology.stations[k].primary_tank()];
    running_[k] = level < 0.5 * (settings_.trigger[k] + settings_.release[k]) ? 1 : 0;
  }
}

ActionVector HysteresisController::act(std::span<const double> levels) {
  ActionVector a(running_.size());
  for (std::size_t k = 0; k < running_.size(); ++k) {
    const double level = levels[topology_->stations[k].primary_tank()];
    if (level < settings_.trigger[k]) running_[k] = 1;
    else if (level > settings_.release[k]) running_[k] = 0;
    a[k] = running_[k] ? settings_.duty[k] : 0.0;
  }
  return a;
}

ClosedLoopRun run_hysteresis_day(const NetworkTopology& topology, const HysteresisSettings& settings,
                                 std::span<const double> initial_levels, const DemandSet& demands) {
  HysteresisController ctl(topology, settings, initial_levels);
  ClosedLoopRun run;
  run.trajectory.states.push_back({0, std::vector<double>(initial_levels.begin(), initial_levels.end())});
  for (int t = 0; t < kStepsPerDay; ++t) {
    auto a = ctl.act(run.trajectory.states.back().levels);
    const auto d = demands.at(t);
    auto [next, out] = step(topology, run.trajectory.states.back(), a, d, topology.tariff.at(t));
    run.schedule.push_back(std::move(a));
    run.trajectory.states.push_back(std::move(next));
    run.trajectory.outputs.push_back(std::move(out));
  }
  return run;
}

HistoryArchive generate_history(const NetworkTopology& topology, int days, std::uint64_t seed,
                                const RuleBasedOperator& op) {
  if (days < 1) throw ValidationError("history needs at least one day");
  topology.validate();
  HistoryArchive archive;
  archive.snapshots.reserve(static_cast<std::size_t>(days) * kStepsPerDay);

  std::vector<double> levels = topology.initial_levels();
  HysteresisController ctl(topology, op.settings_for(topology, 0), levels);
  for (int d = 0; d < days; ++d) {
    ctl.set_settings(op.settings_for(topology, static_cast<std::uint64_t>(d)));
    const DemandSet demands = generate_demands(topology, derive_seed({stream::kHistory, seed, 0xd,
                                                                      static_cast<std::uint64_t>(d)}));
    SystemState state{0, levels};
    for (int t = 0; t < kStepsPerDay; ++t) {
      const auto a = ctl.act(state.levels);
      const auto dem = demands.at(t);
      auto [next, out] = step(topology, state, a, dem, topology.tariff.at(t));
      archive.snapshots.push_back({d, t, state.levels, a, out.powers, dem, topology.tariff.at(t)});
      state = std::move(next);
    }
    levels = state.levels;
  }
  return archive;
}

HistoryArchive generate_history(const NetworkTopology& topology, int days, std::uint64_t seed) {
  RuleBasedOperator op;
  op.seed = seed;
  return generate_history(topology, days, seed, op);
}

}  // namespace wdn
