#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wdn/model.hpp"
#include "wdn/simulator.hpp"

namespace wdn {

/// Default imperfection of the synthetic historical operator. Tuned so that
/// roughly 30% of generated days contain at least one boundary violation.
inline constexpr double kDefaultImperfection = 0.5;

/// Per-station hysteresis settings in force for one operating day.
struct HysteresisSettings {
  std::vector<double> trigger;  // m, pump starts when primary tank falls below
  std::vector<double> release;  // m, pump stops when primary tank rises above
  std::vector<double> duty;     // speed fraction while running
};

/// The synthetic "historical operator": a hysteresis rule whose settings
/// drift from day to day. With imperfection 0 the settings sit at the
/// nominal margins inside [lb, ub]; larger values push triggers below lb,
/// releases above ub and duty speeds down.
struct RuleBasedOperator {
  double imperfection = kDefaultImperfection;
  std::uint64_t seed = 0;

  static constexpr double kTriggerMargin = 0.35;  // fraction of band above lb
  static constexpr double kReleaseMargin = 0.35;  // fraction of band below ub
  static constexpr double kNominalDuty = 0.9;

  HysteresisSettings settings_for(const NetworkTopology& topology, std::uint64_t day_key) const;
  HysteresisSettings nominal(const NetworkTopology& topology) const;

  std::string to_json() const;
  static RuleBasedOperator from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RuleBasedOperator load(const std::filesystem::path& path);
};

/// Stateful closed-loop hysteresis controller over one or more days.
class HysteresisController {
 public:
  HysteresisController(const NetworkTopology& topology, HysteresisSettings settings,
                       std::span<const double> initial_levels);

  ActionVector act(std::span<const double> levels);
  void set_settings(HysteresisSettings settings) { settings_ = std::move(settings); }

 private:
  const NetworkTopology* topology_;
  HysteresisSettings settings_;
  std::vector<char> running_;
};

/// Runs the hysteresis controller closed-loop for one day.
struct ClosedLoopRun {
  ControlSchedule schedule;
  Trajectory trajectory;
};
ClosedLoopRun run_hysteresis_day(const NetworkTopology& topology, const HysteresisSettings& settings,
                                 std::span<const double> initial_levels, const DemandSet& demands);

/// Simulates `days` consecutive days under the rule-based operator.
HistoryArchive generate_history(const NetworkTopology& topology, int days, std::uint64_t seed,
                                const RuleBasedOperator& op);
/// Uses an operator seeded from `seed` at the default imperfection.
HistoryArchive generate_history(const NetworkTopology& topology, int days, std::uint64_t seed);

}  // namespace wdn
