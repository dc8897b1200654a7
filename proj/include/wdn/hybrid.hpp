#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wdn/evaluation.hpp"
#include "wdn/query.hpp"

namespace wdn {

/// Maximal run of steps [start, end) whose resulting state has some tank
/// outside its band. Step k produces state k+1.
struct ViolationWindow {
  int start = 0;
  int end = 0;
  std::vector<char> tanks;  // 1 where the tank is outside at some step in the window

  bool operator==(const ViolationWindow&) const = default;
};

std::vector<ViolationWindow> detect_violations(const Trajectory& traj, std::span<const LevelBounds> bounds);

enum class Strategy { UntargetedEarly, UntargetedMidday, Targeted, DynamicEnd, DynamicStartEnd };
std::string to_string(Strategy s);
inline constexpr Strategy kAllStrategies[] = {Strategy::UntargetedEarly, Strategy::UntargetedMidday, Strategy::Targeted,
                                              Strategy::DynamicEnd, Strategy::DynamicStartEnd};

struct InjectionPlan {
  Strategy strategy = Strategy::Targeted;
  int start = 0;
  int end = 0;  // exclusive

  void validate() const;
};

/// A baseline-violating day: the query recommendation replayed open-loop.
struct HybridCase {
  std::string id;
  Scenario scenario;
  int matched_day = 0;
  ControlSchedule baseline_schedule;
  Trajectory baseline;
};

HybridCase make_case(const NetworkTopology& topology, std::string id, Scenario scenario,
                     const ControlSchedule& baseline_schedule, int matched_day = 0);

struct InjectionRun {
  ControlSchedule schedule;
  Trajectory trajectory;
};

/// Policy mean actions on [start, end) computed from the simulated state,
/// baseline actions elsewhere. Frame-skip policies re-decide every W steps
/// counted from `start`.
InjectionRun inject(const NetworkTopology& topology, const HybridCase& c, const InjectionPlan& plan,
                    const PolicyController& policy);

struct HybridResult {
  std::string case_id;
  InjectionPlan plan;
  double baseline_during = 0.0;  // m·h over steps [start, end)
  double hybrid_during = 0.0;
  double baseline_post = 0.0;  // m·h over steps [end, 96)
  double hybrid_post = 0.0;
  std::optional<double> during_pct;  // (hybrid − baseline)/baseline × 100
  std::optional<double> post_pct;
  /// Post area from the shift predictor, set by the dynamic strategies when
  /// the predictor was valid for the chosen end.
  std::optional<double> predicted_post;
  InjectionRun run;
};

/// Fills the area fields of a result from a finished injection run.
HybridResult score(const NetworkTopology& topology, const HybridCase& c, const InjectionPlan& plan, InjectionRun run);

HybridResult strategy_untargeted(const NetworkTopology& topology, const HybridCase& c, Strategy window,
                                 const PolicyController& policy);
HybridResult strategy_targeted(const NetworkTopology& topology, const HybridCase& c, const PolicyController& policy);
HybridResult strategy_dynamic_end(const NetworkTopology& topology, const HybridCase& c,
                                  const PolicyController& policy);
/// `lookback` caps how far before the violation the start may move.
HybridResult strategy_dynamic_start_end(const NetworkTopology& topology, const HybridCase& c,
                                        const PolicyController& policy, int lookback = 16);

HybridResult run_strategy(const NetworkTopology& topology, const HybridCase& c, Strategy s,
                          const PolicyController& policy);

struct StrategySummary {
  Strategy strategy = Strategy::Targeted;
  std::size_t n_cases = 0;
  std::optional<double> mean_during_pct;  // mean over cases with a defined value
  std::optional<double> mean_post_pct;
  std::vector<HybridResult> cases;
};

struct StrategyReport {
  std::vector<StrategySummary> strategies;

  const StrategySummary& at(Strategy s) const;
  std::string to_json() const;
  std::string to_csv() const;
};

StrategyReport evaluate_strategies(const NetworkTopology& topology, const std::vector<HybridCase>& cases,
                                   const PolicyController& policy, std::size_t workers = 1);

/// Draws scenarios from the hybrid stream, replays the query recommendation
/// for each and keeps those that violate. Throws ValidationError when fewer
/// than `count` are found within `max_attempts` draws.
std::vector<HybridCase> sample_cases(const NetworkTopology& topology, const QueryIndex& index, std::size_t count,
                                     std::uint64_t seed, std::size_t max_attempts = 0);

}  // namespace wdn
