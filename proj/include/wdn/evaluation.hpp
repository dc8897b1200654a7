#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wdn/environment.hpp"
#include "wdn/history.hpp"
#include "wdn/metrics.hpp"
#include "wdn/policy.hpp"

namespace wdn {

/// One operating day: starting levels plus the demand it must serve.
struct Scenario {
  std::uint64_t seed = 0;
  std::vector<double> initial_levels;
  DemandSet demands;
};

struct ScenarioOptions {
  /// Day-level demand multiplier drawn from [1 − spread, 1 + spread].
  double demand_spread = 0.1;
};

/// Initial levels uniform in [lb, ub] per tank; demands from the world's
/// generator with a seeded day-level multiplier.
Scenario sample_scenario(const NetworkTopology& topology, std::uint64_t seed, const ScenarioOptions& options = {});

EpisodeConfig to_episode(const NetworkTopology& topology, const Scenario& scenario, AgentKind kind,
                         std::optional<int> frame_skip = std::nullopt);

/// Held-out pool: seeds drawn from the evaluation stream, disjoint from the
/// training stream.
std::vector<Scenario> evaluation_pool(const NetworkTopology& topology, std::size_t episodes, std::uint64_t seed);
std::uint64_t pool_id(std::span<const Scenario> pool);

/// Factory for training: every episode draws a scenario from its own seed.
EnvFactory training_factory(std::shared_ptr<const NetworkTopology> topology, AgentKind kind,
                            std::optional<int> frame_skip);

/// Deterministic (mean-action) controller backed by a trained policy. With a
/// frame-skip window it only re-decides every `window` steps.
class PolicyController {
 public:
  PolicyController(const NetworkTopology& topology, PolicyParameters params, AgentKind kind,
                   std::optional<int> frame_skip = std::nullopt);
  explicit PolicyController(const NetworkTopology& topology, const PolicyCheckpoint& ckpt);

  /// Action for `state` ignoring any frame-skip window.
  ActionVector decide(const SystemState& state) const;
  AgentKind kind() const { return kind_; }
  std::optional<int> frame_skip() const { return frame_skip_; }
  const PolicyParameters& params() const { return params_; }

 private:
  const NetworkTopology* topology_;
  PolicyParameters params_;
  AgentKind kind_;
  std::optional<int> frame_skip_;
  std::vector<double> tariff_norm_;
};

struct EpisodeRun {
  ControlSchedule schedule;
  Trajectory trajectory;
  int decisions = 0;       // times the controller was queried
  int action_changes = 0;  // steps whose action differs from the previous one
};

EpisodeRun run_policy(const NetworkTopology& topology, const PolicyController& controller, const Scenario& scenario);
EpisodeRun run_rule_based(const NetworkTopology& topology, const RuleBasedOperator& op, const Scenario& scenario);
/// Uniform i.i.d. actions in [0,1].
EpisodeRun run_random(const NetworkTopology& topology, const Scenario& scenario, std::uint64_t seed);

EvaluationResult evaluate_policy(const NetworkTopology& topology, const PolicyController& controller,
                                 std::span<const Scenario> pool, std::string label);
EvaluationResult evaluate_rule_based(const NetworkTopology& topology, const RuleBasedOperator& op,
                                     std::span<const Scenario> pool, std::string label = "historical");
EvaluationResult evaluate_random(const NetworkTopology& topology, std::span<const Scenario> pool,
                                 std::uint64_t seed, std::string label = "random");

}  // namespace wdn
