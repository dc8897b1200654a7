#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wdn/model.hpp"
#include "wdn/simulator.hpp"

namespace wdn {

enum class AgentKind { Agent1, Agent2 };

/// 6 levels for Agent1; 6 levels, t/96 and 96 tariffs for Agent2.
std::size_t observation_dim(AgentKind kind, std::size_t tanks = 6);
std::string to_string(AgentKind kind);

using Observation = std::vector<double>;

struct EpisodeConfig {
  std::vector<double> initial_levels;
  DemandSet demands;
  TariffSchedule tariff;
  AgentKind agent_kind = AgentKind::Agent1;
  std::optional<int> frame_skip;
};

struct RewardConfig {
  double reward_multiplier = 1.0;
  double constraint_w = 0.7;
  double energy_w = 0.3;
  std::vector<double> e_min;  // kWh per step, per station
  std::vector<double> e_max;

  static RewardConfig from_topology(const NetworkTopology& topology);
  void validate() const;
};

struct StepInfo {
  std::vector<char> in_bounds;  // per tank, after the step
  double cost = 0.0;
  double energy = 0.0;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Σ_i (+m if lb_i ≤ L_i ≤ ub_i else −m).
double reward_constraint_step(std::span<const double> levels, std::span<const LevelBounds> bounds,
                              double reward_multiplier = 1.0);

/// Weighted constraint/energy reward in [0,1]. `tariff_norm` is the step's
/// tariff already normalised to [0,1]. The energy part is
/// 1 − mean_s(E_norm_s × tariff_norm), so cheaper steps score higher.
double reward_dual(std::span<const double> levels, std::span<const LevelBounds> bounds,
                   std::span<const double> step_energies, double tariff_norm, const RewardConfig& cfg);

Observation make_observation(const NetworkTopology& topology, AgentKind kind, const SystemState& state,
                             std::span<const double> tariff_norm);

/// Episodic environment contract shared by the plain MDP and its wrappers.
class Env {
 public:
  virtual ~Env() = default;
  virtual Observation reset(const EpisodeConfig& config) = 0;
  virtual StepResult step(const ActionVector& action) = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  /// Agent decisions per episode.
  virtual int decision_points() const = 0;
  /// Bound on |reward| returned by one step call.
  virtual double max_abs_reward() const = 0;
  virtual bool done() const = 0;
};

class WdnEnvironment final : public Env {
 public:
  WdnEnvironment(std::shared_ptr<const NetworkTopology> topology, AgentKind kind);

  Observation reset(const EpisodeConfig& config) override;
  StepResult step(const ActionVector& action) override;
  std::size_t observation_dim() const override;
  std::size_t action_dim() const override { return topology_->station_count(); }
  int decision_points() const override { return kStepsPerDay; }
  double max_abs_reward() const override;
  bool done() const override { return started_ && state_.t >= kStepsPerDay; }

  AgentKind kind() const { return kind_; }
  const SystemState& state() const { return state_; }
  const NetworkTopology& topology() const { return *topology_; }
  const RewardConfig& reward_config() const { return reward_cfg_; }

 private:
  std::shared_ptr<const NetworkTopology> topology_;
  AgentKind kind_;
  RewardConfig reward_cfg_;
  std::vector<LevelBounds> bounds_;
  EpisodeConfig config_;
  std::vector<double> tariff_norm_;
  SystemState state_;
  bool started_ = false;
  std::vector<double> demand_buf_;
};

/// Holds each chosen action for `window` inner steps and sums the inner
/// rewards. Exposes 96 / window decision points.
class FrameSkipEnv final : public Env {
 public:
  FrameSkipEnv(std::unique_ptr<Env> inner, int window);

  Observation reset(const EpisodeConfig& config) override;
  StepResult step(const ActionVector& action) override;
  std::size_t observation_dim() const override { return inner_->observation_dim(); }
  std::size_t action_dim() const override { return inner_->action_dim(); }
  int decision_points() const override { return inner_->decision_points() / window_; }
  double max_abs_reward() const override { return window_ * inner_->max_abs_reward(); }
  bool done() const override { return inner_->done(); }

  int window() const { return window_; }
  Env& inner() { return *inner_; }

 private:
  std::unique_ptr<Env> inner_;
  int window_;
};

std::unique_ptr<Env> frame_skip_wrap(std::unique_ptr<Env> env, int window);

/// Builds the environment matching `kind` and optional frame-skip window.
std::unique_ptr<Env> make_environment(std::shared_ptr<const NetworkTopology> topology, AgentKind kind,
                                      std::optional<int> frame_skip);

}  // namespace wdn
