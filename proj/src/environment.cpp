#include "wdn/environment.hpp"

#include <algorithm>
#include <cmath>

#include "wdn/error.hpp"

namespace wdn {

std::size_t observation_dim(AgentKind kind, std::size_t tanks) {
  return kind == AgentKind::Agent1 ? tanks : tanks + 1 + kStepsPerDay;
}

std::string to_string(AgentKind kind) { return kind == AgentKind::Agent1 ? "agent1" : "agent2"; }

RewardConfig RewardConfig::from_topology(const NetworkTopology& topology) {
  RewardConfig cfg;
  for (const auto& s : topology.stations) {
    cfg.e_min.push_back(0.0);
    cfg.e_max.push_back(s.rated_power * topology.dt_hours);
  }
  return cfg;
}

void RewardConfig::validate() const {
  if (std::abs(constraint_w + energy_w - 1.0) > 1e-12) throw ValidationError("reward weights must sum to 1");
  if (e_min.size() != e_max.size()) throw ValidationError("energy bounds size mismatch");
}

double reward_constraint_step(std::span<const double> levels, std::span<const LevelBounds> bounds,
                              double reward_multiplier) {
  double r = 0.0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const bool inside = bounds[i].lower <= levels[i] && levels[i] <= bounds[i].upper;
    r += inside ? reward_multiplier : -reward_multiplier;
  }
  return r;
}

double reward_dual(std::span<const double> levels, std::span<const LevelBounds> bounds,
                   std::span<const double> step_energies, double tariff_norm, const RewardConfig& cfg) {
  const double n_tanks = static_cast<double>(bounds.size());
  const double reward_max = n_tanks * cfg.reward_multiplier;
  const double reward_min = -n_tanks * cfg.reward_multiplier;
  const double raw = reward_constraint_step(levels, bounds, cfg.reward_multiplier);
  const double constraint = (raw - reward_min) / (reward_max - reward_min);

  double weighted_cost = 0.0;
  for (std::size_t s = 0; s < step_energies.size(); ++s) {
    const double span = cfg.e_max[s] - cfg.e_min[s];
    // Zero-power stations (valves) carry no energy cost.
    const double e_norm = span > 0.0 ? std::clamp((step_energies[s] - cfg.e_min[s]) / span, 0.0, 1.0) : 0.0;
    weighted_cost += e_norm * std::clamp(tariff_norm, 0.0, 1.0);
  }
  const double energy = step_energies.empty() ? 1.0 : 1.0 - weighted_cost / static_cast<double>(step_energies.size());
  return cfg.constraint_w * constraint + cfg.energy_w * energy;
}

Observation make_observation(const NetworkTopology& topology, AgentKind kind, const SystemState& state,
                             std::span<const double> tariff_norm) {
  Observation obs;
  obs.reserve(observation_dim(kind, topology.tank_count()));
  for (std::size_t i = 0; i < topology.tank_count(); ++i) obs.push_back(state.levels[i] / topology.tanks[i].level_max);
  if (kind == AgentKind::Agent2) {
    obs.push_back(static_cast<double>(state.t) / kStepsPerDay);
    obs.insert(obs.end(), tariff_norm.begin(), tariff_norm.end());
  }
  return obs;
}

// ---------------------------------------------------------------------------

WdnEnvironment::WdnEnvironment(std::shared_ptr<const NetworkTopology> topology, AgentKind kind)
    : topology_(std::move(topology)), kind_(kind) {
  if (!topology_) throw ValidationError("environment needs a topology");
  reward_cfg_ = RewardConfig::from_topology(*topology_);
  reward_cfg_.validate();
  bounds_ = topology_->bounds();
  demand_buf_.resize(topology_->zone_count());
}

std::size_t WdnEnvironment::observation_dim() const { return wdn::observation_dim(kind_, topology_->tank_count()); }

double WdnEnvironment::max_abs_reward() const {
  return kind_ == AgentKind::Agent1 ? static_cast<double>(topology_->tank_count()) * reward_cfg_.reward_multiplier
                                    : 1.0;
}

Observation WdnEnvironment::reset(const EpisodeConfig& config) {
  if (config.agent_kind != kind_) throw ValidationError("episode config is for a different agent kind");
  if (config.initial_levels.size() != topology_->tank_count())
    throw ValidationError("episode initial level count does not match the network");
  for (std::size_t i = 0; i < config.initial_levels.size(); ++i) {
    const double l = config.initial_levels[i];
    if (!(l >= 0.0 && l <= topology_->tanks[i].level_max))
      throw ValidationError("episode initial level outside [0, level_max_physical]");
  }
  config.demands.validate(topology_->zone_count());
  if (config.tariff.values.size() != static_cast<std::size_t>(kStepsPerDay) ||
      !(config.tariff.min() < config.tariff.max()))
    throw ValidationError("episode tariff must have 96 non-constant values");
  if (config.frame_skip && (*config.frame_skip <= 0 || kStepsPerDay % *config.frame_skip != 0))
    throw ValidationError("frame_skip window must divide 96");

  config_ = config;
  tariff_norm_ = config_.tariff.normalized();
  state_ = SystemState{0, config_.initial_levels};
  started_ = true;
  return make_observation(*topology_, kind_, state_, tariff_norm_);
}

StepResult WdnEnvironment::step(const ActionVector& action) {
  if (!started_) throw ValidationError("environment stepped before reset");
  if (done()) throw ValidationError("episode is finished; call reset");
  const int t = state_.t;
  for (std::size_t z = 0; z < demand_buf_.size(); ++z) demand_buf_[z] = config_.demands.per_zone[z][t];
  auto [next, out] = wdn::step(*topology_, state_, action, demand_buf_, config_.tariff.at(t));

  StepResult r;
  r.info.cost = out.cost;
  r.info.energy = out.energy();
  r.info.in_bounds.resize(bounds_.size());
  for (std::size_t i = 0; i < bounds_.size(); ++i)
    r.info.in_bounds[i] = bounds_[i].lower <= next.levels[i] && next.levels[i] <= bounds_[i].upper;
  r.reward = kind_ == AgentKind::Agent1
                 ? reward_constraint_step(next.levels, bounds_, reward_cfg_.reward_multiplier)
                 : reward_dual(next.levels, bounds_, out.energies, tariff_norm_[static_cast<std::size_t>(t)], reward_cfg_);
  state_ = std::move(next);
  r.done = state_.t >= kStepsPerDay;
  r.observation = make_observation(*topology_, kind_, state_, tariff_norm_);
  return r;
}

// ---------------------------------------------------------------------------

FrameSkipEnv::FrameSkipEnv(std::unique_ptr<Env> inner, int window) : inner_(std::move(inner)), window_(window) {
  if (!inner_) throw ValidationError("frame-skip wrapper needs an environment");
  if (window_ <= 0 || inner_->decision_points() % window_ != 0)
    throw ValidationError("frame-skip window must divide the episode length");
}

Observation FrameSkipEnv::reset(const EpisodeConfig& config) {
  if (config.frame_skip && *config.frame_skip != window_)
    throw ValidationError("episode frame_skip does not match the wrapper window");
  return inner_->reset(config);
}

StepResult FrameSkipEnv::step(const ActionVector& action) {
  StepResult agg;
  for (int k = 0; k < window_; ++k) {
    StepResult r = inner_->step(action);
    agg.reward += r.reward;
    agg.info.cost += r.info.cost;
    agg.info.energy += r.info.energy;
    agg.info.in_bounds = std::move(r.info.in_bounds);
    agg.observation = std::move(r.observation);
    agg.done = r.done;
    if (r.done) break;
  }
  return agg;
}

std::unique_ptr<Env> frame_skip_wrap(std::unique_ptr<Env> env, int window) {
  return std::make_unique<FrameSkipEnv>(std::move(env), window);
}

std::unique_ptr<Env> make_environment(std::shared_ptr<const NetworkTopology> topology, AgentKind kind,
                                      std::optional<int> frame_skip) {
  std::unique_ptr<Env> env = std::make_unique<WdnEnvironment>(std::move(topology), kind);
  if (frame_skip && *frame_skip > 1) env = frame_skip_wrap(std::move(env), *frame_skip);
  return env;
}

}  // namespace wdn
