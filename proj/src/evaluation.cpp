#include "wdn/evaluation.hpp"

#include <algorithm>

#include "wdn/error.hpp"
#include "wdn/random.hpp"

namespace wdn {

Scenario sample_scenario(const NetworkTopology& topology, std::uint64_t seed, const ScenarioOptions& options) {
  Rng rng(derive_seed({stream::kInit, seed}));
  Scenario sc;
  sc.seed = seed;
  for (const auto& tank : topology.tanks)
    sc.initial_levels.push_back(std::uniform_real_distribution<double>(tank.lower_bound, tank.upper_bound)(rng));
  const double scale =
      std::uniform_real_distribution<double>(1.0 - options.demand_spread, 1.0 + options.demand_spread)(rng);
  sc.demands = generate_demands(topology, seed);
  for (auto& zone : sc.demands.per_zone)
    for (double& d : zone) d *= scale;
  return sc;
}

EpisodeConfig to_episode(const NetworkTopology& topology, const Scenario& scenario, AgentKind kind,
                         std::optional<int> frame_skip) {
  return EpisodeConfig{scenario.initial_levels, scenario.demands, topology.tariff, kind, frame_skip};
}

std::vector<Scenario> evaluation_pool(const NetworkTopology& topology, std::size_t episodes, std::uint64_t seed) {
  std::vector<Scenario> pool;
  pool.reserve(episodes);
  for (std::size_t k = 0; k < episodes; ++k)
    pool.push_back(sample_scenario(topology, derive_seed({seed, stream::kEval, static_cast<std::uint64_t>(k)})));
  return pool;
}

std::uint64_t pool_id(std::span<const Scenario> pool) {
  std::uint64_t h = mix64(pool.size());
  for (const auto& sc : pool) h = mix64(h ^ sc.seed);
  return h;
}

EnvFactory training_factory(std::shared_ptr<const NetworkTopology> topology, AgentKind kind,
                            std::optional<int> frame_skip) {
  EnvFactory f;
  f.make_env = [topology, kind, frame_skip] { return make_environment(topology, kind, frame_skip); };
  f.sample_episode = [topology, kind, frame_skip](std::uint64_t episode_seed) {
    return to_episode(*topology, sample_scenario(*topology, episode_seed), kind, frame_skip);
  };
  return f;
}

// ---------------------------------------------------------------------------

PolicyController::PolicyController(const NetworkTopology& topology, PolicyParameters params, AgentKind kind,
                                   std::optional<int> frame_skip)
    : topology_(&topology),
      params_(std::move(params)),
      kind_(kind),
      frame_skip_(frame_skip),
      tariff_norm_(topology.tariff.normalized()) {
  if (params_.obs_dim() != observation_dim(kind_, topology.tank_count()))
    throw ValidationError("policy input dimension does not match the agent observation");
  if (params_.act_dim() != topology.station_count())
    throw ValidationError("policy action dimension does not match the station count");
  if (frame_skip_ && (*frame_skip_ <= 0 || kStepsPerDay % *frame_skip_ != 0))
    throw ValidationError("frame-skip window must divide 96");
}

PolicyController::PolicyController(const NetworkTopology& topology, const PolicyCheckpoint& ckpt)
    : PolicyController(topology, ckpt.params, ckpt.kind(), ckpt.frame_skip) {}

ActionVector PolicyController::decide(const SystemState& state) const {
  return deterministic_action(params_, make_observation(*topology_, kind_, state, tariff_norm_));
}

namespace {

template <typename Act>
EpisodeRun run_closed_loop(const NetworkTopology& topology, const Scenario& scenario, Act&& act) {
  EpisodeRun run;
  run.trajectory.states.push_back({0, scenario.initial_levels});
  for (int t = 0; t < kStepsPerDay; ++t) {
    const SystemState& s = run.trajectory.states.back();
    bool queried = false;
    ActionVector a = act(s, t, queried);
    if (queried) ++run.decisions;
    if (!run.schedule.empty() && a != run.schedule.back()) ++run.action_changes;
    auto [next, out] = step(topology, s, a, scenario.demands.at(t), topology.tariff.at(t));
    run.schedule.push_back(std::move(a));
    run.trajectory.states.push_back(std::move(next));
    run.trajectory.outputs.push_back(std::move(out));
  }
  return run;
}

}  // namespace

EpisodeRun run_policy(const NetworkTopology& topology, const PolicyController& controller, const Scenario& scenario) {
  const int window = controller.frame_skip().value_or(1);
  ActionVector held;
  return run_closed_loop(topology, scenario, [&](const SystemState& s, int t, bool& queried) {
    if (t % window == 0) {
      held = controller.decide(s);
      queried = true;
    }
    return held;
  });
}

EpisodeRun run_rule_based(const NetworkTopology& topology, const RuleBasedOperator& op, const Scenario& scenario) {
  HysteresisController ctl(topology, op.settings_for(topology, scenario.seed), scenario.initial_levels);
  return run_closed_loop(topology, scenario, [&](const SystemState& s, int, bool& queried) {
    queried = true;
    return ctl.act(s.levels);
  });
}

EpisodeRun run_random(const NetworkTopology& topology, const Scenario& scenario, std::uint64_t seed) {
  Rng rng(derive_seed({seed, scenario.seed}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return run_closed_loop(topology, scenario, [&](const SystemState&, int, bool& queried) {
    queried = true;
    ActionVector a(topology.station_count());
    for (double& v : a) v = unit(rng);
    return a;
  });
}

namespace {

template <typename Run>
EvaluationResult evaluate_with(const NetworkTopology& topology, std::span<const Scenario> pool, std::string label,
                               Run&& run) {
  EvaluationResult r;
  r.label = std::move(label);
  r.pool_id = pool_id(pool);
  for (const auto& sc : pool) r.episodes.push_back(measure(run(sc).trajectory, topology));
  return r;
}

}  // namespace

EvaluationResult evaluate_policy(const NetworkTopology& topology, const PolicyController& controller,
                                 std::span<const Scenario> pool, std::string label) {
  return evaluate_with(topology, pool, std::move(label),
                       [&](const Scenario& sc) { return run_policy(topology, controller, sc); });
}

EvaluationResult evaluate_rule_based(const NetworkTopology& topology, const RuleBasedOperator& op,
                                     std::span<const Scenario> pool, std::string label) {
  return evaluate_with(topology, pool, std::move(label),
                       [&](const Scenario& sc) { return run_rule_based(topology, op, sc); });
}

EvaluationResult evaluate_random(const NetworkTopology& topology, std::span<const Scenario> pool, std::uint64_t seed,
                                 std::string label) {
  return evaluate_with(topology, pool, std::move(label),
                       [&](const Scenario& sc) { return run_random(topology, sc, seed); });
}

}  // namespace wdn
