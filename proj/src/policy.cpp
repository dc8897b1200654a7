#include "wdn/policy.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wdn/error.hpp"

namespace wdn {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // ½ ln(2π)

}  // namespace

// Mlp -----------------------------------------------------------------------

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ValidationError("an MLP needs at least input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ValidationError("MLP layer sizes must be positive");
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

void Mlp::initialize(Rng& rng, double output_gain) {
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double gain = l + 1 == layer_count() ? output_gain : 1.0;
    const double limit = gain * std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    double* w = params_.data() + offsets_[l];
    for (std::size_t k = 0; k < in * out; ++k) w[k] = dist(rng);
    std::fill(w + in * out, w + in * out + out, 0.0);
  }
}

std::span<double> Mlp::bias(std::size_t l) {
  const std::size_t in = sizes_[l];
  const std::size_t out = sizes_[l + 1];
  return std::span<double>(params_).subspan(offsets_[l] + in * out, out);
}

std::span<const double> Mlp::forward(std::span<const double> input, Workspace& ws) const {
  if (input.size() != input_dim())
    throw ValidationError("observation dimension " + std::to_string(input.size()) + " does not match network input " +
                          std::to_string(input_dim()));
  ws.activations.resize(sizes_.size());
  ws.activations[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layer_count(); ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + in * out;
    const double* a = ws.activations[l].data();
    auto& z = ws.activations[l + 1];
    z.resize(out);
    const bool hidden = l + 1 < layer_count();
    for (std::size_t j = 0; j < out; ++j) {
      const double* row = w + j * in;
      double s = b[j];
      for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
      z[j] = hidden ? std::tanh(s) : s;
    }
  }
  return ws.activations.back();
}

void Mlp::backward(Workspace& ws, std::span<const double> grad_out, std::span<double> grad) const {
  ws.delta.assign(grad_out.begin(), grad_out.end());
  for (std::size_t l = layer_count(); l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + in * out;
    const double* a = ws.activations[l].data();
    for (std::size_t j = 0; j < out; ++j) {
      const double d = ws.delta[j];
      if (d == 0.0) continue;
      double* grow = gw + j * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * a[i];
      gb[j] += d;
    }
    if (l == 0) break;
    ws.delta_prev.assign(in, 0.0);
    for (std::size_t j = 0; j < out; ++j) {
      const double d = ws.delta[j];
      if (d == 0.0) continue;
      const double* row = w + j * in;
      for (std::size_t i = 0; i < in; ++i) ws.delta_prev[i] += row[i] * d;
    }
    // a_l = tanh(z), so dtanh = 1 − a².
    for (std::size_t i = 0; i < in; ++i) ws.delta_prev[i] *= 1.0 - a[i] * a[i];
    std::swap(ws.delta, ws.delta_prev);
  }
}

// PolicyParameters ------------------------------------------------------------

namespace {

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

}  // namespace

PolicyParameters PolicyParameters::zeros(std::size_t obs_dim, std::size_t act_dim,
                                         const std::vector<std::size_t>& hidden) {
  PolicyParameters p;
  p.actor = Mlp(layer_sizes(obs_dim, hidden, act_dim));
  p.log_std.assign(act_dim, 0.0);
  p.critic = Mlp(layer_sizes(obs_dim, hidden, 1));
  return p;
}

PolicyParameters PolicyParameters::initialize(std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed,
                                              const std::vector<std::size_t>& hidden, double initial_log_std) {
  PolicyParameters p = zeros(obs_dim, act_dim, hidden);
  Rng rng(seed);
  p.actor.initialize(rng, 0.01);
  auto out_bias = p.actor.bias(p.actor.layer_count() - 1);
  std::fill(out_bias.begin(), out_bias.end(), 0.5);
  p.critic.initialize(rng, 1.0);
  std::fill(p.log_std.begin(), p.log_std.end(), initial_log_std);
  return p;
}

std::size_t PolicyParameters::parameter_count() const {
  return actor.parameter_count() + log_std.size() + critic.parameter_count();
}

std::vector<double> PolicyParameters::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), actor.parameters().begin(), actor.parameters().end());
  flat.insert(flat.end(), log_std.begin(), log_std.end());
  flat.insert(flat.end(), critic.parameters().begin(), critic.parameters().end());
  return flat;
}

void PolicyParameters::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ValidationError("flat parameter size mismatch");
  auto a = actor.parameters();
  auto c = critic.parameters();
  std::copy_n(flat.begin(), a.size(), a.begin());
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(a.size()), log_std.size(), log_std.begin());
  std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(a.size() + log_std.size()), c.size(), c.begin());
}

bool PolicyParameters::all_finite() const {
  const auto fin = [](double v) { return std::isfinite(v); };
  return std::all_of(actor.parameters().begin(), actor.parameters().end(), fin) &&
         std::all_of(log_std.begin(), log_std.end(), fin) &&
         std::all_of(critic.parameters().begin(), critic.parameters().end(), fin);
}

PolicyGradient::PolicyGradient(const PolicyParameters& p)
    : actor(p.actor.parameter_count(), 0.0), log_std(p.log_std.size(), 0.0), critic(p.critic.parameter_count(), 0.0) {}

std::vector<double> PolicyGradient::flatten() const {
  std::vector<double> flat(actor);
  flat.insert(flat.end(), log_std.begin(), log_std.end());
  flat.insert(flat.end(), critic.begin(), critic.end());
  return flat;
}

// Forward / sampling ----------------------------------------------------------

PolicyOutput policy_forward(const PolicyParameters& params, std::span<const double> observation) {
  Mlp::Workspace ws;
  PolicyOutput out;
  const auto mean = params.actor.forward(observation, ws);
  out.mean.assign(mean.begin(), mean.end());
  out.sigma.resize(params.log_std.size());
  for (std::size_t i = 0; i < out.sigma.size(); ++i) out.sigma[i] = std::exp(params.log_std[i]);
  out.value = params.critic.forward(observation, ws)[0];
  return out;
}

double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std, std::span<const double> x) {
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

SampledAction sample_action(const PolicyParameters& params, std::span<const double> observation, Rng& rng) {
  const PolicyOutput out = policy_forward(params, observation);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledAction s;
  s.raw.resize(out.mean.size());
  s.action.resize(out.mean.size());
  for (std::size_t i = 0; i < out.mean.size(); ++i) {
    s.raw[i] = out.mean[i] + out.sigma[i] * normal(rng);
    s.action[i] = std::clamp(s.raw[i], 0.0, 1.0);
  }
  s.log_prob = gaussian_log_prob(out.mean, params.log_std, s.raw);
  s.value = out.value;
  return s;
}

ActionVector deterministic_action(const PolicyParameters& params, std::span<const double> observation) {
  Mlp::Workspace ws;
  const auto mean = params.actor.forward(observation, ws);
  ActionVector a(mean.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(mean[i], 0.0, 1.0);
  return a;
}

void accumulate_log_prob_gradient(const PolicyParameters& params, std::span<const double> observation,
                                  std::span<const double> raw_action, double scale, PolicyGradient& grad) {
  Mlp::Workspace ws;
  const auto mean = params.actor.forward(observation, ws);
  std::vector<double> d_mean(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double inv_var = std::exp(-2.0 * params.log_std[i]);
    const double diff = raw_action[i] - mean[i];
    d_mean[i] = scale * diff * inv_var;
    grad.log_std[i] += scale * (diff * diff * inv_var - 1.0);
  }
  params.actor.backward(ws, d_mean, grad.actor);
}

void accumulate_value_gradient(const PolicyParameters& params, std::span<const double> observation, double scale,
                               PolicyGradient& grad) {
  Mlp::Workspace ws;
  params.critic.forward(observation, ws);
  const double g[1] = {scale};
  params.critic.backward(ws, g, grad.critic);
}

// Advantage estimation ----------------------------------------------------------

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const char> dones,
                      double gamma, double lambda, double last_value) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw ValidationError("GAE inputs must have equal lengths");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = last_value;
  for (std::size_t k = n; k-- > 0;) {
    const double not_done = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * not_done - values[k];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    r.advantages[k] = next_adv;
    r.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return r;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

// PPO -------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ValidationError("GAE lambda must lie in [0,1]");
  if (!(clip_epsilon > 0.0)) throw ValidationError("clip epsilon must be > 0");
  if (batch_size == 0 || minibatch_size == 0) throw ValidationError("batch sizes must be positive");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(learning_rate >= 0.0)) throw ValidationError("learning rate must be >= 0");
  if (workers < 1) throw ValidationError("at least one rollout worker is required");
  if (hidden.empty()) throw ValidationError("at least one hidden layer is required");
}

UpdateStats ppo_update(PolicyParameters& params, AdamState& adam, const RolloutBatch& batch, const TrainConfig& cfg) {
  const std::size_t n = batch.size();
  if (n == 0) throw ValidationError("PPO update needs a non-empty batch");
  if (batch.advantages.size() != n || batch.returns.size() != n)
    throw ValidationError("batch advantages/returns are missing");
  const std::size_t n_params = params.parameter_count();
  if (adam.m.size() != n_params) {
    adam.m.assign(n_params, 0.0);
    adam.v.assign(n_params, 0.0);
  }

  const double mean_adv = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean_adv) * (a - mean_adv);
  const double std_adv = std::sqrt(var / n);
  std::vector<double> adv(n);
  for (std::size_t k = 0; k < n; ++k) adv[k] = (batch.advantages[k] - mean_adv) / (std_adv + 1e-8);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed({cfg.seed, 0x5050, adam.updates}));
  ++adam.updates;

  UpdateStats stats;
  Mlp::Workspace ws;
  PolicyGradient grad(params);
  std::vector<double> d_mean(params.act_dim());
  const std::size_t mb = std::min(cfg.minibatch_size, n);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(start + mb, n);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(grad.actor.begin(), grad.actor.end(), 0.0);
      std::fill(grad.log_std.begin(), grad.log_std.end(), 0.0);
      std::fill(grad.critic.begin(), grad.critic.end(), 0.0);
      double pl = 0.0, vl = 0.0, kl = 0.0, clipped = 0.0;

      for (std::size_t idx = start; idx < end; ++idx) {
        const std::size_t k = order[idx];
        const auto obs = batch.observation(k);
        const auto raw = batch.raw_action(k);

        const auto mean = params.actor.forward(obs, ws);
        const double logp = gaussian_log_prob(mean, params.log_std, raw);
        const double log_ratio = logp - batch.log_probs[k];
        const double ratio = std::exp(log_ratio);
        const double a = adv[k];
        const double unclipped = ratio * a;
        const double surrogate = clipped_surrogate(ratio, a, cfg.clip_epsilon);
        pl -= surrogate;
        kl += -log_ratio;
        if (std::abs(ratio - 1.0) > cfg.clip_epsilon) clipped += 1.0;
        // Gradient flows only through the unclipped branch when it is the min.
        if (unclipped <= surrogate) {
          const double coef = -a * ratio * inv;  // ∂loss/∂logp
          for (std::size_t i = 0; i < d_mean.size(); ++i) {
            const double inv_var = std::exp(-2.0 * params.log_std[i]);
            const double diff = raw[i] - mean[i];
            d_mean[i] = coef * diff * inv_var;
            grad.log_std[i] += coef * (diff * diff * inv_var - 1.0);
          }
          params.actor.backward(ws, d_mean, grad.actor);
        }

        const double v = params.critic.forward(obs, ws)[0];
        const double err = v - batch.returns[k];
        vl += err * err;
        const double dv[1] = {2.0 * cfg.value_coef * err * inv};
        params.critic.backward(ws, dv, grad.critic);
      }
      // Mean per-dimension entropy of the diagonal Gaussian, log σ + const.
      // Summing over six pumps drowns the dual reward's small advantages.
      double entropy = 0.0;
      const double dims = static_cast<double>(params.log_std.size());
      for (std::size_t i = 0; i < params.log_std.size(); ++i) {
        entropy += (params.log_std[i] + 0.5 + kHalfLog2Pi) / dims;
        grad.log_std[i] -= cfg.entropy_coef / dims;
      }

      const double loss = pl * inv + cfg.value_coef * vl * inv - cfg.entropy_coef * entropy;
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite PPO loss (policy " << pl * inv << ", value " << vl * inv << ", entropy " << entropy
            << ") at epoch " << epoch << ", minibatch starting " << start;
        throw NumericError(msg.str());
      }
      stats.policy_loss += pl;
      stats.value_loss += vl;
      stats.approx_kl += kl;
      stats.clip_fraction += clipped;
      stats.entropy = entropy;
      stats.samples += end - start;

      std::vector<double> g = grad.flatten();
      double norm2 = 0.0;
      for (double x : g) norm2 += x * x;
      const double norm = std::sqrt(norm2);
      if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
        const double s = cfg.max_grad_norm / norm;
        for (double& x : g) x *= s;
      }
      ++adam.steps;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.steps));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.steps));
      std::vector<double> flat = params.flatten();
      for (std::size_t p = 0; p < n_params; ++p) {
        adam.m[p] = cfg.adam_beta1 * adam.m[p] + (1.0 - cfg.adam_beta1) * g[p];
        adam.v[p] = cfg.adam_beta2 * adam.v[p] + (1.0 - cfg.adam_beta2) * g[p] * g[p];
        const double mhat = adam.m[p] / bc1;
        const double vhat = adam.v[p] / bc2;
        flat[p] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
      }
      params.assign(flat);
    }
  }
  if (!params.all_finite()) throw NumericError("PPO update produced non-finite parameters");
  const double s = static_cast<double>(std::max<std::size_t>(stats.samples, 1));
  stats.policy_loss /= s;
  stats.value_loss /= s;
  stats.approx_kl /= s;
  stats.clip_fraction /= s;
  return stats;
}

// Rollouts --------------------------------------------------------------------

namespace {

struct EpisodeBuffer {
  std::vector<double> observations, raw_actions, log_probs, rewards, values;
  std::vector<char> dones;
  double episode_return = 0.0;
};

EpisodeBuffer run_episode(const EnvFactory& factory, const PolicyParameters& params, std::uint64_t episode_seed) {
  EpisodeBuffer buf;
  auto env = factory.make_env();
  Observation obs = env->reset(factory.sample_episode(episode_seed));
  Rng rng(derive_seed({episode_seed, 0xac7}));
  bool done = false;
  while (!done) {
    SampledAction s = sample_action(params, obs, rng);
    StepResult r = env->step(s.action);
    buf.observations.insert(buf.observations.end(), obs.begin(), obs.end());
    buf.raw_actions.insert(buf.raw_actions.end(), s.raw.begin(), s.raw.end());
    buf.log_probs.push_back(s.log_prob);
    buf.values.push_back(s.value);
    buf.rewards.push_back(r.reward);
    buf.dones.push_back(r.done ? 1 : 0);
    buf.episode_return += r.reward;
    done = r.done;
    obs = std::move(r.observation);
  }
  return buf;
}

}  // namespace

RolloutBatch collect_rollouts(const EnvFactory& factory, const PolicyParameters& params, const TrainConfig& cfg,
                              std::uint64_t iteration, double reward_scale) {
  auto probe = factory.make_env();
  const std::size_t per_episode = static_cast<std::size_t>(probe->decision_points());
  const std::size_t episodes = (cfg.batch_size + per_episode - 1) / per_episode;
  std::vector<EpisodeBuffer> results(episodes);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.workers, 1)), episodes);

  const auto episode_seed = [&](std::size_t k) {
    return derive_seed({cfg.seed, stream::kTrain, iteration, static_cast<std::uint64_t>(k)});
  };
  if (workers <= 1) {
    for (std::size_t k = 0; k < episodes; ++k) results[k] = run_episode(factory, params, episode_seed(k));
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t k = w; k < episodes; k += workers) results[k] = run_episode(factory, params, episode_seed(k));
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
    }
    for (std::size_t w = 0; w < workers; ++w) {
      if (!errors[w]) continue;
      try {
        std::rethrow_exception(errors[w]);
      } catch (const std::exception& e) {
        throw Error("rollout worker " + std::to_string(w) + " failed: " + e.what());
      }
    }
  }

  RolloutBatch batch;
  batch.obs_dim = params.obs_dim();
  batch.act_dim = params.act_dim();
  for (auto& ep : results) {
    batch.observations.insert(batch.observations.end(), ep.observations.begin(), ep.observations.end());
    batch.raw_actions.insert(batch.raw_actions.end(), ep.raw_actions.begin(), ep.raw_actions.end());
    batch.log_probs.insert(batch.log_probs.end(), ep.log_probs.begin(), ep.log_probs.end());
    batch.rewards.insert(batch.rewards.end(), ep.rewards.begin(), ep.rewards.end());
    batch.values.insert(batch.values.end(), ep.values.begin(), ep.values.end());
    batch.dones.insert(batch.dones.end(), ep.dones.begin(), ep.dones.end());
    batch.episode_returns.push_back(ep.episode_return);
  }
  std::vector<double> scaled(batch.rewards);
  for (double& r : scaled) r *= reward_scale;
  auto gae = compute_gae(scaled, batch.values, batch.dones, cfg.gamma, cfg.gae_lambda);
  batch.advantages = std::move(gae.advantages);
  batch.returns = std::move(gae.returns);
  return batch;
}

TrainResult train(const EnvFactory& factory, const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  auto probe = factory.make_env();
  TrainResult result;
  result.params = PolicyParameters::initialize(probe->observation_dim(), probe->action_dim(),
                                               derive_seed({cfg.seed, 0x1417}), cfg.hidden, cfg.initial_log_std);
  double reward_scale = cfg.reward_scale;
  if (!(reward_scale > 0.0)) {
    // Keep critic targets O(1): bound of the discounted return maps to 2.
    double horizon = 0.0;
    double g = 1.0;
    for (int k = 0; k < probe->decision_points(); ++k, g *= cfg.gamma) horizon += g;
    reward_scale = 2.0 / (probe->max_abs_reward() * horizon);
  }

  AdamState adam;
  std::uint64_t steps = 0;
  std::uint64_t iteration = 0;
  while (steps < cfg.total_steps) {
    RolloutBatch batch = collect_rollouts(factory, result.params, cfg, iteration++, reward_scale);
    steps += batch.size();
    const double mean_return = std::accumulate(batch.episode_returns.begin(), batch.episode_returns.end(), 0.0) /
                               static_cast<double>(batch.episode_returns.size());
    const UpdateStats stats = ppo_update(result.params, adam, batch, cfg);
    result.curve.push_back({steps, mean_return});
    if (progress) progress(result.curve.back(), stats);
  }
  return result;
}

std::string reward_curve_to_csv(const RewardCurve& curve) {
  std::string out = "steps,mean_reward\n";
  for (const auto& p : curve) out += std::to_string(p.steps) + "," + format_double(p.mean_reward) + "\n";
  return out;
}

// Checkpoints -------------------------------------------------------------------

namespace {

nlohmann::json mlp_json(const Mlp& m) {
  return {{"sizes", m.sizes()}, {"params", std::vector<double>(m.parameters().begin(), m.parameters().end())}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m(j.at("sizes").get<std::vector<std::size_t>>());
  const auto values = j.at("params").get<std::vector<double>>();
  if (values.size() != m.parameter_count()) throw ValidationError("checkpoint layer parameter count mismatch");
  std::copy(values.begin(), values.end(), m.parameters().begin());
  return m;
}

}  // namespace

std::string checkpoint_to_json(const PolicyCheckpoint& ckpt) {
  nlohmann::json doc{{"format", "wdn-policy"},
                     {"version", 1},
                     {"agent", ckpt.agent},
                     {"frame_skip", ckpt.frame_skip ? nlohmann::json(*ckpt.frame_skip) : nlohmann::json(nullptr)},
                     {"obs_dim", ckpt.params.obs_dim()},
                     {"act_dim", ckpt.params.act_dim()},
                     {"actor", mlp_json(ckpt.params.actor)},
                     {"log_std", ckpt.params.log_std},
                     {"critic", mlp_json(ckpt.params.critic)}};
  return doc.dump() + "\n";
}

PolicyCheckpoint checkpoint_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "wdn-policy") throw ParseError("not a policy checkpoint");
    if (doc.at("version").get<int>() != 1) throw ParseError("unsupported checkpoint version");
    PolicyCheckpoint ckpt;
    ckpt.agent = doc.at("agent").get<int>();
    if (ckpt.agent < 1 || ckpt.agent > 3) throw ValidationError("checkpoint agent must be 1, 2 or 3");
    if (!doc.at("frame_skip").is_null()) ckpt.frame_skip = doc.at("frame_skip").get<int>();
    ckpt.params.actor = mlp_from_json(doc.at("actor"));
    ckpt.params.log_std = doc.at("log_std").get<std::vector<double>>();
    ckpt.params.critic = mlp_from_json(doc.at("critic"));
    if (ckpt.params.obs_dim() != doc.at("obs_dim").get<std::size_t>() ||
        ckpt.params.act_dim() != doc.at("act_dim").get<std::size_t>() ||
        ckpt.params.log_std.size() != ckpt.params.act_dim() || ckpt.params.critic.output_dim() != 1 ||
        ckpt.params.critic.input_dim() != ckpt.params.obs_dim())
      throw ValidationError("checkpoint shapes are inconsistent");
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint JSON: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt) {
  write_file_atomic(path, checkpoint_to_json(ckpt));
}

PolicyCheckpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_file(path)); }

}  // namespace wdn
