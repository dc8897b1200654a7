#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wdn/environment.hpp"
#include "wdn/random.hpp"

namespace wdn {

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters are stored flat, layer by layer, weights (out×in, row-major)
/// followed by biases.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised network; `sizes` = {input, hidden..., output}.
  explicit Mlp(std::vector<std::size_t> sizes);

  struct Workspace {
    std::vector<std::vector<double>> activations;  // [0] = input, back() = output
    std::vector<double> delta;
    std::vector<double> delta_prev;
  };

  /// Scaled-uniform (Glorot) hidden layers; output layer scaled by `output_gain`.
  void initialize(Rng& rng, double output_gain);

  std::span<const double> forward(std::span<const double> input, Workspace& ws) const;
  /// Accumulates ∂(grad_out · output)/∂params into `grad` using the
  /// activations left in `ws` by the matching forward call.
  void backward(Workspace& ws, std::span<const double> grad_out, std::span<double> grad) const;

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  /// Bias block of layer `l`.
  std::span<double> bias(std::size_t l);

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  std::vector<double> params_;
};

/// Actor (mean head), state-independent log-σ and critic.
struct PolicyParameters {
  Mlp actor;
  std::vector<double> log_std;
  Mlp critic;

  static PolicyParameters zeros(std::size_t obs_dim, std::size_t act_dim,
                                const std::vector<std::size_t>& hidden = {64, 64});
  /// Random hidden weights, near-zero output weights, action-midpoint mean
  /// bias and the given initial log-σ.
  static PolicyParameters initialize(std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed,
                                     const std::vector<std::size_t>& hidden = {64, 64}, double initial_log_std = -0.7);

  std::size_t obs_dim() const { return actor.input_dim(); }
  std::size_t act_dim() const { return actor.output_dim(); }
  std::size_t parameter_count() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  bool all_finite() const;

  bool operator==(const PolicyParameters&) const = default;
};

struct PolicyOutput {
  std::vector<double> mean;
  std::vector<double> sigma;
  double value = 0.0;
};

PolicyOutput policy_forward(const PolicyParameters& params, std::span<const double> observation);

/// Diagonal Gaussian log-density of `x`.
double gaussian_log_prob(std::span<const double> mean, std::span<const double> log_std, std::span<const double> x);

struct SampledAction {
  ActionVector action;        // clipped into [0,1] for execution
  std::vector<double> raw;    // unclipped Gaussian sample
  double log_prob = 0.0;      // of `raw`
  double value = 0.0;
};

SampledAction sample_action(const PolicyParameters& params, std::span<const double> observation, Rng& rng);
/// clip(mean, 0, 1); used for evaluation and hybrid injection.
ActionVector deterministic_action(const PolicyParameters& params, std::span<const double> observation);

/// Gradients with the same shape as PolicyParameters.
struct PolicyGradient {
  std::vector<double> actor;
  std::vector<double> log_std;
  std::vector<double> critic;

  explicit PolicyGradient(const PolicyParameters& p);
  std::vector<double> flatten() const;
};

/// ∇ log π(raw | obs) over actor weights and log-σ, scaled by `scale` and
/// accumulated into `grad`.
void accumulate_log_prob_gradient(const PolicyParameters& params, std::span<const double> observation,
                                  std::span<const double> raw_action, double scale, PolicyGradient& grad);
/// ∇ V(obs) over critic weights, scaled and accumulated.
void accumulate_value_gradient(const PolicyParameters& params, std::span<const double> observation, double scale,
                               PolicyGradient& grad);

// Training ------------------------------------------------------------------

struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  std::size_t batch_size = 256;  // one of 192, 256, 512, 1024
  int epochs = 4;
  std::size_t minibatch_size = 64;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  /// Multiplier applied to rewards before advantage estimation; 0 selects
  /// one automatically from the environment's reward bound and horizon.
  double reward_scale = 0.0;
  std::vector<std::size_t> hidden = {64, 64};
  double initial_log_std = -0.7;
  int workers = 1;
  std::uint64_t total_steps = 0;  // agent decisions
  std::uint64_t seed = 0;

  void validate() const;
};

struct RolloutBatch {
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  std::vector<double> observations;  // size() × obs_dim
  std::vector<double> raw_actions;   // size() × act_dim
  std::vector<double> log_probs;
  std::vector<double> rewards;       // as returned by the environment
  std::vector<double> values;
  std::vector<char> dones;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> episode_returns;  // undiscounted, one per finished episode

  std::size_t size() const { return rewards.size(); }
  std::span<const double> observation(std::size_t k) const {
    return std::span<const double>(observations).subspan(k * obs_dim, obs_dim);
  }
  std::span<const double> raw_action(std::size_t k) const {
    return std::span<const double>(raw_actions).subspan(k * act_dim, act_dim);
  }
  bool operator==(const RolloutBatch&) const = default;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// δ_t = r_t + γ v_{t+1} (1 − done_t) − v_t,  A_t = δ_t + γλ (1 − done_t) A_{t+1}.
/// `last_value` bootstraps a trailing non-terminal transition.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const char> dones,
                      double gamma, double lambda, double last_value = 0.0);

/// min(ρA, clip(ρ, 1−ε, 1+ε)A).
double clipped_surrogate(double ratio, double advantage, double epsilon);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t steps = 0;
  std::uint64_t updates = 0;  // ppo_update calls, used to seed minibatch shuffles
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::size_t samples = 0;
};

/// Runs `epochs` passes of minibatch Adam on the clipped-surrogate loss.
/// Advantages in `batch` must already be computed; they are normalised to
/// zero mean / unit variance here.
UpdateStats ppo_update(PolicyParameters& params, AdamState& adam, const RolloutBatch& batch, const TrainConfig& cfg);

struct EnvFactory {
  std::function<std::unique_ptr<Env>()> make_env;
  std::function<EpisodeConfig(std::uint64_t episode_seed)> sample_episode;
};

/// Collects whole episodes until at least cfg.batch_size transitions are
/// gathered. Episode k draws its scenario and action noise from
/// (cfg.seed, iteration, k); workers take episodes round-robin and results
/// are merged in episode order.
RolloutBatch collect_rollouts(const EnvFactory& factory, const PolicyParameters& params, const TrainConfig& cfg,
                              std::uint64_t iteration = 0, double reward_scale = 1.0);

struct CurvePoint {
  std::uint64_t steps = 0;
  double mean_reward = 0.0;
  bool operator==(const CurvePoint&) const = default;
};
using RewardCurve = std::vector<CurvePoint>;

struct TrainResult {
  PolicyParameters params;
  RewardCurve curve;
};

using TrainProgress = std::function<void(const CurvePoint&, const UpdateStats&)>;

TrainResult train(const EnvFactory& factory, const TrainConfig& cfg, const TrainProgress& progress = {});

std::string reward_curve_to_csv(const RewardCurve& curve);

// Checkpoints ---------------------------------------------------------------

struct PolicyCheckpoint {
  PolicyParameters params;
  int agent = 1;                  // 1, 2 or 3
  std::optional<int> frame_skip;  // decision window in steps

  AgentKind kind() const { return agent == 1 ? AgentKind::Agent1 : AgentKind::Agent2; }
};

std::string checkpoint_to_json(const PolicyCheckpoint& ckpt);
PolicyCheckpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const PolicyCheckpoint& ckpt);
PolicyCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wdn
