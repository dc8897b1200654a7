#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "wdn/policy.hpp"

namespace wdn::testing {

struct GradCheck {
  double max_rel_log_prob = 0.0;
  double max_rel_value = 0.0;
};

inline double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

// Random small network (dims <= 8), random weights, central differences with h = 1e-5.
inline GradCheck gradient_check(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, 8), adim(1, 6);
  std::normal_distribution<double> w(0.0, 0.6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t obs_dim = dim(rng), act_dim = adim(rng);
  const std::vector<std::size_t> hidden{dim(rng), dim(rng)};
  auto p = PolicyParameters::zeros(obs_dim, act_dim, hidden);
  auto flat = p.flatten();
  for (double& x : flat) x = w(rng);
  p.assign(flat);
  std::vector<double> obs(obs_dim), raw(act_dim);
  for (double& x : obs) x = u(rng);
  for (double& x : raw) x = 0.5 + u(rng);

  PolicyGradient g(p);
  accumulate_log_prob_gradient(p, obs, raw, 1.0, g);
  accumulate_value_gradient(p, obs, 1.0, g);

  const double h = 1e-5;
  auto logp = [&](const PolicyParameters& q) { return gaussian_log_prob(policy_forward(q, obs).mean, q.log_std, raw); };
  auto value = [&](const PolicyParameters& q) { return policy_forward(q, obs).value; };

  GradCheck r;
  for (std::size_t k = 0; k < p.actor.parameter_count(); ++k) {
    auto a = p, b = p;
    a.actor.parameters()[k] += h;
    b.actor.parameters()[k] -= h;
    r.max_rel_log_prob = std::max(r.max_rel_log_prob, rel_err(g.actor[k], (logp(a) - logp(b)) / (2 * h)));
  }
  for (std::size_t k = 0; k < act_dim; ++k) {
    auto a = p, b = p;
    a.log_std[k] += h;
    b.log_std[k] -= h;
    r.max_rel_log_prob = std::max(r.max_rel_log_prob, rel_err(g.log_std[k], (logp(a) - logp(b)) / (2 * h)));
  }
  for (std::size_t k = 0; k < p.critic.parameter_count(); ++k) {
    auto a = p, b = p;
    a.critic.parameters()[k] += h;
    b.critic.parameters()[k] -= h;
    r.max_rel_value = std::max(r.max_rel_value, rel_err(g.critic[k], (value(a) - value(b)) / (2 * h)));
  }
  return r;
}

}  // namespace wdn::testing
