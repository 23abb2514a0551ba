#include "hts/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace hts::policy {

PolicyParameters PolicyParameters::zeros(int n_actions, int history_k,
                                         std::uint64_t registry_version) {
  if (n_actions <= 0 || history_k <= 0)
    throw std::invalid_argument("PolicyParameters: n_actions and history_k must be positive");
  PolicyParameters p;
  p.W = num::Tensor({static_cast<std::size_t>(n_actions),
                     static_cast<std::size_t>(state_dim(n_actions, history_k))});
  p.history_k = history_k;
  p.registry_version = registry_version;
  return p;
}

void extend_parameters(PolicyParameters& params, int n_new, std::uint64_t registry_version) {
  const int n_old = params.n_actions();
  if (n_new < n_old) throw std::invalid_argument("extend_parameters: registry shrank");
  if (n_new == n_old) {
    params.registry_version = registry_version;
    return;
  }
  const int k = params.history_k;
  num::Tensor W({static_cast<std::size_t>(n_new),
                 static_cast<std::size_t>(state_dim(n_new, k))});
  auto new_col = [&](int old_col) {
    if (old_col < n_old) return old_col;                       // prev-action block
    if (old_col < n_old + 8) return old_col - n_old + n_new;   // env tail
    const int rel = old_col - n_old - 8;
    const int block = rel / n_old, j = rel % n_old;
    return n_new + 8 + block * n_new + j;                      // history blocks
  };
  for (int r = 0; r < n_old; ++r)
    for (int c = 0; c < params.dim(); ++c)
      W(r, new_col(c)) = params.W(r, c);
  params.W = std::move(W);
  params.registry_version = registry_version;
  ++params.version;
}

std::vector<double> policy_distribution(const std::vector<double>& state,
                                        PolicyParameters& params,
                                        const domain::ActivityRegistry& registry) {
  if (params.registry_version != registry.version() ||
      params.n_actions() != static_cast<int>(registry.size()))
    extend_parameters(params, static_cast<int>(registry.size()), registry.version());
  const int n = params.n_actions();
  if (static_cast<int>(state.size()) != params.dim())
    throw std::invalid_argument("policy_distribution: state dimension mismatch");
  for (double w : params.W.data)
    if (!std::isfinite(w)) throw std::invalid_argument("policy_distribution: non-finite weights");
  std::vector<double> logits(n);
  num::matvec(params.W.data.data(), state.data(), logits.data(), n, state.size());
  return num::softmax(logits);
}

Selection select_activity(const std::vector<double>& state, PolicyParameters& params,
                          const domain::ActivityRegistry& registry,
                          const ExplorationParams& explore, rng::Stream& rng,
                          double recent_mean_return) {
  std::vector<double> pi = policy_distribution(state, params, registry);
  const int n = static_cast<int>(pi.size());
  double eps = explore.epsilon;
  const double value_estimate = *std::max_element(pi.begin(), pi.end()) * recent_mean_return;
  if (value_estimate < explore.value_threshold) eps = explore.forced_epsilon;

  Selection sel;
  sel.epsilon_used = eps;
  std::size_t idx;
  if (rng.next_double() < eps) {
    sel.explored = true;
    idx = rng.next_below(n);
  } else {
    idx = rng.next_index(pi);
  }
  sel.action = registry.action_ids()[idx];
  sel.probability = (1.0 - eps) * pi[idx] + eps / n;
  return sel;
}

std::vector<double> policy_gradient_estimate(const domain::Trajectory& traj,
                                             PolicyParameters& params,
                                             const domain::ActivityRegistry& registry,
                                             bool use_baseline) {
  const auto ids = registry.action_ids();
  double baseline = 0.0;
  if (use_baseline && !traj.steps.empty()) {
    for (const auto& s : traj.steps) baseline += s.credited_return;
    baseline /= traj.steps.size();
  }
  std::vector<double> grad;
  for (const auto& step : traj.steps) {
    std::vector<double> pi = policy_distribution(step.observation, params, registry);
    if (grad.empty()) grad.assign(params.W.size(), 0.0);
    const int n = static_cast<int>(pi.size());
    const int dim = params.dim();
    const auto it = std::find(ids.begin(), ids.end(), step.action);
    if (it == ids.end())
      throw std::invalid_argument("policy_gradient_estimate: action not registered");
    const int a = static_cast<int>(it - ids.begin());
    if (step.behavior_prob <= 0.0)
      throw std::invalid_argument("policy_gradient_estimate: missing behavior probability");
    const double w = (1.0 - step.epsilon_used) * pi[a] / step.behavior_prob;
    const double g = step.credited_return - baseline;
    const double scale = w * g;
    if (scale == 0.0) continue;
    // d log pi(a|s) / dW_r = (1[r==a] - pi_r) * s
    for (int r = 0; r < n; ++r) {
      const double coeff = scale * ((r == a ? 1.0 : 0.0) - pi[r]);
      if (coeff != 0.0)
        num::axpy(coeff, step.observation.data(), grad.data() + r * dim, dim);
    }
  }
  if (grad.empty()) grad.assign(params.W.size(), 0.0);
  return grad;
}

void reinforce_update(const domain::Trajectory& traj, PolicyParameters& params,
                      const domain::ActivityRegistry& registry, double lr,
                      bool use_baseline) {
  std::vector<double> grad = policy_gradient_estimate(traj, params, registry, use_baseline);
  num::axpy(lr, grad.data(), params.W.data.data(), params.W.size());
  ++params.version;
}

std::size_t CuratedDataset::curate(const domain::Trajectory& traj,
                                   const std::vector<double>& credited_returns,
                                   double threshold, std::uint64_t registry_version,
                                   bool synthetic) {
  if (credited_returns.size() != traj.steps.size())
    throw std::invalid_argument("curate: credited returns length mismatch");
  std::size_t added = 0;
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    if (!std::isfinite(credited_returns[i]))
      throw std::invalid_argument("curate: non-finite credited return");
    if (!keys_.insert({traj.id, i}).second) continue;  // duplicate-key rejection
    CuratedItem item;
    item.trajectory_id = traj.id;
    item.step_index = i;
    item.state = traj.steps[i].observation;
    item.action = traj.steps[i].action;
    item.credited_return = credited_returns[i];
    item.good = credited_returns[i] >= threshold;
    item.synthetic = synthetic;
    item.registry_version = registry_version;
    items_.push_back(std::move(item));
    ++added;
  }
  if (added > 0) ++version_;
  return added;
}

}  // namespace hts::policy
