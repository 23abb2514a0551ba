#pragma once
// Runtime scheduling policy: linear-softmax activity selection with
// epsilon-mixed exploration, REINFORCE updates from credited returns, and
// trajectory curation. This is deliberately separate from the offline
// day-sequence forecaster; a forecaster prior can be added to the logits.

#include <algorithm>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "hts/domain.hpp"
#include "hts/numkit.hpp"
#include "hts/rng.hpp"

namespace hts::policy {

// Augmented state layout: [prev-action one-hot n | env 8 | K history blocks of n].
inline int state_dim(int n_actions, int history_k) {
  return (history_k + 1) * n_actions + 8;
}

struct PolicyParameters {
  num::Tensor W;  // [n_actions x state_dim]
  int history_k = 6;
  std::uint64_t registry_version = 0;
  std::uint64_t version = 0;  // bumped by every update

  int n_actions() const { return static_cast<int>(W.rows()); }
  int dim() const { return static_cast<int>(W.cols()); }

  static PolicyParameters zeros(int n_actions, int history_k,
                                std::uint64_t registry_version = 0);
};

// Grows W in place from its current action count to n_new: one zero logit row
// per new action and a zero column inserted at the end of every one-hot block,
// so logits of pre-existing actions are unchanged on any old-action state.
void extend_parameters(PolicyParameters& params, int n_new,
                       std::uint64_t registry_version);

struct ExplorationParams {
  double epsilon = 0.1;
  double forced_epsilon = 0.5;     // used while estimated value < value_threshold
  double value_threshold = -1e300; // default: gating off
  double decay = 1.0;              // multiplicative per update
  double min_epsilon = 0.0;

  void step_decay() { epsilon = std::max(min_epsilon, epsilon * decay); }
};

// Softmax over W * state. Auto-extends params first when the registry grew.
std::vector<double> policy_distribution(const std::vector<double>& state,
                                        PolicyParameters& params,
                                        const domain::ActivityRegistry& registry);

// (1 - eps) * pi + eps * uniform
inline std::vector<double> mixture_distribution(const std::vector<double>& pi, double eps) {
  std::vector<double> mix(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i)
    mix[i] = (1.0 - eps) * pi[i] + eps / pi.size();
  return mix;
}

struct Selection {
  domain::ActionId action = domain::kIdle;
  double probability = 0.0;  // exact epsilon-mixture probability of `action`
  double epsilon_used = 0.0;
  bool explored = false;  // sampled from the uniform branch
};

// recent_mean_return feeds the value gate: value estimate = max pi * mean return.
Selection select_activity(const std::vector<double>& state, PolicyParameters& params,
                          const domain::ActivityRegistry& registry,
                          const ExplorationParams& explore, rng::Stream& rng,
                          double recent_mean_return = 0.0);

// REINFORCE gradient of E[sum_t G_t] under the epsilon-mixture behavior
// distribution, as a [n x dim] buffer (ascent direction). Score weight per
// step: (1 - eps) * pi(a|s) / behavior_prob, which vanishes for eps = 1.
// use_baseline centers returns by their trajectory mean.
std::vector<double> policy_gradient_estimate(const domain::Trajectory& traj,
                                             PolicyParameters& params,
                                             const domain::ActivityRegistry& registry,
                                             bool use_baseline);

// Ascent step W += lr * grad; bumps the parameter version.
void reinforce_update(const domain::Trajectory& traj, PolicyParameters& params,
                      const domain::ActivityRegistry& registry, double lr,
                      bool use_baseline = true);

struct CuratedItem {
  std::uint64_t trajectory_id = 0;
  std::size_t step_index = 0;
  std::vector<double> state;
  domain::ActionId action = domain::kIdle;
  double credited_return = 0.0;
  bool good = false;
  bool synthetic = false;
  std::uint64_t registry_version = 0;
};

class CuratedDataset {
 public:
  // Appends one item per step, tagged by threshold; duplicate (trajectory id,
  // step) keys are rejected. Returns the number of items added.
  std::size_t curate(const domain::Trajectory& traj,
                     const std::vector<double>& credited_returns, double threshold,
                     std::uint64_t registry_version, bool synthetic = false);

  const std::vector<CuratedItem>& items() const { return items_; }
  std::uint64_t version() const { return version_; }

 private:
  std::vector<CuratedItem> items_;
  std::set<std::pair<std::uint64_t, std::size_t>> keys_;
  std::uint64_t version_ = 0;
};

}  // namespace hts::policy
