#pragma once
// Composite reward (weighted external + internal terms) and eligibility-style
// credit assignment of delayed feedback onto trajectory steps.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hts/domain.hpp"

namespace hts::reward {

struct RewardWeights {
  double alpha = 0.5;  // external weight
  double beta = 0.5;   // internal weight
  // optional per-engine-mode overrides ("active", "dream")
  std::map<std::string, std::pair<double, double>> context_adjust;

  void validate() const;
  RewardWeights for_mode(const std::string& mode) const;
};

struct InternalRewardTerms {
  double target_alignment = 0.0;  // in [0, 1]
  double efficacy_bonus = 0.0;    // >= 0
  double transfer_bonus = 0.0;    // >= 0

  double total() const { return target_alignment + efficacy_bonus + transfer_bonus; }
  void validate() const;
};

struct FeedbackEvent {
  long emitted_tick = 0;
  long observed_tick = 0;  // emitted + delay
  double value = 0.0;
  std::uint64_t trajectory_id = 0;

  void validate() const;
};

double composite_reward(double external, const InternalRewardTerms& internal,
                        const RewardWeights& weights);

// Expected-side constraint on one descriptor key.
struct Constraint {
  enum class Op { Eq, Le, Ge };
  Op op = Op::Eq;
  double value = 0.0;

  bool satisfied_by(double outcome) const;
};

using TargetDescriptor = std::map<std::string, Constraint>;
using OutcomeDescriptor = std::map<std::string, double>;

// Fraction of expected constraints the outcome satisfies. Keys present in the
// expectation but absent from the outcome count as violated; fully disjoint
// key sets are an error.
double target_alignment(const TargetDescriptor& expected, const OutcomeDescriptor& outcome);

// Each event of value v emitted at tick t_e adds v * gamma^(t_e - t) to every
// step with tick t <= t_e; each step keeps its immediate reward. Returns the
// per-step credited returns in step order.
std::vector<double> credit_delayed(const domain::Trajectory& traj,
                                   const std::vector<FeedbackEvent>& events, double gamma);

}  // namespace hts::reward
