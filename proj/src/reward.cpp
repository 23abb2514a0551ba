#include "hts/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace hts::reward {

void RewardWeights::validate() const {
  auto check = [](double a, double b) {
    if (a < 0.0 || b < 0.0 || !(a + b > 0.0))
      throw std::invalid_argument("RewardWeights: need alpha, beta >= 0 and alpha + beta > 0");
  };
  check(alpha, beta);
  for (const auto& [mode, ab] : context_adjust) check(ab.first, ab.second);
}

RewardWeights RewardWeights::for_mode(const std::string& mode) const {
  auto it = context_adjust.find(mode);
  if (it == context_adjust.end()) return *this;
  RewardWeights w = *this;
  w.alpha = it->second.first;
  w.beta = it->second.second;
  return w;
}

void InternalRewardTerms::validate() const {
  if (!(target_alignment >= 0.0 && target_alignment <= 1.0))
    throw std::invalid_argument("InternalRewardTerms: target_alignment must be in [0,1]");
  if (efficacy_bonus < 0.0 || transfer_bonus < 0.0)
    throw std::invalid_argument("InternalRewardTerms: bonuses must be nonnegative");
  if (!std::isfinite(target_alignment) || !std::isfinite(efficacy_bonus) ||
      !std::isfinite(transfer_bonus))
    throw std::invalid_argument("InternalRewardTerms: terms must be finite");
}

void FeedbackEvent::validate() const {
  if (observed_tick < emitted_tick)
    throw std::invalid_argument("FeedbackEvent: observed_tick < emitted_tick");
  if (!std::isfinite(value)) throw std::invalid_argument("FeedbackEvent: value must be finite");
}

double composite_reward(double external, const InternalRewardTerms& internal,
                        const RewardWeights& weights) {
  weights.validate();
  internal.validate();
  return weights.alpha * external + weights.beta * internal.total();
}

bool Constraint::satisfied_by(double outcome) const {
  switch (op) {
    case Op::Eq: return outcome == value;
    case Op::Le: return outcome <= value;
    case Op::Ge: return outcome >= value;
  }
  return false;
}

double target_alignment(const TargetDescriptor& expected, const OutcomeDescriptor& outcome) {
  if (expected.empty()) throw std::invalid_argument("target_alignment: empty expectation");
  std::size_t shared = 0, satisfied = 0;
  for (const auto& [key, constraint] : expected) {
    auto it = outcome.find(key);
    if (it == outcome.end()) continue;
    ++shared;
    if (constraint.satisfied_by(it->second)) ++satisfied;
  }
  if (shared == 0)
    throw std::invalid_argument("target_alignment: descriptors share no keys");
  return static_cast<double>(satisfied) / static_cast<double>(expected.size());
}

std::vector<double> credit_delayed(const domain::Trajectory& traj,
                                   const std::vector<FeedbackEvent>& events, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("credit_delayed: gamma must be in [0,1]");
  std::vector<double> credited;
  credited.reserve(traj.steps.size());
  for (const auto& step : traj.steps) credited.push_back(step.reward);
  for (const auto& ev : events) {
    ev.validate();
    if (ev.trajectory_id != traj.id)
      throw std::invalid_argument("credit_delayed: event references another trajectory");
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
      const long t = traj.steps[i].tick;
      if (t > ev.emitted_tick) continue;
      credited[i] += ev.value * std::pow(gamma, static_cast<double>(ev.emitted_tick - t));
    }
  }
  return credited;
}

}  // namespace hts::reward
