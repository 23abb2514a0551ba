#include "hts/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "hts/synthgen.hpp"

namespace hts::engine {

using domain::ActionId;

void EngineConfig::validate() const {
  if (max_ticks <= 0) throw std::invalid_argument("EngineConfig: max_ticks must be positive");
  if (idle_ticks_to_dream <= 0)
    throw std::invalid_argument("EngineConfig: idle_ticks_to_dream must be positive");
  if (resource_floor < 0.0 || resource_floor > 1.0)
    throw std::invalid_argument("EngineConfig: resource_floor must be in [0,1]");
  if (drain_per_active_tick < 0.0 || recover_per_rest_tick < 0.0)
    throw std::invalid_argument("EngineConfig: resource rates must be nonnegative");
  if (task_rate < 0.0 || task_rate > 1.0)
    throw std::invalid_argument("EngineConfig: task_rate must be in [0,1]");
  if (history_k <= 0) throw std::invalid_argument("EngineConfig: history_k must be positive");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("EngineConfig: gamma in [0,1]");
  weights.validate();
}

namespace {

std::uint64_t hash_state(const std::vector<double>& v) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the raw bits
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace

Engine::Engine(EngineConfig cfg, domain::ActivityRegistry registry)
    : cfg_(std::move(cfg)),
      registry_(std::move(registry)),
      params_(policy::PolicyParameters::zeros(static_cast<int>(registry_.size()),
                                              cfg_.history_k, registry_.version())),
      history_(cfg_.history_k),
      arrivals_(cfg_.seed, "engine.arrivals"),
      selection_(cfg_.seed, "engine.select"),
      weather_rng_(cfg_.seed, "engine.weather"),
      replay_rng_(cfg_.seed, "engine.replay") {
  cfg_.validate();
  if (registry_.size() == 0) throw std::invalid_argument("Engine: empty registry");
  trajectory_.id = cfg_.seed;
}

void Engine::enqueue_event(ExternalEvent ev) {
  ev.enqueue_tick = std::max(ev.enqueue_tick, tick_);
  auto pos = std::find_if(queue_.begin(), queue_.end(),
                          [&](const ExternalEvent& e) { return e.priority < ev.priority; });
  queue_.insert(pos, ev);
}

void Engine::register_activity(domain::ActivityDescriptor d) {
  registry_.register_activity(std::move(d));
  // params_ extend lazily on the next policy_distribution call
}

domain::EnvSnapshot Engine::env_at(long tick) {
  const int hour = static_cast<int>(tick % 24);
  const long day = tick / 24;
  if (hour == 0 && tick > 0) {
    static const auto trans = synthgen::GeneratorConfig::defaults(6).weather_transition;
    rng::Stream ws = weather_rng_.at(static_cast<std::uint64_t>(day));
    const auto& row = trans[weather_];
    weather_ = static_cast<int>(ws.next_index({row.begin(), row.end()}));
  }
  domain::EnvSnapshot env;
  env.weather = weather_;
  env.hour = hour;
  env.is_day = domain::is_day_hour(hour);
  env.temperature_c =
      synthgen::temperature_model({}, static_cast<int>(day % 365), hour, cfg_.seed);
  env.resource_level = resource_;
  return env;
}

void Engine::transition_mode() {
  if (mode_ == Mode::Dream) {
    if (!queue_.empty() || resource_ < cfg_.resource_floor) {
      mode_ = Mode::Active;
      idle_ticks_ = 0;
    }
  } else if (idle_ticks_ >= cfg_.idle_ticks_to_dream && resource_ >= cfg_.resource_floor &&
             queue_.empty() && pending_goals_.empty()) {
    mode_ = Mode::Dream;
    // one consolidation + replay burst per dream entry
    ConsolidationSummary summary = consolidate();
    if (!summary.empty()) {
      for (auto& traj : synthetic_replay(summary, 1, replay_rng_)) {
        std::vector<double> credited;
        for (const auto& s : traj.steps) credited.push_back(s.reward);
        curated_.curate(traj, credited, cfg_.curation_threshold, registry_.version(), true);
      }
    }
  }
}

TickLog Engine::tick() {
  // external arrivals land at the head of the tick, before mode transitions
  if (cfg_.task_rate > 0.0) {
    rng::Stream as = arrivals_.at(static_cast<std::uint64_t>(tick_));
    if (as.next_double() < cfg_.task_rate) enqueue_event({tick_, 0, 1.0});
  }
  transition_mode();

  domain::EnvSnapshot env = env_at(tick_);
  domain::CognitiveState state =
      domain::compose_state(last_action_, last_action_, env, history_,
                            static_cast<int>(registry_.size()), pending_goals_);

  rng::Stream sel_rng = selection_.at(static_cast<std::uint64_t>(tick_));
  policy::Selection sel = policy::select_activity(state.augmented, params_, registry_,
                                                  cfg_.explore, sel_rng, mean_return_);

  // execute the stub; failures are logged and penalized, never fatal
  bool failed = false;
  domain::ActivityOutcome outcome;
  const domain::ActivityDescriptor& desc = registry_.find(sel.action);
  if (desc.execute) {
    try {
      outcome = desc.execute(state);
      failed = !outcome.ok;
    } catch (const std::exception&) {
      failed = true;
    }
  }

  double external = 0.0;
  reward::InternalRewardTerms internal;
  if (mode_ == Mode::Active) {
    external += outcome.score;
    if (!queue_.empty() && sel.action == domain::kExecuteTask) {
      external += queue_.front().value;
      queue_.pop_front();
    }
  }
  if (failed) external += cfg_.failure_penalty;
  // a fulfilled intrinsic goal pays an efficacy bonus
  const std::string goal = std::string("practice ") + domain::action_name(sel.action);
  if (auto it = std::find(pending_goals_.begin(), pending_goals_.end(), goal);
      it != pending_goals_.end()) {
    pending_goals_.erase(it);
    internal.efficacy_bonus = 0.5;
  }
  const double r =
      reward::composite_reward(external, internal, cfg_.weights.for_mode(mode_name(mode_)));

  domain::TrajectoryStep step;
  step.observation = state.augmented;
  step.action = sel.action;
  step.reward = r;
  step.tick = tick_;
  step.behavior_prob = sel.probability;
  step.epsilon_used = sel.epsilon_used;
  step.explored = sel.explored;
  step.credited_return = r;
  trajectory_.steps.push_back(std::move(step));

  if (queue_.empty() && pending_goals_.empty())
    ++idle_ticks_;
  else
    idle_ticks_ = 0;

  if (mode_ == Mode::Dream || sel.action == domain::kRest)
    resource_ = std::min(1.0, resource_ + cfg_.recover_per_rest_tick);
  else
    resource_ = std::max(0.0, resource_ - cfg_.drain_per_active_tick);

  history_.push(sel.action);
  last_action_ = sel.action;
  ++return_samples_;
  mean_return_ += (r - mean_return_) / return_samples_;

  TickLog entry;
  entry.tick = tick_;
  entry.mode = mode_;
  entry.action = sel.action;
  entry.probability = sel.probability;
  entry.explored = sel.explored;
  entry.reward = r;
  entry.resource = resource_;
  entry.queue_size = queue_.size();
  entry.state_hash = hash_state(state.augmented);
  entry.execution_failed = failed;
  log_.push_back(entry);
  ++tick_;
  return entry;
}

std::vector<TickLog> Engine::run(long n_ticks) {
  std::vector<TickLog> out;
  out.reserve(n_ticks);
  for (long i = 0; i < n_ticks; ++i) out.push_back(tick());
  return out;
}

ConsolidationSummary Engine::consolidate(long retention_ticks,
                                         double prune_return_threshold) {
  ConsolidationSummary s;
  if (trajectory_.steps.empty()) return s;
  const int n = static_cast<int>(registry_.size());
  s.n_actions = n;
  s.transition_counts.assign(n, std::vector<long>(n, 0));
  const auto ids = registry_.action_ids();
  auto index_of = [&](ActionId a) {
    return static_cast<int>(std::find(ids.begin(), ids.end(), a) - ids.begin());
  };
  for (std::size_t i = 0; i + 1 < trajectory_.steps.size(); ++i) {
    if (trajectory_.steps[i + 1].tick != trajectory_.steps[i].tick + 1) continue;
    ++s.transition_counts[index_of(trajectory_.steps[i].action)]
                         [index_of(trajectory_.steps[i + 1].action)];
  }
  for (const auto& step : trajectory_.steps) {
    const int bucket = synthgen::hour_block(static_cast<int>(step.tick % 24));
    auto& counts = s.context_counts[bucket];
    if (counts.empty()) counts.assign(n, 0);
    ++counts[index_of(step.action)];
  }
  for (const auto& [bucket, counts] : s.context_counts) {
    const auto m = std::max_element(counts.begin(), counts.end());
    s.notes.push_back("block " + std::to_string(bucket) + ": modal action " +
                      domain::action_name(ids[m - counts.begin()]));
  }

  const std::size_t before = trajectory_.steps.size();
  if (retention_ticks >= 0) {
    std::vector<domain::TrajectoryStep> kept;
    kept.reserve(before);
    for (auto& step : trajectory_.steps) {
      const bool stale = step.tick < tick_ - retention_ticks;
      if (stale && std::fabs(step.credited_return) < prune_return_threshold) {
        archived_.push_back(std::move(step));  // archived, never destroyed
        ++s.pruned;
      } else {
        kept.push_back(std::move(step));
      }
    }
    trajectory_.steps = std::move(kept);
  }
  s.compression_ratio =
      before == 0 ? 1.0 : static_cast<double>(trajectory_.steps.size()) / before;
  return s;
}

std::vector<domain::Trajectory> Engine::synthetic_replay(const ConsolidationSummary& summary,
                                                         int n, rng::Stream& rng) const {
  if (n <= 0) throw std::invalid_argument("synthetic_replay: n must be positive");
  if (summary.empty()) throw std::invalid_argument("synthetic_replay: empty summary");
  const int na = summary.n_actions;
  const auto ids = registry_.action_ids();

  std::vector<double> marginal(na, 0.0);
  double total = 0.0;
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < na; ++b) {
      marginal[a] += summary.transition_counts[a][b];
      total += summary.transition_counts[a][b];
    }
  if (total <= 0.0) throw std::invalid_argument("synthetic_replay: no transitions recorded");
  for (double& v : marginal) v /= total;

  std::vector<domain::Trajectory> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    domain::Trajectory traj;
    traj.id = rng.next_u64();
    int cur = static_cast<int>(rng.next_index(marginal));
    for (int t = 0; t < 24; ++t) {
      domain::TrajectoryStep step;
      step.action = ids[cur];
      step.tick = t;
      traj.steps.push_back(std::move(step));
      double row_sum = 0.0;
      for (int b = 0; b < na; ++b) row_sum += summary.transition_counts[cur][b];
      if (row_sum <= 0.0) continue;  // absorbing: stay
      std::vector<double> row(na);
      for (int b = 0; b < na; ++b) row[b] = summary.transition_counts[cur][b] / row_sum;
      cur = static_cast<int>(rng.next_index(row));
    }
    out.push_back(std::move(traj));
  }
  return out;
}

domain::Trajectory Engine::counterfactual_replay(const CounterfactualSource& src) const {
  if (src.substitute_step >= src.trajectory.steps.size())
    throw std::invalid_argument("counterfactual_replay: step out of range");
  if (!registry_.contains(src.substitute_action))
    throw std::invalid_argument("counterfactual_replay: unknown substitute action");
  domain::Trajectory out = src.trajectory;
  out.id = src.trajectory.id ^ 0x5eedcafeull;
  auto& step = out.steps[src.substitute_step];
  step.action = src.substitute_action;
  // the replaced action's external outcome is unknowable offline; re-score
  // with zero external and zero internal terms under the dream-mode weights
  step.reward = reward::composite_reward(0.0, {}, cfg_.weights.for_mode("dream"));
  step.credited_return = step.reward;
  return out;
}

std::optional<std::string> Engine::propose_intrinsic_goal(
    const std::vector<double>& per_class_recall) {
  if (per_class_recall.size() != registry_.size())
    throw std::invalid_argument("propose_intrinsic_goal: recall vector size mismatch");
  const auto it = std::min_element(per_class_recall.begin(), per_class_recall.end());
  if (*it >= 1.0) return std::nullopt;  // nothing to practice
  const ActionId a = registry_.action_ids()[it - per_class_recall.begin()];
  std::string goal = std::string("practice ") + domain::action_name(a);
  if (std::find(pending_goals_.begin(), pending_goals_.end(), goal) != pending_goals_.end())
    return std::nullopt;  // dedup
  pending_goals_.push_back(goal);
  return goal;
}

}  // namespace hts::engine
