#pragma once
// Heartbeat engine: a deterministic logical-tick loop that composes the
// augmented state, selects and executes one activity per tick, applies the
// composite reward, and manages Active/Dream transitions with consolidation,
// synthetic replay, and intrinsic goal proposal during Dream.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hts/domain.hpp"
#include "hts/policy.hpp"
#include "hts/reward.hpp"
#include "hts/rng.hpp"

namespace hts::engine {

enum class Mode { Active, Dream };
inline const char* mode_name(Mode m) { return m == Mode::Active ? "active" : "dream"; }

struct EngineConfig {
  long max_ticks = 10000;
  int idle_ticks_to_dream = 3;
  double resource_floor = 0.2;
  double drain_per_active_tick = 0.01;
  double recover_per_rest_tick = 0.03;
  double task_rate = 0.05;  // auto-arrival probability per tick (0 = feed only)
  int history_k = 6;
  double gamma = 0.9;
  double curation_threshold = 0.0;
  double failure_penalty = -1.0;
  policy::ExplorationParams explore;
  reward::RewardWeights weights;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ExternalEvent {
  long enqueue_tick = 0;
  int priority = 0;
  double value = 1.0;
};

struct TickLog {
  long tick = 0;
  Mode mode = Mode::Active;
  domain::ActionId action = domain::kIdle;
  double probability = 0.0;
  bool explored = false;
  double reward = 0.0;
  double resource = 1.0;
  std::size_t queue_size = 0;
  std::uint64_t state_hash = 0;
  bool execution_failed = false;
};

struct ConsolidationSummary {
  int n_actions = 0;
  std::vector<std::vector<long>> transition_counts;  // n x n
  // context bucket = hour block (from tick % 24); per-bucket action counts
  std::map<int, std::vector<long>> context_counts;
  double compression_ratio = 1.0;
  std::size_t pruned = 0;
  std::vector<std::string> notes;

  bool empty() const { return transition_counts.empty(); }
};

struct CounterfactualSource {
  domain::Trajectory trajectory;
  std::size_t substitute_step = 0;
  domain::ActionId substitute_action = domain::kIdle;
};

class Engine {
 public:
  Engine(EngineConfig cfg, domain::ActivityRegistry registry);

  void enqueue_event(ExternalEvent ev);
  // Adds an activity mid-run; policy parameters auto-extend on next selection.
  void register_activity(domain::ActivityDescriptor d);

  TickLog tick();
  std::vector<TickLog> run(long n_ticks);

  Mode mode() const { return mode_; }
  long current_tick() const { return tick_; }
  double resource() const { return resource_; }
  const domain::Trajectory& trajectory() const { return trajectory_; }
  const std::vector<TickLog>& log() const { return log_; }
  const domain::ActivityRegistry& registry() const { return registry_; }
  policy::PolicyParameters& policy_params() { return params_; }
  const std::vector<std::string>& pending_goals() const { return pending_goals_; }
  const policy::CuratedDataset& curated() const { return curated_; }
  const std::vector<domain::TrajectoryStep>& archived() const { return archived_; }

  // Dream-phase operations (also callable directly for tests).
  ConsolidationSummary consolidate(long retention_ticks = -1,
                                   double prune_return_threshold = 0.0);
  std::vector<domain::Trajectory> synthetic_replay(const ConsolidationSummary& summary,
                                                   int n, rng::Stream& rng) const;
  domain::Trajectory counterfactual_replay(const CounterfactualSource& src) const;
  // Emits "practice <action>" for the lowest-recall class; dedup; nothing at 1.0.
  std::optional<std::string> propose_intrinsic_goal(
      const std::vector<double>& per_class_recall);

 private:
  void transition_mode();
  domain::EnvSnapshot env_at(long tick);

  EngineConfig cfg_;
  domain::ActivityRegistry registry_;
  policy::PolicyParameters params_;
  Mode mode_ = Mode::Active;
  long tick_ = 0;
  int idle_ticks_ = 0;
  double resource_ = 1.0;
  int weather_ = domain::kSunny;
  domain::HistoryWindow history_;
  domain::ActionId last_action_ = domain::kIdle;
  std::deque<ExternalEvent> queue_;
  std::vector<std::string> pending_goals_;
  domain::Trajectory trajectory_;
  std::vector<domain::TrajectoryStep> archived_;
  std::vector<TickLog> log_;
  policy::CuratedDataset curated_;
  double mean_return_ = 0.0;
  long return_samples_ = 0;
  rng::Stream arrivals_, selection_, weather_rng_, replay_rng_;
};

}  // namespace hts::engine
