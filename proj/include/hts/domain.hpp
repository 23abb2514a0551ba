#pragma once
// Core data model shared by every other module: actions, environment
// snapshots, cognitive state, the activity registry and feature encoding.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hts::domain {

using ActionId = int;

inline constexpr ActionId kIdle = 0;
inline constexpr ActionId kExecuteTask = 1;
inline constexpr ActionId kSummarize = 2;
inline constexpr ActionId kImagineFuture = 3;
inline constexpr ActionId kRecallPast = 4;
inline constexpr ActionId kRest = 5;
inline constexpr ActionId kRecallImportant = 6;

inline constexpr int kWeatherCount = 4;  // 0=Sunny, 1=Cloudy, 2=Rainy, 3=Windy
inline constexpr int kSunny = 0;
inline constexpr int kCloudy = 1;
inline constexpr int kRainy = 2;
inline constexpr int kWindy = 3;

const char* action_name(ActionId id);
const char* weather_name(int weather);

inline bool is_day_hour(int hour) { return hour >= 6 && hour < 18; }

struct EnvSnapshot {
  int weather = kSunny;
  double temperature_c = 15.0;
  int hour = 0;
  bool is_day = false;
  double resource_level = 1.0;  // simulated internal status, in [0, 1]

  bool operator==(const EnvSnapshot&) const = default;
};

struct HourRecord {
  int day_index = 0;
  EnvSnapshot env;
  ActionId action = kIdle;

  bool operator==(const HourRecord&) const = default;
};

struct DayRecord {
  int day_index = 0;
  std::vector<HourRecord> hours;  // exactly 24, hours 0..23 in order

  bool operator==(const DayRecord&) const = default;
};

// Fixed-length window of the most recent K actions; oldest dropped on push.
class HistoryWindow {
 public:
  explicit HistoryWindow(std::size_t k, ActionId fill = kIdle) : actions_(k, fill) {
    if (k == 0) throw std::invalid_argument("HistoryWindow: K must be positive");
  }

  void push(ActionId a) {
    actions_.pop_front();
    actions_.push_back(a);
  }

  std::size_t size() const { return actions_.size(); }
  ActionId at(std::size_t i) const { return actions_[i]; }  // 0 = oldest
  std::vector<ActionId> as_vector() const { return {actions_.begin(), actions_.end()}; }

  bool operator==(const HistoryWindow&) const = default;

 private:
  std::deque<ActionId> actions_;
};

// Composite thinking state: current mode, context, last action and self-data,
// plus the augmented feature embedding fed to the policy.
struct CognitiveState {
  ActionId macro_state = kIdle;
  EnvSnapshot context;
  ActionId last_action = kIdle;
  double resource_level = 1.0;
  std::vector<std::string> pending_goals;
  std::vector<double> augmented;  // encode(env) ++ history_embedding

  bool operator==(const CognitiveState&) const = default;
};

// Outcome of an activity's execution stub.
struct ActivityOutcome {
  bool ok = true;
  double score = 0.0;
};

struct ActivityDescriptor {
  enum class Group { Macro, Micro };

  ActionId action = kIdle;
  std::string name;
  std::vector<double> params;  // opaque per-activity parameter block
  double cost = 0.0;
  Group group = Group::Macro;
  // Execution stub; no real actuation happens here. May be empty.
  std::function<ActivityOutcome(const CognitiveState&)> execute;
};

// Mutable set of registered activities, versioned on every change.
class ActivityRegistry {
 public:
  // Registry with the six baseline activities (or seven when n_actions == 7).
  static ActivityRegistry standard(int n_actions);

  void register_activity(ActivityDescriptor d);
  void remove_activity(ActionId action);

  bool contains(ActionId action) const;
  const ActivityDescriptor& find(ActionId action) const;
  std::size_t size() const { return activities_.size(); }
  std::uint64_t version() const { return version_; }
  const std::vector<ActivityDescriptor>& activities() const { return activities_; }

  // Registered action ids in ascending order.
  std::vector<ActionId> action_ids() const;

 private:
  std::vector<ActivityDescriptor> activities_;
  std::uint64_t version_ = 0;
};

struct TrajectoryStep {
  std::vector<double> observation;
  ActionId action = kIdle;
  double reward = 0.0;
  long tick = 0;
  // bookkeeping used by the policy-gradient and curation paths
  double behavior_prob = 1.0;
  double epsilon_used = 0.0;
  bool explored = false;
  double credited_return = 0.0;
};

struct Trajectory {
  std::uint64_t id = 0;
  std::vector<TrajectoryStep> steps;
};

// [one-hot prev action (n) | one-hot weather (4) | (T-15)/15 | is_day | sin | cos]
// length = n_actions + 8; prev_action = nullopt gives an all-zero action block.
std::vector<double> encode_hour_features(int hour, const EnvSnapshot& env,
                                         std::optional<ActionId> prev_action,
                                         int n_actions);

// Environment-only tail of encode_hour_features (weather one-hot, temperature,
// is_day, sin, cos): 8 values.
std::vector<double> encode_env_features(int hour, const EnvSnapshot& env);

inline double normalize_temperature(double t_c) { return (t_c - 15.0) / 15.0; }

// Concatenated one-hot blocks, oldest first; length K * n_actions.
std::vector<double> history_embedding(const HistoryWindow& window, int n_actions);

// (sigma_t, s'_t): cognitive state whose `augmented` field concatenates the
// env encoding with the history embedding. Deterministic on equal inputs.
CognitiveState compose_state(ActionId macro_state, ActionId last_action,
                             const EnvSnapshot& env, const HistoryWindow& history,
                             int n_actions,
                             const std::vector<std::string>& pending_goals = {});

}  // namespace hts::domain
