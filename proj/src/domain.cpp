#include "hts/domain.hpp"

#include <algorithm>
#include <cmath>

namespace hts::domain {

const char* action_name(ActionId id) {
  switch (id) {
    case kIdle: return "Idle";
    case kExecuteTask: return "Execute a Task";
    case kSummarize: return "Summarize the Experience";
    case kImagineFuture: return "Imagine the Future";
    case kRecallPast: return "Recall the Past";
    case kRest: return "Rest";
    case kRecallImportant: return "Recalling What is Important for Current";
    default: throw std::invalid_argument("action_name: unknown action id " + std::to_string(id));
  }
}

const char* weather_name(int weather) {
  switch (weather) {
    case kSunny: return "Sunny";
    case kCloudy: return "Cloudy";
    case kRainy: return "Rainy";
    case kWindy: return "Windy";
    default: throw std::invalid_argument("weather_name: unknown weather id " + std::to_string(weather));
  }
}

ActivityRegistry ActivityRegistry::standard(int n_actions) {
  if (n_actions != 6 && n_actions != 7)
    throw std::invalid_argument("ActivityRegistry::standard: n_actions must be 6 or 7");
  ActivityRegistry reg;
  for (ActionId a = 0; a < n_actions; ++a) {
    ActivityDescriptor d;
    d.action = a;
    d.name = action_name(a);
    d.cost = (a == kRest || a == kIdle) ? 0.0 : 1.0;
    d.group = ActivityDescriptor::Group::Macro;
    reg.register_activity(std::move(d));
  }
  return reg;
}

void ActivityRegistry::register_activity(ActivityDescriptor d) {
  if (contains(d.action))
    throw std::invalid_argument("register_activity: duplicate action id " + std::to_string(d.action));
  if (!std::isfinite(d.cost) || d.cost < 0.0)
    throw std::invalid_argument("register_activity: cost must be finite and >= 0");
  activities_.push_back(std::move(d));
  std::sort(activities_.begin(), activities_.end(),
            [](const ActivityDescriptor& a, const ActivityDescriptor& b) { return a.action < b.action; });
  ++version_;
}

void ActivityRegistry::remove_activity(ActionId action) {
  auto it = std::find_if(activities_.begin(), activities_.end(),
                         [&](const ActivityDescriptor& d) { return d.action == action; });
  if (it == activities_.end())
    throw std::invalid_argument("remove_activity: action id " + std::to_string(action) + " not registered");
  if (activities_.size() == 1)
    throw std::invalid_argument("remove_activity: registry must retain at least one activity");
  activities_.erase(it);
  ++version_;
}

bool ActivityRegistry::contains(ActionId action) const {
  return std::any_of(activities_.begin(), activities_.end(),
                     [&](const ActivityDescriptor& d) { return d.action == action; });
}

const ActivityDescriptor& ActivityRegistry::find(ActionId action) const {
  for (const auto& d : activities_)
    if (d.action == action) return d;
  throw std::invalid_argument("ActivityRegistry::find: action id " + std::to_string(action) + " not registered");
}

std::vector<ActionId> ActivityRegistry::action_ids() const {
  std::vector<ActionId> ids;
  ids.reserve(activities_.size());
  for (const auto& d : activities_) ids.push_back(d.action);
  return ids;  // kept sorted by register_activity
}

std::vector<double> encode_env_features(int hour, const EnvSnapshot& env) {
  if (hour < 0 || hour > 23)
    throw std::invalid_argument("encode_env_features: hour out of range: " + std::to_string(hour));
  if (env.weather < 0 || env.weather >= kWeatherCount)
    throw std::invalid_argument("encode_env_features: weather out of range: " + std::to_string(env.weather));
  std::vector<double> f(8, 0.0);
  f[env.weather] = 1.0;
  f[4] = normalize_temperature(env.temperature_c);
  f[5] = env.is_day ? 1.0 : 0.0;
  f[6] = std::sin(2.0 * M_PI * hour / 24.0);
  f[7] = std::cos(2.0 * M_PI * hour / 24.0);
  return f;
}

std::vector<double> encode_hour_features(int hour, const EnvSnapshot& env,
                                         std::optional<ActionId> prev_action, int n_actions) {
  if (n_actions != 6 && n_actions != 7)
    throw std::invalid_argument("encode_hour_features: n_actions must be 6 or 7");
  if (prev_action && (*prev_action < 0 || *prev_action >= n_actions))
    throw std::invalid_argument("encode_hour_features: prev_action out of range: " +
                                std::to_string(*prev_action));
  std::vector<double> f(static_cast<std::size_t>(n_actions) + 8, 0.0);
  if (prev_action) f[*prev_action] = 1.0;
  auto env_f = encode_env_features(hour, env);
  std::copy(env_f.begin(), env_f.end(), f.begin() + n_actions);
  return f;
}

std::vector<double> history_embedding(const HistoryWindow& window, int n_actions) {
  std::vector<double> e(window.size() * static_cast<std::size_t>(n_actions), 0.0);
  for (std::size_t i = 0; i < window.size(); ++i) {
    ActionId a = window.at(i);
    if (a < 0 || a >= n_actions)
      throw std::invalid_argument("history_embedding: action id out of range: " + std::to_string(a));
    e[i * n_actions + a] = 1.0;
  }
  return e;
}

CognitiveState compose_state(ActionId macro_state, ActionId last_action,
                             const EnvSnapshot& env, const HistoryWindow& history,
                             int n_actions, const std::vector<std::string>& pending_goals) {
  CognitiveState s;
  s.macro_state = macro_state;
  s.context = env;
  s.last_action = last_action;
  s.resource_level = env.resource_level;
  s.pending_goals = pending_goals;
  s.augmented = encode_hour_features(env.hour, env, last_action, n_actions);
  auto h = history_embedding(history, n_actions);
  s.augmented.insert(s.augmented.end(), h.begin(), h.end());
  return s;
}

}  // namespace hts::domain
