#include "hts/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hts/rng.hpp"

namespace hts::synthgen {

using domain::ActionId;
using domain::EnvSnapshot;

int hour_block(int hour) {
  if (hour < 0 || hour > 23) throw std::invalid_argument("hour_block: hour out of range");
  if (hour <= 5) return 0;
  if (hour <= 8) return 1;
  if (hour <= 11) return 2;
  if (hour <= 14) return 3;
  if (hour <= 18) return 4;
  return 5;
}

namespace {

std::vector<std::vector<double>> base_tables_6() {
  // rows over [Idle, Execute, Summarize, Imagine, Recall, Rest]
  return {
      {0.06, 0.03, 0.02, 0.02, 0.06, 0.81},  // 0-5 night
      {0.72, 0.10, 0.03, 0.03, 0.04, 0.08},  // 6-8 morning
      {0.04, 0.65, 0.12, 0.03, 0.09, 0.07},  // 9-11
      {0.03, 0.40, 0.32, 0.04, 0.13, 0.08},  // 12-14 midday
      {0.05, 0.12, 0.08, 0.55, 0.12, 0.08},  // 15-18 afternoon
      {0.05, 0.06, 0.12, 0.06, 0.51, 0.20},  // 19-23 evening
  };
}

std::vector<std::vector<double>> widen_to_7(std::vector<std::vector<double>> tables) {
  for (auto& row : tables) row.push_back(0.0);  // action 6 base probability is 0
  return tables;
}

std::vector<std::vector<double>> default_weather_modifiers(int n_actions) {
  std::vector<std::vector<double>> m(4, std::vector<double>(n_actions, 0.0));
  m[domain::kRainy][domain::kRecallPast] = 0.05;
  m[domain::kRainy][domain::kExecuteTask] = -0.05;
  m[domain::kWindy][domain::kIdle] = 0.03;
  m[domain::kWindy][domain::kImagineFuture] = -0.03;
  return m;
}

std::array<std::array<double, 4>, 4> default_weather_transition() {
  return {{{0.50, 0.20, 0.15, 0.15},
           {0.25, 0.45, 0.20, 0.10},
           {0.20, 0.30, 0.40, 0.10},
           {0.25, 0.20, 0.15, 0.40}}};
}

}  // namespace

GeneratorConfig GeneratorConfig::defaults(int n_actions) {
  if (n_actions != 6 && n_actions != 7)
    throw std::invalid_argument("GeneratorConfig::defaults: n_actions must be 6 or 7");
  GeneratorConfig cfg;
  cfg.n_actions = n_actions;
  cfg.base_tables = n_actions == 6 ? base_tables_6() : widen_to_7(base_tables_6());
  cfg.weather_transition = default_weather_transition();
  cfg.weather_modifiers = default_weather_modifiers(n_actions);
  return cfg;
}

GeneratorConfig GeneratorConfig::extended_defaults() {
  GeneratorConfig cfg = defaults(7);
  // An additive boost of 0.12 can never make action 6 modal in any cell, so a
  // greedy decoder would never emit it. The extended scenario uses a strong
  // boost instead: clamp-and-renormalize keeps the row valid, the trigger
  // cell becomes dominated by action 6, and every non-trigger cell matches
  // the 6-action tables exactly.
  cfg.action6_boost = 4.0;
  return cfg;
}

void GeneratorConfig::validate() const {
  if (n_days <= 0) throw std::invalid_argument("GeneratorConfig: n_days must be positive");
  if (n_actions != 6 && n_actions != 7)
    throw std::invalid_argument("GeneratorConfig: n_actions must be 6 or 7");
  auto check_tables = [&](const std::vector<std::vector<double>>& tables, const char* what) {
    if (tables.size() != kHourBlocks)
      throw std::invalid_argument(std::string("GeneratorConfig: ") + what + " needs " +
                                  std::to_string(kHourBlocks) + " rows");
    for (const auto& row : tables) {
      if (static_cast<int>(row.size()) != n_actions)
        throw std::invalid_argument(std::string("GeneratorConfig: ") + what + " row width mismatch");
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw std::invalid_argument(std::string("GeneratorConfig: ") + what +
                                                 " has a negative probability");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string("GeneratorConfig: ") + what + " row does not sum to 1");
    }
  };
  check_tables(base_tables, "base_tables");
  if (drift) check_tables(drift->base_tables, "drift base_tables");
  for (const auto& row : weather_transition) {
    double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::fabs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("GeneratorConfig: weather_transition row does not sum to 1");
  }
  if (weather_modifiers.size() != 4)
    throw std::invalid_argument("GeneratorConfig: weather_modifiers needs 4 rows");
  for (const auto& row : weather_modifiers)
    if (static_cast<int>(row.size()) != n_actions)
      throw std::invalid_argument("GeneratorConfig: weather_modifiers row width mismatch");
}

double temperature_model(const TempParams& p, int day_index, int hour, std::uint64_t seed) {
  if (day_index < 0 || hour < 0 || hour > 23)
    throw std::invalid_argument("temperature_model: invalid indices");
  double t = p.base_c + p.seasonal_amp * std::sin(2.0 * M_PI * day_index / 365.0) +
             p.daily_amp * std::sin(2.0 * M_PI * (hour - 9) / 24.0);
  if (p.noise_enabled) {
    rng::Stream s = rng::Stream(seed, "synthgen.temp").at(day_index, hour);
    t += p.noise_sigma * s.next_gaussian();
  }
  return t;
}

std::vector<double> step_distribution(int hour, const EnvSnapshot& env,
                                      const std::vector<ActionId>& recent_actions,
                                      const GeneratorConfig& cfg) {
  const int n = cfg.n_actions;
  std::vector<double> p = cfg.base_tables[hour_block(hour)];
  const auto& mod = cfg.weather_modifiers[env.weather];
  for (int a = 0; a < n; ++a) p[a] += mod[a];

  const std::size_t r = recent_actions.size();
  const bool exec_streak = r >= 2 && recent_actions[r - 1] == domain::kExecuteTask &&
                           recent_actions[r - 2] == domain::kExecuteTask;
  if (exec_streak) p[domain::kSummarize] += cfg.exec_streak_boost;

  if (n == 7) {
    const bool trigger = hour >= 12 && hour <= 14 && env.weather == domain::kSunny &&
                         env.temperature_c > cfg.action6_temp_threshold_c;
    if (trigger) {
      p[domain::kRecallImportant] += cfg.action6_boost;
      p[domain::kIdle] -= cfg.action6_boost / 2.0;
      p[domain::kRecallPast] -= cfg.action6_boost / 2.0;
    }
    if (r >= 1 && recent_actions[r - 1] == domain::kRecallImportant)
      p[domain::kRecallImportant] += cfg.action6_self_boost;
  }

  double sum = 0.0;
  for (double& v : p) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (sum <= 0.0) throw std::runtime_error("step_distribution: degenerate distribution");
  for (double& v : p) v /= sum;
  return p;
}

std::vector<domain::DayRecord> generate_dataset(const GeneratorConfig& cfg) {
  cfg.validate();
  rng::Stream root(cfg.seed, "synthgen");
  rng::Stream weather_stream = root.labeled("weather");
  rng::Stream action_stream = root.labeled("action");

  std::vector<domain::DayRecord> days;
  days.reserve(cfg.n_days);
  int weather = 0;
  std::vector<ActionId> recent;  // most recent last, at most 2 kept

  GeneratorConfig effective = cfg;
  for (int day = 0; day < cfg.n_days; ++day) {
    if (cfg.drift && day == cfg.drift->day_index) effective.base_tables = cfg.drift->base_tables;
    {
      rng::Stream ws = weather_stream.at(day);
      if (day == 0) {
        weather = static_cast<int>(ws.next_below(4));
      } else {
        const auto& row = cfg.weather_transition[weather];
        weather = static_cast<int>(ws.next_index({row.begin(), row.end()}));
      }
    }
    domain::DayRecord rec;
    rec.day_index = day;
    rec.hours.reserve(24);
    for (int hour = 0; hour < 24; ++hour) {
      EnvSnapshot env;
      env.weather = weather;
      env.hour = hour;
      env.is_day = domain::is_day_hour(hour);
      env.temperature_c = temperature_model(cfg.temp, day, hour, cfg.seed);
      env.resource_level = 1.0;

      std::vector<double> dist = step_distribution(hour, env, recent, effective);
      rng::Stream as = action_stream.at(day, hour);
      ActionId a = static_cast<ActionId>(as.next_index(dist));

      rec.hours.push_back({day, env, a});
      recent.push_back(a);
      if (recent.size() > 2) recent.erase(recent.begin());
    }
    days.push_back(std::move(rec));
  }
  return days;
}

SplitSets split_dataset(int n_days, const SplitSpec& spec) {
  if (n_days <= spec.history_days)
    throw std::invalid_argument("split_dataset: n_days must exceed history_days");
  const int total = n_days - spec.history_days;
  int train = spec.train_days, val = spec.val_days, test = spec.test_days;
  if (train == 0 && val == 0 && test == 0) {
    if (total > 540) {
      test = 270;
      val = 270;
    } else {
      test = std::max(1, total * 15 / 100);
      val = test;
    }
    train = total - val - test;
  }
  if (train <= 0 || val < 0 || test < 0 || train + val + test != total)
    throw std::invalid_argument("split_dataset: split counts inconsistent with n_days (" +
                                std::to_string(train) + "+" + std::to_string(val) + "+" +
                                std::to_string(test) + " != " + std::to_string(total) + ")");
  SplitSets s;
  s.history_days = spec.history_days;
  for (int t = spec.history_days; t < n_days; ++t) {
    const int k = t - spec.history_days;
    if (k < train)
      s.train_targets.push_back(t);
    else if (k < train + val)
      s.val_targets.push_back(t);
    else
      s.test_targets.push_back(t);
  }
  return s;
}

}  // namespace hts::synthgen
