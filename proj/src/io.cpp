#include "hts/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hts::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::runtime_error io_error(const fs::path& p, const std::string& what) {
  return std::runtime_error(p.string() + ": " + what);
}

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, mode);
  if (!f) throw io_error(p, "cannot open for writing");
  return f;
}

std::ifstream open_in(const fs::path& p, std::ios::openmode mode = std::ios::in) {
  std::ifstream f(p, mode);
  if (!f) throw io_error(p, "cannot open for reading");
  return f;
}

void check_major(const json& header, const char* key, int expected, const fs::path& p) {
  if (!header.contains(key) || !header.contains("major"))
    throw io_error(p, "missing version header");
  if (header["major"].get<int>() != expected)
    throw io_error(p, "unsupported major version " + header["major"].dump());
}

// doubles are written little-endian; byte-swap on big-endian hosts
void write_doubles(std::ofstream& f, const std::vector<double>& v) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    f.write(reinterpret_cast<const char*>(v.data()), v.size() * 8);
  } else {
    for (double d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      char out[8];
      for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      f.write(out, 8);
    }
  }
}

void read_doubles(std::ifstream& f, std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    f.read(reinterpret_cast<char*>(v.data()), v.size() * 8);
  } else {
    for (double& d : v) {
      char in[8];
      f.read(in, 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
      std::memcpy(&d, &bits, 8);
    }
  }
  if (!f) throw std::runtime_error("checkpoint blob: truncated read");
}

json config_to_json(const forecast::ForecasterConfig& c) {
  return {{"hidden_dim", c.hidden_dim},     {"encoder_layers", c.encoder_layers},
          {"history_days", c.history_days}, {"n_heads", c.n_heads},
          {"n_actions", c.n_actions},       {"batch_size", c.batch_size},
          {"epochs", c.epochs},             {"hours_per_day", c.hours_per_day},
          {"learning_rate", c.learning_rate}, {"tf_start", c.tf_start},
          {"tf_end", c.tf_end},             {"seed", c.seed}};
}

forecast::ForecasterConfig config_from_json(const json& j) {
  forecast::ForecasterConfig c;
  c.hidden_dim = j.at("hidden_dim");
  c.encoder_layers = j.at("encoder_layers");
  c.history_days = j.at("history_days");
  c.n_heads = j.at("n_heads");
  c.n_actions = j.at("n_actions");
  c.batch_size = j.at("batch_size");
  c.epochs = j.at("epochs");
  c.hours_per_day = j.at("hours_per_day");
  c.learning_rate = j.at("learning_rate");
  c.tf_start = j.at("tf_start");
  c.tf_end = j.at("tf_end");
  c.seed = j.at("seed");
  return c;
}

}  // namespace

void dataset_save(const fs::path& path, const std::vector<domain::DayRecord>& days,
                  int n_actions, std::uint64_t seed) {
  std::ofstream f = open_out(path);
  json header = {{"format", "hts-dataset"}, {"major", kDatasetMajor},
                 {"n_actions", n_actions},  {"n_days", days.size()},
                 {"seed", seed}};
  f << header.dump() << "\n";
  for (const auto& day : days)
    for (const auto& hr : day.hours) {
      const double ang = 2.0 * M_PI * hr.env.hour / 24.0;
      json line = {{"day", day.day_index},
                   {"hour", hr.env.hour},
                   {"action", hr.action},
                   {"weather", hr.env.weather},
                   {"temp_c", hr.env.temperature_c},
                   {"is_day", hr.env.is_day},
                   {"sin_h", std::sin(ang)},
                   {"cos_h", std::cos(ang)}};
      f << line.dump() << "\n";
    }
  if (!f) throw io_error(path, "write failed");
}

DatasetFile dataset_load(const fs::path& path) {
  std::ifstream f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw io_error(path, "empty file");
  json header = json::parse(line);
  check_major(header, "format", kDatasetMajor, path);
  if (header["format"] != "hts-dataset") throw io_error(path, "not a dataset file");

  DatasetFile out;
  out.n_actions = header.at("n_actions");
  out.seed = header.at("seed");
  const std::size_t n_days = header.at("n_days");
  out.days.resize(n_days);
  for (std::size_t d = 0; d < n_days; ++d) out.days[d].day_index = static_cast<int>(d);

  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const int day = j.at("day");
    if (day < 0 || static_cast<std::size_t>(day) >= n_days)
      throw io_error(path, "day index out of range");
    domain::HourRecord hr;
    hr.day_index = day;
    hr.env.hour = j.at("hour");
    hr.env.weather = j.at("weather");
    hr.env.temperature_c = j.at("temp_c");
    hr.env.is_day = j.at("is_day");
    hr.action = j.at("action");
    out.days[day].hours.push_back(hr);
  }
  for (const auto& day : out.days)
    if (day.hours.size() != 24) throw io_error(path, "incomplete day");
  return out;
}

void checkpoint_save(const fs::path& manifest_path, const forecast::Checkpoint& ckpt) {
  fs::path blob_path = manifest_path;
  blob_path.replace_extension(".bin");

  json params = json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
    const auto& e = ckpt.params.entry(i);
    params.push_back({{"name", e.name}, {"shape", e.value.shape}, {"offset", offset}});
    offset += e.value.size();
  }
  json manifest = {{"format", "hts-checkpoint"},
                   {"major", kCheckpointMajor},
                   {"config", config_to_json(ckpt.config)},
                   {"params", params},
                   {"param_doubles", offset},
                   {"blob", blob_path.filename().string()},
                   {"adam_step", ckpt.opt.step},
                   {"adam_lr", ckpt.opt.cfg.lr},
                   {"has_adam_moments", !ckpt.opt.m.empty()},
                   {"best_epoch", ckpt.epoch},
                   {"registry_version", ckpt.registry_version},
                   {"train_curve", ckpt.train_curve},
                   {"val_curve", ckpt.val_curve}};
  {
    std::ofstream f = open_out(manifest_path);
    f << manifest.dump(2) << "\n";
    if (!f) throw io_error(manifest_path, "write failed");
  }
  std::ofstream blob = open_out(blob_path, std::ios::binary);
  for (std::size_t i = 0; i < ckpt.params.count(); ++i)
    write_doubles(blob, ckpt.params.entry(i).value.data);
  if (!ckpt.opt.m.empty()) {
    for (const auto& m : ckpt.opt.m) write_doubles(blob, m);
    for (const auto& v : ckpt.opt.v) write_doubles(blob, v);
  }
  if (!blob) throw io_error(blob_path, "write failed");
}

forecast::Checkpoint checkpoint_load(const fs::path& manifest_path) {
  json manifest;
  {
    std::ifstream f = open_in(manifest_path);
    f >> manifest;
  }
  check_major(manifest, "format", kCheckpointMajor, manifest_path);
  if (manifest["format"] != "hts-checkpoint")
    throw io_error(manifest_path, "not a checkpoint manifest");

  forecast::Checkpoint ckpt;
  ckpt.config = config_from_json(manifest.at("config"));
  ckpt.epoch = manifest.at("best_epoch");
  ckpt.registry_version = manifest.at("registry_version");
  ckpt.train_curve = manifest.at("train_curve").get<std::vector<double>>();
  ckpt.val_curve = manifest.at("val_curve").get<std::vector<double>>();
  ckpt.params = forecast::Forecaster::make_params(ckpt.config, /*seeded_init=*/false);

  const auto& params_meta = manifest.at("params");
  if (params_meta.size() != ckpt.params.count())
    throw io_error(manifest_path, "parameter count mismatch");
  for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
    const auto& e = ckpt.params.entry(i);
    if (params_meta[i].at("name") != e.name ||
        params_meta[i].at("shape").get<std::vector<std::size_t>>() != e.value.shape)
      throw io_error(manifest_path, "parameter layout mismatch at " + e.name);
  }

  fs::path blob_path = manifest_path;
  blob_path.replace_extension(".bin");
  std::ifstream blob = open_in(blob_path, std::ios::binary);
  for (std::size_t i = 0; i < ckpt.params.count(); ++i)
    read_doubles(blob, ckpt.params.entry(i).value.data);
  ckpt.opt.cfg.lr = manifest.at("adam_lr");
  ckpt.opt.step = manifest.at("adam_step");
  if (manifest.at("has_adam_moments").get<bool>()) {
    ckpt.opt.m.resize(ckpt.params.count());
    ckpt.opt.v.resize(ckpt.params.count());
    for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
      ckpt.opt.m[i].resize(ckpt.params.entry(i).value.size());
      read_doubles(blob, ckpt.opt.m[i]);
    }
    for (std::size_t i = 0; i < ckpt.params.count(); ++i) {
      ckpt.opt.v[i].resize(ckpt.params.entry(i).value.size());
      read_doubles(blob, ckpt.opt.v[i]);
    }
  }
  return ckpt;
}

void generator_config_save(const fs::path& path, const synthgen::GeneratorConfig& cfg) {
  json j = {{"format", "hts-genconfig"},
            {"major", 1},
            {"n_days", cfg.n_days},
            {"n_actions", cfg.n_actions},
            {"seed", cfg.seed},
            {"base_tables", cfg.base_tables},
            {"weather_transition", cfg.weather_transition},
            {"weather_modifiers", cfg.weather_modifiers},
            {"exec_streak_boost", cfg.exec_streak_boost},
            {"action6_boost", cfg.action6_boost},
            {"action6_self_boost", cfg.action6_self_boost},
            {"action6_temp_threshold_c", cfg.action6_temp_threshold_c},
            {"temp",
             {{"base_c", cfg.temp.base_c},
              {"seasonal_amp", cfg.temp.seasonal_amp},
              {"daily_amp", cfg.temp.daily_amp},
              {"noise_sigma", cfg.temp.noise_sigma},
              {"noise_enabled", cfg.temp.noise_enabled}}}};
  if (cfg.drift)
    j["drift"] = {{"day_index", cfg.drift->day_index}, {"base_tables", cfg.drift->base_tables}};
  std::ofstream f = open_out(path);
  f << j.dump(2) << "\n";
  if (!f) throw io_error(path, "write failed");
}

synthgen::GeneratorConfig generator_config_load(const fs::path& path) {
  json j;
  {
    std::ifstream f = open_in(path);
    f >> j;
  }
  check_major(j, "format", 1, path);
  if (j["format"] != "hts-genconfig") throw io_error(path, "not a generator config");
  synthgen::GeneratorConfig cfg;
  cfg.n_days = j.at("n_days");
  cfg.n_actions = j.at("n_actions");
  cfg.seed = j.at("seed");
  cfg.base_tables = j.at("base_tables").get<std::vector<std::vector<double>>>();
  auto wt = j.at("weather_transition").get<std::vector<std::vector<double>>>();
  if (wt.size() != 4) throw io_error(path, "weather_transition needs 4 rows");
  for (int r = 0; r < 4; ++r) {
    if (wt[r].size() != 4) throw io_error(path, "weather_transition needs 4 columns");
    for (int c = 0; c < 4; ++c) cfg.weather_transition[r][c] = wt[r][c];
  }
  cfg.weather_modifiers = j.at("weather_modifiers").get<std::vector<std::vector<double>>>();
  cfg.exec_streak_boost = j.at("exec_streak_boost");
  cfg.action6_boost = j.at("action6_boost");
  cfg.action6_self_boost = j.at("action6_self_boost");
  cfg.action6_temp_threshold_c = j.at("action6_temp_threshold_c");
  const auto& t = j.at("temp");
  cfg.temp.base_c = t.at("base_c");
  cfg.temp.seasonal_amp = t.at("seasonal_amp");
  cfg.temp.daily_amp = t.at("daily_amp");
  cfg.temp.noise_sigma = t.at("noise_sigma");
  cfg.temp.noise_enabled = t.at("noise_enabled");
  if (j.contains("drift")) {
    synthgen::DriftSpec d;
    d.day_index = j["drift"].at("day_index");
    d.base_tables = j["drift"].at("base_tables").get<std::vector<std::vector<double>>>();
    cfg.drift = std::move(d);
  }
  cfg.validate();
  return cfg;
}

namespace {

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream f = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
  f << "\n";
  f.precision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << row[i];
    f << "\n";
  }
  if (!f) throw io_error(path, "write failed");
}

}  // namespace

void report_save(const fs::path& dir, const eval::EvalReport& report,
                 const eval::ExtensionReport* extension) {
  fs::create_directories(dir);
  json j = {{"format", "hts-report"},
            {"major", 1},
            {"n_actions", report.n_actions},
            {"n_sequences", report.n_sequences},
            {"frequencies_true", report.dist_true.frequencies},
            {"frequencies_pred", report.dist_pred.frequencies},
            {"entropy_true_bits", report.dist_true.entropy_bits},
            {"entropy_pred_bits", report.dist_pred.entropy_bits},
            {"delta_h_bits", report.delta_h},
            {"coverage_covered", report.cover.covered},
            {"coverage_total", report.cover.total},
            {"per_class_recall", report.confusion.per_class_recall},
            {"rare_set", report.confusion.rare_set},
            {"rare_recall", report.confusion.rare_recall},
            {"transition_l1", report.transitions.l1_distance},
            {"exact_match_rate", report.exact_match_rate}};
  if (extension) {
    j["extension"] = {{"action", extension->action},
                      {"true_count", extension->true_count},
                      {"predicted_count", extension->predicted_count},
                      {"frequency_ratio", extension->frequency_ratio},
                      {"flagged_missing", extension->flagged_missing},
                      {"in_window_fraction", extension->in_window_fraction},
                      {"window", {extension->window_lo, extension->window_hi}},
                      {"predicted_hour_histogram", extension->predicted_hour_histogram}};
  }
  {
    std::ofstream f = open_out(dir / "report.json");
    f << j.dump(2) << "\n";
    if (!f) throw io_error(dir / "report.json", "write failed");
  }

  std::vector<std::string> names;
  for (int a = 0; a < report.n_actions; ++a) names.push_back(domain::action_name(a));
  std::vector<std::vector<double>> conf;
  for (const auto& row : report.confusion.matrix)
    conf.emplace_back(row.begin(), row.end());
  write_matrix_csv(dir / "confusion.csv", names, conf);
  write_matrix_csv(dir / "transitions_true.csv", names, report.transitions.t_true);
  write_matrix_csv(dir / "transitions_pred.csv", names, report.transitions.t_pred);
  if (extension) {
    std::vector<std::vector<double>> hist;
    for (int h = 0; h < 24; ++h)
      hist.push_back({static_cast<double>(h),
                      static_cast<double>(extension->predicted_hour_histogram[h])});
    write_matrix_csv(dir / "extension_hours.csv", {"hour", "count"}, hist);
  }
}

void ticklog_save(const fs::path& path, const std::vector<engine::TickLog>& log,
                  std::uint64_t seed) {
  std::ofstream f = open_out(path);
  json header = {{"format", "hts-ticklog"}, {"major", 1}, {"seed", seed}, {"ticks", log.size()}};
  f << header.dump() << "\n";
  for (const auto& e : log) {
    json line = {{"tick", e.tick},
                 {"mode", engine::mode_name(e.mode)},
                 {"action", e.action},
                 {"prob", e.probability},
                 {"explored", e.explored},
                 {"reward", e.reward},
                 {"resource", e.resource},
                 {"queue", e.queue_size},
                 {"state_hash", e.state_hash},
                 {"failed", e.execution_failed}};
    f << line.dump() << "\n";
  }
  if (!f) throw io_error(path, "write failed");
}

std::vector<engine::ExternalEvent> events_load(const fs::path& path) {
  std::ifstream f = open_in(path);
  std::vector<engine::ExternalEvent> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    engine::ExternalEvent ev;
    ev.enqueue_tick = j.at("tick");
    ev.priority = j.value("priority", 0);
    ev.value = j.value("value", 1.0);
    out.push_back(ev);
  }
  return out;
}

std::vector<reward::FeedbackEvent> feedback_load(const fs::path& path) {
  std::ifstream f = open_in(path);
  std::vector<reward::FeedbackEvent> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    reward::FeedbackEvent ev;
    ev.emitted_tick = j.at("emitted_tick");
    ev.observed_tick = j.at("observed_tick");
    ev.value = j.at("value");
    ev.trajectory_id = j.value("trajectory_id", 0);
    ev.validate();
    out.push_back(ev);
  }
  return out;
}

void plotdata_save(const fs::path& path, const eval::Sequence& truth,
                   const eval::Sequence& predicted) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("plotdata_save: length mismatch");
  std::ofstream f = open_out(path);
  f << "hour,true,predicted\n";
  for (std::size_t h = 0; h < truth.size(); ++h)
    f << h << "," << truth[h] << "," << predicted[h] << "\n";
  if (!f) throw io_error(path, "write failed");
}

}  // namespace hts::io
