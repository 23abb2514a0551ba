#pragma once
// File formats: JSONL dataset with a version header line, checkpoint manifest
// (JSON) + little-endian float64 blob, JSON/CSV reports, tick logs, and the
// event/feedback feeds. Readers reject unknown major versions.

#include <filesystem>
#include <string>
#include <vector>

#include "hts/engine.hpp"
#include "hts/eval.hpp"
#include "hts/forecaster.hpp"
#include "hts/reward.hpp"
#include "hts/synthgen.hpp"

namespace hts::io {

inline constexpr int kDatasetMajor = 1;
inline constexpr int kCheckpointMajor = 1;

struct DatasetFile {
  std::vector<domain::DayRecord> days;
  int n_actions = 6;
  std::uint64_t seed = 0;
};

void dataset_save(const std::filesystem::path& path, const std::vector<domain::DayRecord>& days,
                  int n_actions, std::uint64_t seed);
DatasetFile dataset_load(const std::filesystem::path& path);

// Writes <path> (manifest JSON) and <path stem>.bin beside it.
void checkpoint_save(const std::filesystem::path& manifest_path,
                     const forecast::Checkpoint& ckpt);
forecast::Checkpoint checkpoint_load(const std::filesystem::path& manifest_path);

// Generator configs are human-editable JSON with every field exposed.
void generator_config_save(const std::filesystem::path& path,
                           const synthgen::GeneratorConfig& cfg);
synthgen::GeneratorConfig generator_config_load(const std::filesystem::path& path);

// report.json plus confusion.csv / transitions.csv (and extension.csv when given).
void report_save(const std::filesystem::path& dir, const eval::EvalReport& report,
                 const eval::ExtensionReport* extension = nullptr);

void ticklog_save(const std::filesystem::path& path,
                  const std::vector<engine::TickLog>& log, std::uint64_t seed);

std::vector<engine::ExternalEvent> events_load(const std::filesystem::path& path);
std::vector<reward::FeedbackEvent> feedback_load(const std::filesystem::path& path);

// (hour, true action, predicted action) triples for one day, as CSV.
void plotdata_save(const std::filesystem::path& path, const eval::Sequence& truth,
                   const eval::Sequence& predicted);

}  // namespace hts::io
