#pragma once
// End-to-end experiment drivers shared by the CLI and the acceptance suite:
// generate -> split -> train -> predict -> evaluate, the 6-vs-7-action
// extension comparison, and the micro-model gradient check.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "hts/eval.hpp"
#include "hts/forecaster.hpp"
#include "hts/numkit.hpp"
#include "hts/synthgen.hpp"

namespace hts::pipeline {

struct ExperimentConfig {
  int n_days = 1800;
  int n_actions = 6;
  int epochs = 30;
  std::uint64_t seed = 7;
  int hidden_dim = 128;
  int batch_size = 32;
  std::optional<std::filesystem::path> out_dir;  // artifacts written when set

  forecast::ForecasterConfig forecaster_config() const;
  synthgen::GeneratorConfig generator_config() const;
};

struct ExperimentResult {
  forecast::Checkpoint checkpoint;
  eval::EvalReport report;
  eval::ExtensionReport extension;  // meaningful only for n_actions == 7
  std::vector<eval::Sequence> truth;      // test targets, day-aligned
  std::vector<eval::Sequence> predicted;
  std::size_t n_samples = 0;  // all (history, target) pairs
  std::size_t n_test = 0;
};

using ProgressFn = std::function<void(const std::string&)>;

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// Greedy test-set predictions for an existing checkpoint against a dataset.
std::pair<std::vector<eval::Sequence>, std::vector<eval::Sequence>> predict_test_set(
    const forecast::Checkpoint& ckpt, const std::vector<domain::DayRecord>& days,
    const std::vector<int>& test_targets);

struct ExtendResult {
  ExperimentResult baseline;  // 6 actions
  ExperimentResult extended;  // 7 actions, trigger rule active
};
ExtendResult run_extend(const ExperimentConfig& base, const ProgressFn& progress = {});

// Finite-difference check on a micro model (hidden 8, 2 history days,
// 6-hour days, 6 actions) with full teacher forcing.
num::GradCheckResult gradcheck_micro(std::uint64_t seed = 42, int n_coords = 200);

}  // namespace hts::pipeline
