#include "hts/pipeline.hpp"

#include <memory>
#include <string>

#include "hts/io.hpp"

namespace hts::pipeline {

forecast::ForecasterConfig ExperimentConfig::forecaster_config() const {
  forecast::ForecasterConfig f;
  f.n_actions = n_actions;
  f.epochs = epochs;
  f.seed = seed;
  f.hidden_dim = hidden_dim;
  f.batch_size = batch_size;
  return f;
}

synthgen::GeneratorConfig ExperimentConfig::generator_config() const {
  synthgen::GeneratorConfig g = n_actions == 7 ? synthgen::GeneratorConfig::extended_defaults()
                                               : synthgen::GeneratorConfig::defaults(n_actions);
  g.n_days = n_days;
  g.seed = seed;
  return g;
}

std::pair<std::vector<eval::Sequence>, std::vector<eval::Sequence>> predict_test_set(
    const forecast::Checkpoint& ckpt, const std::vector<domain::DayRecord>& days,
    const std::vector<int>& test_targets) {
  num::ParamStore params = forecast::Forecaster::make_params(ckpt.config, false);
  for (std::size_t i = 0; i < params.count(); ++i)
    params.entry(i).value.data = ckpt.params.entry(i).value.data;
  forecast::Forecaster model(ckpt.config, std::move(params));

  std::vector<eval::Sequence> truth, predicted;
  truth.reserve(test_targets.size());
  predicted.reserve(test_targets.size());
  for (int t : test_targets) {
    forecast::Sample s =
        forecast::make_sample(days, t, ckpt.config.history_days, ckpt.config.n_actions);
    eval::Sequence tr(s.target.begin(), s.target.end());
    auto fwd = model.predict(s);
    truth.push_back(std::move(tr));
    predicted.push_back(eval::Sequence(fwd.argmax.begin(), fwd.argmax.end()));
  }
  return {std::move(truth), std::move(predicted)};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  synthgen::GeneratorConfig gen = cfg.generator_config();
  say("generating " + std::to_string(gen.n_days) + " days (" +
      std::to_string(cfg.n_actions) + " actions)");
  std::vector<domain::DayRecord> days = synthgen::generate_dataset(gen);

  forecast::ForecasterConfig fcfg = cfg.forecaster_config();
  synthgen::SplitSets split = synthgen::split_dataset(gen.n_days, {fcfg.history_days});

  say("training " + std::to_string(fcfg.epochs) + " epochs on " +
      std::to_string(split.train_targets.size()) + " samples");
  forecast::Checkpoint ckpt = train_forecaster(
      days, split, fcfg, [&](int epoch, double tr, double va) {
        say("epoch " + std::to_string(epoch) + " train " + std::to_string(tr) + " val " +
            std::to_string(va));
      });

  ExperimentResult res;
  res.n_samples =
      split.train_targets.size() + split.val_targets.size() + split.test_targets.size();
  res.n_test = split.test_targets.size();
  auto [truth, predicted] = predict_test_set(ckpt, days, split.test_targets);
  res.truth = std::move(truth);
  res.predicted = std::move(predicted);
  res.report = eval::build_report(res.truth, res.predicted, cfg.n_actions);
  if (cfg.n_actions == 7)
    res.extension = eval::extension_report(res.truth, res.predicted, domain::kRecallImportant);
  res.checkpoint = std::move(ckpt);

  if (cfg.out_dir) {
    io::dataset_save(*cfg.out_dir / "dataset.jsonl", days, cfg.n_actions, cfg.seed);
    io::checkpoint_save(*cfg.out_dir / "checkpoint.json", res.checkpoint);
    io::report_save(*cfg.out_dir,
                    res.report, cfg.n_actions == 7 ? &res.extension : nullptr);
  }
  return res;
}

ExtendResult run_extend(const ExperimentConfig& base, const ProgressFn& progress) {
  ExtendResult out;
  ExperimentConfig a = base;
  a.n_actions = 6;
  if (base.out_dir) a.out_dir = *base.out_dir / "baseline";
  out.baseline = run_experiment(a, progress);

  ExperimentConfig b = base;
  b.n_actions = 7;
  if (base.out_dir) b.out_dir = *base.out_dir / "extended";
  out.extended = run_experiment(b, progress);
  return out;
}

num::GradCheckResult gradcheck_micro(std::uint64_t seed, int n_coords) {
  forecast::ForecasterConfig cfg;
  cfg.hidden_dim = 8;
  cfg.history_days = 2;
  cfg.hours_per_day = 6;
  cfg.n_heads = 2;
  cfg.n_actions = 6;
  cfg.seed = seed;

  synthgen::GeneratorConfig gen = synthgen::GeneratorConfig::defaults(6);
  gen.n_days = cfg.history_days + 1;
  gen.seed = seed;
  std::vector<domain::DayRecord> days = synthgen::generate_dataset(gen);
  for (auto& day : days) day.hours.resize(cfg.hours_per_day);  // 6-hour micro days

  forecast::Forecaster model(cfg);
  forecast::Sample sample =
      forecast::make_sample(days, cfg.history_days, cfg.history_days, cfg.n_actions);

  std::unique_ptr<forecast::Forecaster::Cache, void (*)(forecast::Forecaster::Cache*)> cache(
      model.new_cache(), &forecast::Forecaster::free_cache);
  num::GradBuffers grads = num::make_grad_buffers(model.params());

  auto loss = [&](bool with_grads) {
    // full teacher forcing: deterministic and differentiable
    auto fwd = model.forward(sample, 1.0, nullptr, with_grads ? cache.get() : nullptr);
    if (with_grads) {
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      model.backward(*cache, sample, grads);
      model.params().zero_grads();
      num::accumulate_grads(model.params(), grads, 1.0);
    }
    return fwd.loss;
  };
  return num::finite_diff_check(model.params(), loss, n_coords, seed);
}

}  // namespace hts::pipeline
