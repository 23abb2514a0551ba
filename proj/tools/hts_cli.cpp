// hts: single entry point for dataset generation, training, evaluation,
// heartbeat simulation, the 6-vs-7-action extension experiment, gradient
// checking, and plot-data export.
//
// Exit codes: 0 success, 1 validation/config failure, 2 I/O error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hts/engine.hpp"
#include "hts/io.hpp"
#include "hts/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hts;

namespace {

struct CommonArgs {
  std::uint64_t seed = 7;
  int days = 1800;
  int actions = 6;
  int epochs = 30;
  fs::path out = "out";
  fs::path config;
};

// --config JSON overrides defaults; explicit flags override the file.
void apply_config_file(CommonArgs& a, const CLI::App& cmd) {
  if (a.config.empty()) return;
  std::ifstream f(a.config);
  if (!f) throw std::runtime_error(a.config.string() + ": cannot open config");
  json j;
  f >> j;
  auto take = [&](const char* key, auto& field) {
    const auto* opt = cmd.get_option_no_throw(std::string("--") + key);
    const bool flag_given = opt && opt->count() > 0;
    if (!flag_given && j.contains(key)) j.at(key).get_to(field);
  };
  take("seed", a.seed);
  take("days", a.days);
  take("actions", a.actions);
  take("epochs", a.epochs);
  std::string out;
  const auto* opt = cmd.get_option_no_throw("--out");
  if (!(opt && opt->count() > 0) && j.contains("out")) {
    j.at("out").get_to(out);
    a.out = out;
  }
}

void archive_config(const fs::path& dir, const json& resolved) {
  fs::create_directories(dir);
  std::ofstream f(dir / "resolved_config.json");
  if (!f) throw std::runtime_error((dir / "resolved_config.json").string() + ": cannot write");
  f << resolved.dump(2) << "\n";
}

json common_json(const CommonArgs& a, const char* command) {
  return {{"command", command}, {"seed", a.seed},     {"days", a.days},
          {"actions", a.actions}, {"epochs", a.epochs}, {"out", a.out.string()}};
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--seed", a.seed, "root seed");
  cmd->add_option("--days", a.days, "dataset length in days");
  cmd->add_option("--actions", a.actions, "action space size (6 or 7)")
      ->check(CLI::IsMember({6, 7}));
  cmd->add_option("--epochs", a.epochs, "training epochs");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--config", a.config, "JSON config file (flags take precedence)");
}

synthgen::SplitSets split_for(const io::DatasetFile& data, int history_days) {
  return synthgen::split_dataset(static_cast<int>(data.days.size()), {history_days});
}

int run_gen(const CommonArgs& a, const fs::path& gen_config_path) {
  synthgen::GeneratorConfig gen;
  if (!gen_config_path.empty()) {
    gen = io::generator_config_load(gen_config_path);
  } else {
    gen = a.actions == 7 ? synthgen::GeneratorConfig::extended_defaults()
                         : synthgen::GeneratorConfig::defaults(a.actions);
    gen.n_days = a.days;
    gen.seed = a.seed;
  }
  auto days = synthgen::generate_dataset(gen);
  io::dataset_save(a.out / "dataset.jsonl", days, gen.n_actions, gen.seed);
  io::generator_config_save(a.out / "generator_config.json", gen);
  archive_config(a.out, common_json(a, "gen"));
  std::cout << "wrote " << (a.out / "dataset.jsonl").string() << " (" << days.size()
            << " days, " << gen.n_actions << " actions)\n";
  return 0;
}

int run_train(const CommonArgs& a, const fs::path& data_path) {
  io::DatasetFile data = io::dataset_load(data_path);
  forecast::ForecasterConfig fcfg;
  fcfg.n_actions = data.n_actions;
  fcfg.epochs = a.epochs;
  fcfg.seed = a.seed;
  synthgen::SplitSets split = split_for(data, fcfg.history_days);
  forecast::Checkpoint ckpt =
      train_forecaster(data.days, split, fcfg, [](int e, double tr, double va) {
        std::cout << "epoch " << e << " train " << tr << " val " << va << "\n";
      });
  io::checkpoint_save(a.out / "checkpoint.json", ckpt);
  archive_config(a.out, common_json(a, "train"));
  std::cout << "best epoch " << ckpt.epoch << " val " << ckpt.val_curve[ckpt.epoch]
            << "; wrote " << (a.out / "checkpoint.json").string() << "\n";
  return 0;
}

int run_eval(const CommonArgs& a, const fs::path& ckpt_path, const fs::path& data_path) {
  forecast::Checkpoint ckpt = io::checkpoint_load(ckpt_path);
  io::DatasetFile data = io::dataset_load(data_path);
  if (data.n_actions != ckpt.config.n_actions)
    throw std::invalid_argument("eval: dataset/checkpoint action space mismatch");
  synthgen::SplitSets split = split_for(data, ckpt.config.history_days);
  auto [truth, predicted] = pipeline::predict_test_set(ckpt, data.days, split.test_targets);
  eval::EvalReport report = eval::build_report(truth, predicted, data.n_actions);
  if (data.n_actions == 7) {
    eval::ExtensionReport ext =
        eval::extension_report(truth, predicted, domain::kRecallImportant);
    io::report_save(a.out, report, &ext);
  } else {
    io::report_save(a.out, report);
  }
  archive_config(a.out, common_json(a, "eval"));
  std::cout << "coverage " << report.cover.covered << "/" << report.cover.total
            << "  H_pred " << report.dist_pred.entropy_bits << "  H_true "
            << report.dist_true.entropy_bits << "  rare recall "
            << report.confusion.rare_recall << "\n";
  return 0;
}

int run_simulate(const CommonArgs& a, long ticks, const fs::path& events_path,
                 const fs::path& feedback_path) {
  engine::EngineConfig cfg;
  cfg.max_ticks = ticks;
  cfg.seed = a.seed;
  cfg.explore.epsilon = 0.1;
  engine::Engine eng(cfg, domain::ActivityRegistry::standard(a.actions));
  std::vector<engine::ExternalEvent> feed;
  if (!events_path.empty()) feed = io::events_load(events_path);
  std::stable_sort(feed.begin(), feed.end(),
                   [](const auto& x, const auto& y) { return x.enqueue_tick < y.enqueue_tick; });
  // deliver each event at its scheduled tick, not up front
  std::size_t next_ev = 0;
  std::vector<engine::TickLog> log;
  log.reserve(ticks);
  for (long t = 0; t < ticks; ++t) {
    while (next_ev < feed.size() && feed[next_ev].enqueue_tick <= t)
      eng.enqueue_event(feed[next_ev++]);
    log.push_back(eng.tick());
  }
  io::ticklog_save(a.out / "ticklog.jsonl", log, a.seed);

  if (!feedback_path.empty()) {
    auto events = io::feedback_load(feedback_path);
    for (auto& ev : events) ev.trajectory_id = eng.trajectory().id;
    auto credited = reward::credit_delayed(eng.trajectory(), events, cfg.gamma);
    domain::Trajectory traj = eng.trajectory();
    for (std::size_t i = 0; i < credited.size(); ++i)
      traj.steps[i].credited_return = credited[i];
    policy::reinforce_update(traj, eng.policy_params(), eng.registry(), 1e-3);
    std::cout << "applied " << events.size() << " feedback events\n";
  }
  archive_config(a.out, common_json(a, "simulate"));
  std::cout << "ran " << ticks << " ticks; wrote " << (a.out / "ticklog.jsonl").string()
            << "\n";
  return 0;
}

int run_extend(const CommonArgs& a) {
  pipeline::ExperimentConfig cfg;
  cfg.n_days = a.days;
  cfg.epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.out_dir = a.out;
  pipeline::ExtendResult res =
      pipeline::run_extend(cfg, [](const std::string& m) { std::cout << m << "\n"; });

  const auto& A = res.baseline.report;
  const auto& B = res.extended.report;
  json cmp = {{"format", "hts-extend-summary"},
              {"major", 1},
              {"baseline",
               {{"n_actions", 6},
                {"coverage", A.cover.covered},
                {"entropy_pred", A.dist_pred.entropy_bits},
                {"entropy_true", A.dist_true.entropy_bits},
                {"rare_recall", A.confusion.rare_recall}}},
              {"extended",
               {{"n_actions", 7},
                {"coverage", B.cover.covered},
                {"entropy_pred", B.dist_pred.entropy_bits},
                {"entropy_true", B.dist_true.entropy_bits},
                {"rare_recall", B.confusion.rare_recall},
                {"frequency_ratio", res.extended.extension.frequency_ratio},
                {"in_window_fraction", res.extended.extension.in_window_fraction}}}};
  fs::create_directories(a.out);
  std::ofstream f(a.out / "extend_summary.json");
  f << cmp.dump(2) << "\n";
  archive_config(a.out, common_json(a, "extend"));
  std::cout << "extension frequency ratio " << res.extended.extension.frequency_ratio
            << ", in-window fraction " << res.extended.extension.in_window_fraction << "\n";
  return 0;
}

int run_gradcheck(const CommonArgs& a) {
  num::GradCheckResult r = pipeline::gradcheck_micro(a.seed);
  std::cout << "checked " << r.coords_checked << " coordinates; max relative error "
            << r.max_rel_err << " (worst " << r.worst_param << "[" << r.worst_index
            << "] analytic " << r.worst_analytic << " numeric " << r.worst_numeric << ")\n";
  if (r.max_rel_err >= 1e-4) {
    std::cerr << "gradcheck FAILED (threshold 1e-4)\n";
    return 1;
  }
  return 0;
}

int run_plotdata(const CommonArgs& a, const fs::path& ckpt_path, const fs::path& data_path,
                 int day) {
  forecast::Checkpoint ckpt = io::checkpoint_load(ckpt_path);
  io::DatasetFile data = io::dataset_load(data_path);
  auto [truth, predicted] = pipeline::predict_test_set(ckpt, data.days, {day});
  io::plotdata_save(a.out / ("day_" + std::to_string(day) + ".csv"), truth[0], predicted[0]);
  std::cout << "wrote " << (a.out / ("day_" + std::to_string(day) + ".csv")).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heartbeat thinking-activity scheduler"};
  app.require_subcommand(1);

  CommonArgs args;
  fs::path data_path, ckpt_path, events_path, feedback_path;
  long ticks = 10000;
  int day = 3;

  fs::path gen_config_path;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  add_common(gen, args);
  gen->add_option("--gen-config", gen_config_path,
                  "full generator config JSON (overrides --days/--actions/--seed)");

  auto* train = app.add_subcommand("train", "train the day-sequence forecaster");
  add_common(train, args);
  train->add_option("--data", data_path, "dataset.jsonl")->required();

  auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(evalc, args);
  evalc->add_option("--checkpoint", ckpt_path, "checkpoint manifest")->required();
  evalc->add_option("--data", data_path, "dataset.jsonl")->required();

  auto* sim = app.add_subcommand("simulate", "run the heartbeat engine");
  add_common(sim, args);
  sim->add_option("--ticks", ticks, "tick count");
  sim->add_option("--events", events_path, "external event feed (JSONL)");
  sim->add_option("--feedback", feedback_path, "delayed feedback feed (JSONL)");

  auto* ext = app.add_subcommand("extend", "run the 6-vs-7-action comparison");
  add_common(ext, args);

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the micro model");
  add_common(gc, args);

  auto* plot = app.add_subcommand("plotdata", "per-day (hour, true, predicted) triples");
  add_common(plot, args);
  plot->add_option("--checkpoint", ckpt_path, "checkpoint manifest")->required();
  plot->add_option("--data", data_path, "dataset.jsonl")->required();
  plot->add_option("--day", day, "target day index");

  try {
    app.parse(argc, argv);
    CLI::App* cmd = app.get_subcommands().front();
    apply_config_file(args, *cmd);
    if (cmd == gen) return run_gen(args, gen_config_path);
    if (cmd == train) return run_train(args, data_path);
    if (cmd == evalc) return run_eval(args, ckpt_path, data_path);
    if (cmd == sim) return run_simulate(args, ticks, events_path, feedback_path);
    if (cmd == ext) return run_extend(args);
    if (cmd == gc) return run_gradcheck(args);
    if (cmd == plot) return run_plotdata(args, ckpt_path, data_path, day);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  }
}
