#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "hts/forecaster.hpp"
#include "hts/pipeline.hpp"
#include "hts/synthgen.hpp"

using namespace hts;
using namespace hts::forecast;

namespace {

ForecasterConfig micro_config() {
  ForecasterConfig cfg;
  cfg.hidden_dim = 8;
  cfg.history_days = 2;
  cfg.hours_per_day = 6;
  cfg.n_heads = 2;
  cfg.seed = 7;
  return cfg;
}

std::vector<domain::DayRecord> micro_days(int n_days, std::uint64_t seed, int hours = 6) {
  synthgen::GeneratorConfig gen = synthgen::GeneratorConfig::defaults(6);
  gen.n_days = n_days;
  gen.seed = seed;
  auto days = synthgen::generate_dataset(gen);
  for (auto& day : days) day.hours.resize(hours);
  return days;
}

}  // namespace

TEST_CASE("teacher forcing schedule endpoints and monotonicity") {
  ForecasterConfig cfg;
  cfg.epochs = 30;
  CHECK(tf_schedule(cfg, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(tf_schedule(cfg, 29) == doctest::Approx(0.2).epsilon(1e-12));
  for (int e = 1; e < 30; ++e) CHECK(tf_schedule(cfg, e) <= tf_schedule(cfg, e - 1));
  cfg.epochs = 1;
  CHECK(tf_schedule(cfg, 0) == 0.8);
}

TEST_CASE("config validation") {
  ForecasterConfig cfg;
  cfg.hidden_dim = 127;  // not divisible by 4 heads
  CHECK_THROWS(cfg.validate());
  cfg = ForecasterConfig{};
  cfg.tf_end = 0.9;
  CHECK_THROWS(cfg.validate());
  CHECK_NOTHROW(ForecasterConfig{}.validate());
}

TEST_CASE("sample construction") {
  auto days = micro_days(5, 3, 24);
  Sample s = make_sample(days, 3, 3, 6);
  CHECK(s.hist.size() == 3);
  CHECK(s.hist[0].size() == 24);
  CHECK(s.hist[0][0].size() == 14);
  CHECK(s.env.size() == 24);
  CHECK(s.env[0].size() == 8);
  CHECK(s.target.size() == 24);
  CHECK_THROWS(make_sample(days, 2, 3, 6));  // not enough history
  CHECK_THROWS(make_sample(days, 5, 3, 6));  // out of range
}

TEST_CASE("positional encoding structure") {
  // even coordinates are sines, odd are cosines of the same frequency
  CHECK(positional_encoding(0, 0, 8) == doctest::Approx(0.0));
  CHECK(positional_encoding(0, 1, 8) == doctest::Approx(1.0));
  CHECK(positional_encoding(3, 4, 8) ==
        doctest::Approx(std::sin(3.0 / std::pow(10000.0, 4.0 / 8.0))));
  // distinct positions produce distinct encodings
  bool differ = false;
  for (int k = 0; k < 8; ++k)
    differ = differ || positional_encoding(1, k, 8) != positional_encoding(2, k, 8);
  CHECK(differ);
}

TEST_CASE("encode_day shapes and zero propagation") {
  ForecasterConfig cfg = micro_config();
  Forecaster model(cfg);
  auto days = micro_days(3, 5);
  Sample s = make_sample(days, 2, 2, 6);

  auto [states, emb] = model.encode_day(s.hist[0]);
  CHECK(states.size() == 6);
  CHECK(states[0].size() == 8);
  CHECK(emb.size() == 8);
  CHECK(emb == states.back());

  // zero parameters propagate zero states
  Forecaster zero(cfg, Forecaster::make_params(cfg, false));
  auto [zstates, zemb] = zero.encode_day(s.hist[0]);
  for (const auto& st : zstates)
    for (double v : st) CHECK(v == 0.0);
  (void)zemb;
}

TEST_CASE("permuting hours changes the day embedding") {
  ForecasterConfig cfg = micro_config();
  Forecaster model(cfg);
  auto days = micro_days(3, 9);
  Sample s = make_sample(days, 2, 2, 6);
  auto [st1, emb1] = model.encode_day(s.hist[0]);
  auto reversed = s.hist[0];
  std::reverse(reversed.begin(), reversed.end());
  auto [st2, emb2] = model.encode_day(reversed);
  CHECK(emb1 != emb2);
}

TEST_CASE("attend_days properties") {
  ForecasterConfig cfg = micro_config();
  Forecaster model(cfg);

  SUBCASE("identical embeddings still differ across slots") {
    std::vector<std::vector<double>> same(2, std::vector<double>(8, 0.3));
    auto out = model.attend_days(same);
    REQUIRE(out.size() == 2);
    CHECK(out[0] != out[1]);  // positional encodings break the tie
  }
  SUBCASE("attention rows sum to 1") {
    std::vector<std::vector<double>> embs = {{0.1, -0.2, 0.3, 0, 0.5, 0, 0, 1},
                                             {0.9, 0.2, -0.3, 0.4, 0, 0, 1, 0}};
    for (const auto& row : model.day_attention_weights(embs)) {
      double s = 0;
      for (double w : row) s += w;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("H=1 degenerate attention weight is 1") {
    std::vector<std::vector<double>> one = {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}};
    auto rows = model.day_attention_weights(one);
    CHECK(rows[0][0] == doctest::Approx(1.0));
  }
}

TEST_CASE("forward contract") {
  ForecasterConfig cfg = micro_config();
  Forecaster model(cfg);
  auto days = micro_days(4, 11);
  Sample s = make_sample(days, 2, 2, 6);

  SUBCASE("shapes and valid per-hour distributions") {
    auto fwd = model.forward(s, 1.0, nullptr, nullptr);
    CHECK(fwd.logits.size() == 6);
    CHECK(fwd.logits[0].size() == 6);
    for (const auto& p : fwd.probs) {
      double sum = 0;
      for (double v : p) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(fwd.loss > 0.0);
  }
  SUBCASE("tf_ratio outside [0,1] rejected") {
    CHECK_THROWS(model.forward(s, 1.5, nullptr, nullptr));
  }
  SUBCASE("prediction is deterministic, ids in range") {
    auto a = model.predict(s);
    auto b = model.predict(s);
    CHECK(a.argmax == b.argmax);
    for (int id : a.argmax) {
      CHECK(id >= 0);
      CHECK(id < 6);
    }
  }
  SUBCASE("decoder attention spans all history hours") {
    // per-step attention over H*hours positions sums to 1 implicitly via
    // softmax; check indirectly: prediction changes when history changes
    auto days2 = micro_days(4, 12);
    Sample s2 = make_sample(days2, 2, 2, 6);
    auto a = model.forward(s, 1.0, nullptr, nullptr);
    auto b = model.forward(s2, 1.0, nullptr, nullptr);
    CHECK(a.logits != b.logits);
  }
}

TEST_CASE("micro gradcheck under full teacher forcing") {
  auto r = pipeline::gradcheck_micro(7, 250);
  CAPTURE(r.worst_param);
  CAPTURE(r.worst_analytic);
  CAPTURE(r.worst_numeric);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("training on a toy dataset reduces the loss") {
  ForecasterConfig cfg = micro_config();
  cfg.hours_per_day = 24;
  cfg.epochs = 10;
  cfg.batch_size = 8;

  synthgen::GeneratorConfig gen = synthgen::GeneratorConfig::defaults(6);
  gen.n_days = 20;
  gen.seed = 5;
  auto days = synthgen::generate_dataset(gen);
  auto split = synthgen::split_dataset(20, {2, 14, 2, 2});

  auto ckpt = train_forecaster(days, split, cfg);
  REQUIRE(ckpt.train_curve.size() == 10);
  CHECK(ckpt.train_curve.back() < ckpt.train_curve.front());
  CHECK(ckpt.val_curve[ckpt.epoch] <= ckpt.val_curve[0]);
}

TEST_CASE("predict_day end to end") {
  ForecasterConfig cfg = micro_config();
  cfg.hours_per_day = 24;
  auto days = micro_days(4, 21, 24);
  synthgen::SplitSets split;
  split.train_targets = {2};
  split.val_targets = {3};
  cfg.epochs = 2;
  auto ckpt = train_forecaster(days, split, cfg);

  std::vector<domain::DayRecord> history(days.begin() + 1, days.begin() + 3);
  std::vector<domain::EnvSnapshot> env;
  for (const auto& hr : days[3].hours) env.push_back(hr.env);
  auto pred = predict_day(ckpt, history, env);
  CHECK(pred.actions.size() == 24);
  CHECK(pred.probs.size() == 24);
  auto again = predict_day(ckpt, history, env);
  CHECK(pred.actions == again.actions);
}
