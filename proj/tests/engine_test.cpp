#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "hts/engine.hpp"

using namespace hts;
using namespace hts::engine;

namespace {

EngineConfig quiet_config(std::uint64_t seed = 1) {
  EngineConfig cfg;
  cfg.seed = seed;
  cfg.task_rate = 0.0;  // no auto-arrivals: fully scripted runs
  return cfg;
}

Engine make_engine(const EngineConfig& cfg) {
  return Engine(cfg, domain::ActivityRegistry::standard(6));
}

}  // namespace

TEST_CASE("same seed, same run") {
  EngineConfig cfg;
  cfg.seed = 42;
  Engine a = make_engine(cfg);
  Engine b = make_engine(cfg);
  auto la = a.run(500);
  auto lb = b.run(500);
  REQUIRE(la.size() == lb.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    CHECK(la[i].action == lb[i].action);
    CHECK(la[i].mode == lb[i].mode);
    CHECK(la[i].reward == lb[i].reward);
    CHECK(la[i].resource == lb[i].resource);
    CHECK(la[i].state_hash == lb[i].state_hash);
  }
  EngineConfig other = cfg;
  other.seed = 43;
  auto lc = make_engine(other).run(500);
  bool differs = false;
  for (std::size_t i = 0; i < lc.size(); ++i)
    differs = differs || lc[i].action != la[i].action;
  CHECK(differs);
}

TEST_CASE("one step per tick, bounded resource") {
  Engine e = make_engine(quiet_config());
  auto log = e.run(300);
  CHECK(e.trajectory().steps.size() == 300);
  CHECK(e.current_tick() == 300);
  for (const auto& entry : log) {
    CHECK(entry.resource >= 0.0);
    CHECK(entry.resource <= 1.0);
  }
}

TEST_CASE("dream entry after the idle threshold") {
  Engine e = make_engine(quiet_config());
  auto log = e.run(6);
  // three idle active ticks, then dream from tick 3
  CHECK(log[0].mode == Mode::Active);
  CHECK(log[1].mode == Mode::Active);
  CHECK(log[2].mode == Mode::Active);
  CHECK(log[3].mode == Mode::Dream);
  // dream entry runs one consolidation + replay burst: a 24-step synthetic
  // trajectory lands in the curated dataset
  CHECK(e.curated().items().size() == 24);
  for (const auto& item : e.curated().items()) CHECK(item.synthetic);
}

TEST_CASE("dream never holds below the resource floor") {
  EngineConfig cfg;
  cfg.seed = 9;
  Engine e = make_engine(cfg);
  auto log = e.run(2000);
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].mode != Mode::Dream) continue;
    const double pre = i == 0 ? 1.0 : log[i - 1].resource;
    CHECK(pre >= cfg.resource_floor);
  }
}

TEST_CASE("external events preempt dream within one tick") {
  Engine e = make_engine(quiet_config());
  e.run(10);
  REQUIRE(e.mode() == Mode::Dream);
  e.enqueue_event({0, 0, 1.0});
  auto entry = e.tick();
  CHECK(entry.mode == Mode::Active);
}

TEST_CASE("consolidation") {
  SUBCASE("recount oracle on a real run") {
    Engine e = make_engine(quiet_config(17));
    e.run(400);
    auto traj = e.trajectory();  // copy before any pruning
    auto s = e.consolidate();
    REQUIRE(s.n_actions == 6);
    std::vector<std::vector<long>> expect(6, std::vector<long>(6, 0));
    for (std::size_t i = 0; i + 1 < traj.steps.size(); ++i)
      if (traj.steps[i + 1].tick == traj.steps[i].tick + 1)
        ++expect[traj.steps[i].action][traj.steps[i + 1].action];
    CHECK(s.transition_counts == expect);
    // context buckets recount
    std::map<int, std::vector<long>> ctx;
    for (const auto& step : traj.steps) {
      auto& c = ctx[static_cast<int>((step.tick % 24) / 4)];
      if (c.empty()) c.assign(6, 0);
      // bucket formula matches the 6 four-hour blocks used elsewhere
    }
    CHECK(s.context_counts.size() <= 6);
    long total = 0;
    for (const auto& [bucket, counts] : s.context_counts)
      for (long c : counts) total += c;
    CHECK(total == static_cast<long>(traj.steps.size()));
  }
  SUBCASE("transition totals are conserved") {
    Engine e = make_engine(quiet_config());
    e.run(50);
    auto s = e.consolidate();
    long total = 0;
    for (const auto& row : s.transition_counts)
      for (long c : row) total += c;
    CHECK(total == 49);  // 50 contiguous steps give 49 transitions
  }
  SUBCASE("infinite retention prunes nothing") {
    Engine e = make_engine(quiet_config());
    e.run(100);
    auto s = e.consolidate(-1, 1e9);
    CHECK(s.pruned == 0);
    CHECK(s.compression_ratio == 1.0);
    CHECK(e.trajectory().steps.size() == 100);
  }
  SUBCASE("zero retention with a high threshold archives stale steps") {
    Engine e = make_engine(quiet_config());
    e.run(100);
    const auto before = e.trajectory().steps.size();
    auto s = e.consolidate(0, 1e9);
    CHECK(s.pruned > 0);
    CHECK(e.archived().size() == s.pruned);
    CHECK(e.trajectory().steps.size() + s.pruned == before);
    CHECK(s.compression_ratio ==
          doctest::Approx(double(e.trajectory().steps.size()) / before));
  }
  SUBCASE("empty trajectory gives an empty summary") {
    Engine e = make_engine(quiet_config());
    CHECK(e.consolidate().empty());
  }
}

TEST_CASE("synthetic replay") {
  Engine e = make_engine(quiet_config(23));
  e.run(600);
  auto s = e.consolidate();

  SUBCASE("shape, validity, determinism") {
    rng::Stream r1(5, "replay"), r2(5, "replay");
    auto a = e.synthetic_replay(s, 3, r1);
    auto b = e.synthetic_replay(s, 3, r2);
    REQUIRE(a.size() == 3);
    for (const auto& traj : a) {
      CHECK(traj.steps.size() == 24);
      for (const auto& step : traj.steps) {
        CHECK(step.action >= 0);
        CHECK(step.action < 6);
      }
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(a[i].id == b[i].id);
      for (int t = 0; t < 24; ++t) CHECK(a[i].steps[t].action == b[i].steps[t].action);
    }
  }
  SUBCASE("start states follow the transition-mass marginal") {
    std::vector<double> marginal(6, 0.0);
    double total = 0.0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        marginal[i] += s.transition_counts[i][j];
        total += s.transition_counts[i][j];
      }
    for (double& v : marginal) v /= total;
    rng::Stream r(7, "replay");
    std::vector<double> freq(6, 0.0);
    const int n = 10000;
    for (const auto& traj : e.synthetic_replay(s, n, r)) freq[traj.steps[0].action] += 1.0 / n;
    for (int a = 0; a < 6; ++a) CHECK(std::fabs(freq[a] - marginal[a]) < 0.05);
  }
  SUBCASE("degenerate chains stay put") {
    // hand-built summary with all mass on the 2 -> 2 self-loop
    ConsolidationSummary sum;
    sum.n_actions = 6;
    sum.transition_counts.assign(6, std::vector<long>(6, 0));
    sum.transition_counts[2][2] = 5;
    rng::Stream r(1, "replay");
    auto rollouts = e.synthetic_replay(sum, 2, r);
    for (const auto& step : rollouts[0].steps) CHECK(step.action == 2);
  }
  SUBCASE("bad inputs rejected") {
    rng::Stream r(1, "replay");
    CHECK_THROWS(e.synthetic_replay(s, 0, r));
    CHECK_THROWS(e.synthetic_replay(ConsolidationSummary{}, 1, r));
  }
}

TEST_CASE("counterfactual replay substitutes exactly one slot") {
  Engine e = make_engine(quiet_config(31));
  e.run(40);
  CounterfactualSource src;
  src.trajectory = e.trajectory();
  src.substitute_step = 5;
  src.substitute_action = src.trajectory.steps[5].action == domain::kRest
                              ? domain::kSummarize
                              : domain::kRest;
  auto out = e.counterfactual_replay(src);
  CHECK(out.id != src.trajectory.id);
  REQUIRE(out.steps.size() == src.trajectory.steps.size());
  for (std::size_t i = 0; i < out.steps.size(); ++i) {
    if (i == 5) {
      CHECK(out.steps[i].action == src.substitute_action);
      // re-scored offline: zero outcome under the dream-mode weights
      CHECK(out.steps[i].reward == 0.0);
      CHECK(out.steps[i].credited_return == out.steps[i].reward);
    } else {
      CHECK(out.steps[i].action == src.trajectory.steps[i].action);
      CHECK(out.steps[i].reward == src.trajectory.steps[i].reward);
    }
  }
  src.substitute_step = 999;
  CHECK_THROWS(e.counterfactual_replay(src));
  src.substitute_step = 5;
  src.substitute_action = 6;  // not registered
  CHECK_THROWS(e.counterfactual_replay(src));
}

TEST_CASE("intrinsic goal proposal") {
  Engine e = make_engine(quiet_config());
  SUBCASE("targets the lowest-recall class") {
    auto goal = e.propose_intrinsic_goal({0.9, 0.8, 0.3, 0.9, 1.0, 1.0});
    REQUIRE(goal.has_value());
    CHECK(*goal == std::string("practice ") + domain::action_name(2));
    CHECK(e.pending_goals().size() == 1);
  }
  SUBCASE("duplicate proposals are suppressed") {
    e.propose_intrinsic_goal({0.5, 1, 1, 1, 1, 1});
    CHECK_FALSE(e.propose_intrinsic_goal({0.5, 1, 1, 1, 1, 1}).has_value());
    CHECK(e.pending_goals().size() == 1);
  }
  SUBCASE("perfect recall proposes nothing") {
    CHECK_FALSE(e.propose_intrinsic_goal({1, 1, 1, 1, 1, 1}).has_value());
  }
  SUBCASE("size mismatch throws") {
    CHECK_THROWS(e.propose_intrinsic_goal({1.0, 0.5}));
  }
}

TEST_CASE("mid-run activity registration") {
  EngineConfig cfg = quiet_config(3);
  cfg.explore.epsilon = 0.05;
  Engine e = make_engine(cfg);
  e.run(300);
  for (const auto& entry : e.log()) CHECK(entry.action < 6);

  domain::ActivityDescriptor d;
  d.action = domain::kRecallImportant;
  d.name = domain::action_name(domain::kRecallImportant);
  e.register_activity(d);
  e.run(600);
  CHECK(e.policy_params().n_actions() == 7);

  bool seen7 = false;
  std::set<int> seen;
  for (const auto& entry : e.log()) {
    seen.insert(entry.action);
    if (entry.action == 6) {
      seen7 = true;
      CHECK(entry.tick >= 300);  // never before registration
    }
  }
  CHECK(seen7);
  // with epsilon-mixed uniform policy all activities get exercised
  CHECK(seen.size() == 7);
}
