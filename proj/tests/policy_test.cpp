#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hts/policy.hpp"

using namespace hts;
using namespace hts::policy;

namespace {

domain::ActivityRegistry two_action_registry() {
  auto reg = domain::ActivityRegistry::standard(6);
  for (int a = 2; a < 6; ++a) reg.remove_activity(a);
  return reg;
}

std::vector<double> random_state(int dim, rng::Stream& rs) {
  std::vector<double> s(dim);
  for (double& v : s) v = rs.next_gaussian();
  return s;
}

}  // namespace

TEST_CASE("zero weights give the uniform distribution") {
  auto reg = domain::ActivityRegistry::standard(6);
  auto params = PolicyParameters::zeros(6, 6, reg.version());
  std::vector<double> state(state_dim(6, 6), 0.7);
  auto pi = policy_distribution(state, params, reg);
  REQUIRE(pi.size() == 6);
  for (double p : pi) CHECK(p == doctest::Approx(1.0 / 6).epsilon(1e-12));
}

TEST_CASE("mixture distribution") {
  std::vector<double> pi = {0.7, 0.2, 0.1};
  SUBCASE("eps 0 returns pi") { CHECK(mixture_distribution(pi, 0.0) == pi); }
  SUBCASE("eps 1 is uniform") {
    for (double p : mixture_distribution(pi, 1.0))
      CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("eps 0.5 averages") {
    auto mix = mixture_distribution(pi, 0.5);
    CHECK(mix[0] == doctest::Approx(0.5 * 0.7 + 0.5 / 3).epsilon(1e-12));
    CHECK(mix[2] == doctest::Approx(0.5 * 0.1 + 0.5 / 3).epsilon(1e-12));
  }
}

TEST_CASE("registry growth extends parameters without disturbing old logits") {
  auto reg = domain::ActivityRegistry::standard(6);
  const int K = 2;
  auto params = PolicyParameters::zeros(6, K, reg.version());
  rng::Stream rs(11, "policy.test");
  for (double& w : params.W.data) w = 0.3 * rs.next_gaussian();

  // a state whose one-hot blocks only use old actions
  std::vector<double> old_state = random_state(state_dim(6, K), rs);
  auto pi_old = policy_distribution(old_state, params, reg);

  domain::ActivityDescriptor d;
  d.action = domain::kRecallImportant;
  d.name = domain::action_name(domain::kRecallImportant);
  reg.register_activity(d);

  // embed the old state: a zero slot appended to each one-hot block
  std::vector<double> new_state;
  new_state.insert(new_state.end(), old_state.begin(), old_state.begin() + 6);
  new_state.push_back(0.0);
  new_state.insert(new_state.end(), old_state.begin() + 6, old_state.begin() + 14);
  for (int b = 0; b < K; ++b) {
    auto it = old_state.begin() + 14 + b * 6;
    new_state.insert(new_state.end(), it, it + 6);
    new_state.push_back(0.0);
  }
  REQUIRE(static_cast<int>(new_state.size()) == state_dim(7, K));

  const auto version_before = params.version;
  auto pi_new = policy_distribution(new_state, params, reg);
  REQUIRE(pi_new.size() == 7);
  CHECK(params.n_actions() == 7);
  CHECK(params.registry_version == reg.version());
  CHECK(params.version == version_before + 1);

  // the new action carries logit 0; old actions keep their relative odds
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b)
      CHECK(pi_new[a] / pi_new[b] == doctest::Approx(pi_old[a] / pi_old[b]).epsilon(1e-9));

  SUBCASE("zero weights after growth give uniform over 7") {
    auto zp = PolicyParameters::zeros(7, K, reg.version());
    auto pi = policy_distribution(new_state, zp, reg);
    for (double p : pi) CHECK(p == doctest::Approx(1.0 / 7).epsilon(1e-12));
  }
  SUBCASE("shrinking registry is rejected") {
    CHECK_THROWS(extend_parameters(params, 6, reg.version()));
  }
}

TEST_CASE("select_activity") {
  auto reg = domain::ActivityRegistry::standard(6);
  auto params = PolicyParameters::zeros(6, 6, reg.version());
  std::vector<double> state(state_dim(6, 6), 0.1);
  ExplorationParams ex;

  SUBCASE("eps 0 never explores and reports pi") {
    ex.epsilon = 0.0;
    rng::Stream rs(5, "sel");
    for (int i = 0; i < 50; ++i) {
      auto sel = select_activity(state, params, reg, ex, rs);
      CHECK_FALSE(sel.explored);
      CHECK(sel.probability == doctest::Approx(1.0 / 6).epsilon(1e-12));
    }
  }
  SUBCASE("eps 1 always explores with uniform probability") {
    ex.epsilon = 1.0;
    rng::Stream rs(5, "sel");
    for (int i = 0; i < 50; ++i) {
      auto sel = select_activity(state, params, reg, ex, rs);
      CHECK(sel.explored);
      CHECK(sel.epsilon_used == 1.0);
      CHECK(sel.probability == doctest::Approx(1.0 / 6).epsilon(1e-12));
    }
  }
  SUBCASE("low value estimate forces the exploration epsilon") {
    ex.epsilon = 0.05;
    ex.forced_epsilon = 0.9;
    ex.value_threshold = 0.5;
    rng::Stream rs(5, "sel");
    auto sel = select_activity(state, params, reg, ex, rs, /*recent_mean_return=*/0.0);
    CHECK(sel.epsilon_used == 0.9);
    auto ok = select_activity(state, params, reg, ex, rs, /*recent_mean_return=*/10.0);
    CHECK(ok.epsilon_used == 0.05);
  }
  SUBCASE("same seed gives the same selection") {
    ex.epsilon = 0.3;
    rng::Stream a(9, "sel"), b(9, "sel");
    for (int i = 0; i < 20; ++i)
      CHECK(select_activity(state, params, reg, ex, a).action ==
            select_activity(state, params, reg, ex, b).action);
  }
  SUBCASE("epsilon decay respects the floor") {
    ex.epsilon = 0.4;
    ex.decay = 0.5;
    ex.min_epsilon = 0.15;
    ex.step_decay();
    CHECK(ex.epsilon == doctest::Approx(0.2));
    ex.step_decay();
    CHECK(ex.epsilon == doctest::Approx(0.15));
  }
}

TEST_CASE("single positive-return step raises the taken action's probability") {
  auto reg = domain::ActivityRegistry::standard(6);
  auto params = PolicyParameters::zeros(6, 6, reg.version());
  std::vector<double> state(state_dim(6, 6));
  rng::Stream rs(3, "state");
  for (double& v : state) v = rs.next_double();

  domain::Trajectory traj;
  traj.id = 1;
  domain::TrajectoryStep step;
  step.observation = state;
  step.action = domain::kSummarize;
  step.behavior_prob = 1.0 / 6;  // eps 0, uniform pi
  step.epsilon_used = 0.0;
  step.credited_return = 1.0;
  traj.steps.push_back(step);

  auto before = policy_distribution(state, params, reg);
  reinforce_update(traj, params, reg, 0.1, /*use_baseline=*/false);
  auto after = policy_distribution(state, params, reg);
  CHECK(after[domain::kSummarize] > before[domain::kSummarize]);
  for (int a = 0; a < 6; ++a)
    if (a != domain::kSummarize) CHECK(after[a] < before[a]);
  CHECK(params.version == 1);
}

TEST_CASE("gradient estimate is unbiased under the epsilon mixture") {
  // exhaustive enumeration oracle on a two-state, two-action, horizon-2 MDP:
  // E over all action sequences of the REINFORCE estimate must equal the
  // analytic gradient of E[return], computed via the softmax derivative and
  // the product rule only (no score-function identity).
  auto reg = two_action_registry();
  const int K = 1;
  const int dim = state_dim(2, K);

  for (std::uint64_t seed : {7ULL, 19ULL, 101ULL}) {
    for (double eps : {0.0, 0.3, 1.0}) {
      CAPTURE(seed);
      CAPTURE(eps);
      rng::Stream rs(seed, "unbiased");
      auto params = PolicyParameters::zeros(2, K, reg.version());
      for (double& w : params.W.data) w = 0.5 * rs.next_gaussian();

      const std::vector<double> s0 = random_state(dim, rs);
      const std::vector<std::vector<double>> s1 = {random_state(dim, rs),
                                                   random_state(dim, rs)};
      const double r0[2] = {rs.next_double(), rs.next_double()};
      const double r1[2][2] = {{rs.next_double(), rs.next_double()},
                               {rs.next_double(), rs.next_double()}};

      auto mix_of = [&](const std::vector<double>& s) {
        return mixture_distribution(policy_distribution(s, params, reg), eps);
      };
      // d q(a|s) / dW_{r,j} = (1-eps) * pi_a * (1[a==r] - pi_r) * s_j
      auto dq = [&](const std::vector<double>& s, int a) {
        auto pi = policy_distribution(s, params, reg);
        std::vector<double> g(params.W.size(), 0.0);
        for (int r = 0; r < 2; ++r)
          for (int j = 0; j < dim; ++j)
            g[r * dim + j] = (1.0 - eps) * pi[a] * ((a == r ? 1.0 : 0.0) - pi[r]) * s[j];
        return g;
      };

      std::vector<double> expected_estimate(params.W.size(), 0.0);
      std::vector<double> analytic(params.W.size(), 0.0);
      for (int a0 = 0; a0 < 2; ++a0)
        for (int a1 = 0; a1 < 2; ++a1) {
          const double q0 = mix_of(s0)[a0];
          const double q1 = mix_of(s1[a0])[a1];
          const double ret = r0[a0] + r1[a0][a1];

          domain::Trajectory traj;
          traj.id = 1;
          domain::TrajectoryStep st;
          st.observation = s0;
          st.action = a0;
          st.behavior_prob = q0;
          st.epsilon_used = eps;
          st.credited_return = ret;  // reward-to-go from t=0
          traj.steps.push_back(st);
          st.observation = s1[a0];
          st.action = a1;
          st.behavior_prob = q1;
          st.credited_return = r1[a0][a1];
          traj.steps.push_back(st);

          auto est = policy_gradient_estimate(traj, params, reg, /*use_baseline=*/false);
          auto g0 = dq(s0, a0);
          auto g1 = dq(s1[a0], a1);
          for (std::size_t i = 0; i < est.size(); ++i) {
            expected_estimate[i] += q0 * q1 * est[i];
            analytic[i] += (g0[i] * q1 + q0 * g1[i]) * ret;
          }
        }
      for (std::size_t i = 0; i < analytic.size(); ++i)
        CHECK(expected_estimate[i] == doctest::Approx(analytic[i]).epsilon(1e-10));
      if (eps == 1.0)  // behavior is theta-independent: both sides vanish
        for (double g : analytic) CHECK(std::fabs(g) < 1e-12);
    }
  }
}

TEST_CASE("curated dataset") {
  domain::Trajectory traj;
  traj.id = 42;
  for (int i = 0; i < 3; ++i) {
    domain::TrajectoryStep s;
    s.observation = {double(i)};
    s.action = i;
    traj.steps.push_back(s);
  }
  CuratedDataset ds;

  SUBCASE("threshold splits good from bad") {
    CHECK(ds.curate(traj, {0.2, 0.5, 0.9}, 0.5, 3) == 3);
    CHECK_FALSE(ds.items()[0].good);
    CHECK(ds.items()[1].good);  // boundary counts as good
    CHECK(ds.items()[2].good);
    CHECK(ds.items()[0].registry_version == 3);
    CHECK(ds.version() == 1);
  }
  SUBCASE("duplicate steps are rejected") {
    CHECK(ds.curate(traj, {0, 0, 0}, 0.5, 0) == 3);
    CHECK(ds.curate(traj, {0, 0, 0}, 0.5, 0) == 0);
    CHECK(ds.items().size() == 3);
    CHECK(ds.version() == 1);  // no-op does not bump the version
  }
  SUBCASE("length mismatch and non-finite returns throw") {
    CHECK_THROWS(ds.curate(traj, {0, 0}, 0.5, 0));
    CHECK_THROWS(ds.curate(traj, {0, 0, std::nan("")}, 0.5, 0));
  }
  SUBCASE("synthetic flag is recorded") {
    ds.curate(traj, {1, 1, 1}, 0.0, 0, /*synthetic=*/true);
    for (const auto& item : ds.items()) CHECK(item.synthetic);
  }
}
