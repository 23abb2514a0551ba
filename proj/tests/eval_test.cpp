#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "hts/eval.hpp"

using namespace hts::eval;

TEST_CASE("distribution and entropy") {
  SUBCASE("uniform over six actions gives log2(6) bits") {
    std::vector<Sequence> seqs = {{0, 1, 2, 3, 4, 5}};
    auto d = entropy_and_distribution(seqs, 6);
    for (double f : d.frequencies) CHECK(f == doctest::Approx(1.0 / 6).epsilon(1e-12));
    CHECK(d.entropy_bits == doctest::Approx(std::log2(6.0)).epsilon(1e-12));
  }
  SUBCASE("a single repeated action carries zero bits") {
    std::vector<Sequence> seqs = {{2, 2, 2}, {2, 2}};
    auto d = entropy_and_distribution(seqs, 6);
    CHECK(d.frequencies[2] == 1.0);
    CHECK(d.entropy_bits == 0.0);
  }
  SUBCASE("hand-computed binary split") {
    // 3 of action 0, 1 of action 1: H = -(3/4)log2(3/4) - (1/4)log2(1/4)
    std::vector<Sequence> seqs = {{0, 0, 0, 1}};
    auto d = entropy_and_distribution(seqs, 2);
    const double expect = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    CHECK(d.entropy_bits == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("empty input rejected") {
    CHECK_THROWS(entropy_and_distribution({}, 6));
    CHECK_THROWS(entropy_and_distribution({{0, 7}}, 6));  // out-of-range id
  }
}

TEST_CASE("coverage") {
  std::vector<Sequence> seqs = {{0, 1, 1}, {4, 0, 4}};
  auto c = coverage(seqs, 6);
  CHECK(c.covered == 3);
  CHECK(c.total == 6);
}

TEST_CASE("confusion and recall") {
  SUBCASE("five-day micro set against a brute-force recount") {
    std::vector<Sequence> truth = {{0, 1, 2}, {3, 4, 5}, {0, 0, 1},
                                   {2, 3, 3}, {5, 5, 0}};
    std::vector<Sequence> pred = {{0, 1, 1}, {3, 4, 5}, {1, 0, 1},
                                  {2, 2, 3}, {5, 0, 0}};
    auto r = confusion_and_recall(truth, pred, 6);

    std::vector<std::vector<long>> expect(6, std::vector<long>(6, 0));
    for (std::size_t d = 0; d < truth.size(); ++d)
      for (std::size_t h = 0; h < truth[d].size(); ++h)
        ++expect[truth[d][h]][pred[d][h]];
    CHECK(r.matrix == expect);

    for (int a = 0; a < 6; ++a) {
      long tp = expect[a][a], row = 0;
      for (long c : expect[a]) row += c;
      const double want = row == 0 ? 1.0 : double(tp) / row;
      CHECK(r.per_class_recall[a] == doctest::Approx(want).epsilon(1e-12));
    }
    // pooled rare recall over {0, 3}
    long tp = expect[0][0] + expect[3][3];
    long tot = 0;
    for (long c : expect[0]) tot += c;
    for (long c : expect[3]) tot += c;
    CHECK(r.rare_recall == doctest::Approx(double(tp) / tot).epsilon(1e-12));
  }
  SUBCASE("absent class recall defaults to 1") {
    std::vector<Sequence> truth = {{0, 0}};
    std::vector<Sequence> pred = {{0, 1}};
    auto r = confusion_and_recall(truth, pred, 6);
    for (int a = 1; a < 6; ++a) CHECK(r.per_class_recall[a] == 1.0);
    CHECK(r.per_class_recall[0] == doctest::Approx(0.5));
  }
  SUBCASE("misaligned shapes rejected") {
    CHECK_THROWS(confusion_and_recall({{0, 1}}, {{0}}, 6));
    CHECK_THROWS(confusion_and_recall({{0}, {1}}, {{0}}, 6));
  }
}

TEST_CASE("transition similarity") {
  SUBCASE("identical sequences have zero distance") {
    std::vector<Sequence> seqs = {{0, 1, 2, 1, 0}, {3, 3, 4, 5, 3}};
    auto t = transition_similarity(seqs, seqs, 6);
    CHECK(t.l1_distance == doctest::Approx(0.0));
    CHECK(t.t_true == t.t_pred);
  }
  SUBCASE("cycle versus constant: hand-computed row contribution") {
    // truth cycles 0->1->0->1, prediction sits on 0; only rows visited by
    // either matter; unvisited rows are uniform on both sides and cancel
    std::vector<Sequence> truth = {{0, 1, 0, 1}};
    std::vector<Sequence> pred = {{0, 0, 0, 0}};
    auto t = transition_similarity(truth, pred, 2);
    // row 0: true (0,1) vs pred (1,0) -> L1 = 2; row 1: true (1,0) vs
    // pred uniform (.5,.5) flagged -> L1 = 1; mean over 2 rows = 1.5
    CHECK(t.t_true[0][1] == doctest::Approx(1.0));
    CHECK(t.t_pred[0][0] == doctest::Approx(1.0));
    CHECK_FALSE(t.flagged_true[1]);
    CHECK(t.flagged_pred[1]);
    CHECK(t.l1_distance == doctest::Approx((2.0 + 1.0) / 2).epsilon(1e-12));
  }
  SUBCASE("transitions never cross day boundaries") {
    // day ends at 1, next day starts at 0: must not count a 1->0 transition
    std::vector<Sequence> a = {{0, 1}, {0, 1}};
    auto t = transition_similarity(a, a, 2);
    CHECK(t.t_true[1] == std::vector<double>{0.5, 0.5});  // row 1 empty -> uniform
    CHECK(t.flagged_true[1]);
  }
  SUBCASE("recount oracle on a seeded micro set") {
    std::vector<Sequence> truth = {{0, 1, 2, 2, 1}, {2, 2, 0, 1, 1}, {1, 0, 0, 2, 0}};
    std::vector<Sequence> pred = {{0, 1, 1, 2, 1}, {2, 0, 0, 1, 2}, {1, 1, 0, 2, 0}};
    auto t = transition_similarity(truth, pred, 3);
    auto normalize = [](const std::vector<Sequence>& seqs) {
      std::vector<std::vector<double>> m(3, std::vector<double>(3, 0.0));
      for (const auto& s : seqs)
        for (std::size_t i = 0; i + 1 < s.size(); ++i) ++m[s[i]][s[i + 1]];
      for (auto& row : m) {
        double sum = row[0] + row[1] + row[2];
        if (sum == 0)
          row = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        else
          for (double& v : row) v /= sum;
      }
      return m;
    };
    auto mt = normalize(truth), mp = normalize(pred);
    double dist = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) dist += std::fabs(mt[r][c] - mp[r][c]);
    dist /= 3;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        CHECK(t.t_true[r][c] == doctest::Approx(mt[r][c]).epsilon(1e-12));
        CHECK(t.t_pred[r][c] == doctest::Approx(mp[r][c]).epsilon(1e-12));
      }
    CHECK(t.l1_distance == doctest::Approx(dist).epsilon(1e-12));
  }
}

TEST_CASE("extension report") {
  SUBCASE("hand-counted frequencies and hour histogram") {
    // hour = index within the day
    std::vector<Sequence> truth(2, Sequence(24, 0));
    std::vector<Sequence> pred(2, Sequence(24, 0));
    truth[0][12] = 6;
    truth[0][13] = 6;
    truth[1][12] = 6;
    pred[0][12] = 6;
    pred[1][13] = 6;
    pred[1][2] = 6;
    auto r = extension_report(truth, pred, 6);
    CHECK(r.true_count == 3);
    CHECK(r.predicted_count == 3);
    CHECK(r.frequency_ratio == doctest::Approx(1.0));
    CHECK_FALSE(r.flagged_missing);
    CHECK(r.predicted_hour_histogram[12] == 1);
    CHECK(r.predicted_hour_histogram[13] == 1);
    CHECK(r.predicted_hour_histogram[2] == 1);
    CHECK(r.in_window_fraction == doctest::Approx(2.0 / 3).epsilon(1e-12));
  }
  SUBCASE("never-predicted action is flagged") {
    std::vector<Sequence> truth(1, Sequence(24, 0));
    std::vector<Sequence> pred(1, Sequence(24, 0));
    truth[0][12] = 6;
    auto r = extension_report(truth, pred, 6);
    CHECK(r.predicted_count == 0);
    CHECK(r.flagged_missing);
    CHECK(r.frequency_ratio == 0.0);
  }
}

TEST_CASE("aggregate report") {
  std::vector<Sequence> truth = {{0, 1, 2}, {3, 4, 5}};
  std::vector<Sequence> pred = {{0, 1, 2}, {3, 4, 0}};
  auto r = build_report(truth, pred, 6);
  CHECK(r.n_sequences == 2);
  CHECK(r.cover.covered == 5);
  CHECK(r.exact_match_rate == doctest::Approx(5.0 / 6).epsilon(1e-12));
  CHECK(r.delta_h == doctest::Approx(r.dist_pred.entropy_bits -
                                     r.dist_true.entropy_bits));
  CHECK(r.confusion.rare_set == std::vector<int>{0, 3});
}
