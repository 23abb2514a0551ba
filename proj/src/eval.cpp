#include "hts/eval.hpp"

#include <cmath>
#include <stdexcept>

namespace hts::eval {

namespace {

void check_actions(const std::vector<Sequence>& seqs, int n_actions, const char* who) {
  for (const auto& s : seqs)
    for (int a : s)
      if (a < 0 || a >= n_actions)
        throw std::invalid_argument(std::string(who) + ": action id out of range");
}

}  // namespace

Distribution entropy_and_distribution(const std::vector<Sequence>& seqs, int n_actions) {
  if (n_actions <= 0) throw std::invalid_argument("entropy_and_distribution: n_actions <= 0");
  check_actions(seqs, n_actions, "entropy_and_distribution");
  std::vector<long> counts(n_actions, 0);
  long total = 0;
  for (const auto& s : seqs)
    for (int a : s) {
      ++counts[a];
      ++total;
    }
  if (total == 0) throw std::invalid_argument("entropy_and_distribution: empty input");
  Distribution d;
  d.frequencies.resize(n_actions);
  for (int a = 0; a < n_actions; ++a) {
    const double p = static_cast<double>(counts[a]) / total;
    d.frequencies[a] = p;
    if (p > 0.0) d.entropy_bits -= p * std::log2(p);
  }
  return d;
}

Coverage coverage(const std::vector<Sequence>& predicted, int n_actions) {
  check_actions(predicted, n_actions, "coverage");
  std::vector<bool> seen(n_actions, false);
  for (const auto& s : predicted)
    for (int a : s) seen[a] = true;
  Coverage c;
  c.total = n_actions;
  for (bool b : seen) c.covered += b;
  return c;
}

ConfusionReport confusion_and_recall(const std::vector<Sequence>& truth,
                                     const std::vector<Sequence>& predicted, int n_actions,
                                     const std::vector<int>& rare_set) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("confusion_and_recall: sequence count mismatch");
  check_actions(truth, n_actions, "confusion_and_recall");
  check_actions(predicted, n_actions, "confusion_and_recall");
  ConfusionReport r;
  r.rare_set = rare_set;
  r.matrix.assign(n_actions, std::vector<long>(n_actions, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].size() != predicted[i].size())
      throw std::invalid_argument("confusion_and_recall: sequence length mismatch");
    for (std::size_t h = 0; h < truth[i].size(); ++h) ++r.matrix[truth[i][h]][predicted[i][h]];
  }
  r.per_class_recall.resize(n_actions);
  for (int c = 0; c < n_actions; ++c) {
    long row = 0;
    for (long v : r.matrix[c]) row += v;
    r.per_class_recall[c] = row == 0 ? 1.0 : static_cast<double>(r.matrix[c][c]) / row;
  }
  long tp = 0, pos = 0;
  for (int c : rare_set) {
    if (c < 0 || c >= n_actions)
      throw std::invalid_argument("confusion_and_recall: rare class out of range");
    tp += r.matrix[c][c];
    for (long v : r.matrix[c]) pos += v;
  }
  r.rare_recall = pos == 0 ? 0.0 : static_cast<double>(tp) / pos;
  return r;
}

namespace {

// within-day first-order transition counts, row-normalized; zero rows uniform
std::pair<std::vector<std::vector<double>>, std::vector<bool>> transition_matrix(
    const std::vector<Sequence>& seqs, int n) {
  std::vector<std::vector<long>> counts(n, std::vector<long>(n, 0));
  for (const auto& s : seqs)
    for (std::size_t h = 0; h + 1 < s.size(); ++h) ++counts[s[h]][s[h + 1]];
  std::vector<std::vector<double>> t(n, std::vector<double>(n));
  std::vector<bool> flagged(n, false);
  for (int a = 0; a < n; ++a) {
    long row = 0;
    for (long v : counts[a]) row += v;
    if (row == 0) {
      flagged[a] = true;
      for (int b = 0; b < n; ++b) t[a][b] = 1.0 / n;
    } else {
      for (int b = 0; b < n; ++b) t[a][b] = static_cast<double>(counts[a][b]) / row;
    }
  }
  return {std::move(t), std::move(flagged)};
}

}  // namespace

TransitionReport transition_similarity(const std::vector<Sequence>& truth,
                                       const std::vector<Sequence>& predicted, int n_actions) {
  check_actions(truth, n_actions, "transition_similarity");
  check_actions(predicted, n_actions, "transition_similarity");
  TransitionReport r;
  auto [tt, ft] = transition_matrix(truth, n_actions);
  auto [tp, fp] = transition_matrix(predicted, n_actions);
  r.t_true = std::move(tt);
  r.t_pred = std::move(tp);
  r.flagged_true = std::move(ft);
  r.flagged_pred = std::move(fp);
  double total = 0.0;
  for (int a = 0; a < n_actions; ++a) {
    double row = 0.0;
    for (int b = 0; b < n_actions; ++b) row += std::fabs(r.t_true[a][b] - r.t_pred[a][b]);
    total += row;
  }
  r.l1_distance = total / n_actions;
  return r;
}

ExtensionReport extension_report(const std::vector<Sequence>& truth,
                                 const std::vector<Sequence>& predicted, int action,
                                 int window_lo, int window_hi) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("extension_report: sequence count mismatch");
  ExtensionReport r;
  r.action = action;
  r.window_lo = window_lo;
  r.window_hi = window_hi;
  r.predicted_hour_histogram.assign(24, 0);
  long in_window = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (int a : truth[i])
      if (a == action) ++r.true_count;
    for (std::size_t h = 0; h < predicted[i].size(); ++h) {
      if (predicted[i][h] != action) continue;
      ++r.predicted_count;
      if (h < 24) ++r.predicted_hour_histogram[h];
      if (static_cast<int>(h) >= window_lo && static_cast<int>(h) <= window_hi) ++in_window;
    }
  }
  r.flagged_missing = r.predicted_count == 0;
  r.frequency_ratio =
      r.true_count == 0 ? 0.0 : static_cast<double>(r.predicted_count) / r.true_count;
  r.in_window_fraction =
      r.predicted_count == 0 ? 0.0 : static_cast<double>(in_window) / r.predicted_count;
  return r;
}

EvalReport build_report(const std::vector<Sequence>& truth,
                        const std::vector<Sequence>& predicted, int n_actions,
                        const std::vector<int>& rare_set) {
  EvalReport r;
  r.n_actions = n_actions;
  r.n_sequences = predicted.size();
  r.dist_true = entropy_and_distribution(truth, n_actions);
  r.dist_pred = entropy_and_distribution(predicted, n_actions);
  r.delta_h = r.dist_pred.entropy_bits - r.dist_true.entropy_bits;
  r.cover = coverage(predicted, n_actions);
  r.confusion = confusion_and_recall(truth, predicted, n_actions, rare_set);
  r.transitions = transition_similarity(truth, predicted, n_actions);
  long match = 0, total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    for (std::size_t h = 0; h < truth[i].size(); ++h) {
      match += truth[i][h] == predicted[i][h];
      ++total;
    }
  r.exact_match_rate = total == 0 ? 0.0 : static_cast<double>(match) / total;
  return r;
}

}  // namespace hts::eval
