#pragma once
// Metrics harness: action distributions, Shannon entropy, coverage,
// confusion/recall, within-day transition similarity, and the action-extension
// report. All metrics are pure aggregates over aligned per-day sequences.

#include <string>
#include <vector>

namespace hts::eval {

using Sequence = std::vector<int>;  // one day's hourly actions

struct Distribution {
  std::vector<double> frequencies;  // sums to 1
  double entropy_bits = 0.0;
};

// Empirical frequencies over all hourly steps; entropy with 0*log0 := 0.
Distribution entropy_and_distribution(const std::vector<Sequence>& seqs, int n_actions);

struct Coverage {
  int covered = 0;
  int total = 0;
};
Coverage coverage(const std::vector<Sequence>& predicted, int n_actions);

struct ConfusionReport {
  std::vector<std::vector<long>> matrix;  // [true][pred]
  std::vector<double> per_class_recall;   // TP / (TP + FN); 0/0 -> 1
  double rare_recall = 0.0;               // pooled over rare_set
  std::vector<int> rare_set;
};
ConfusionReport confusion_and_recall(const std::vector<Sequence>& truth,
                                     const std::vector<Sequence>& predicted, int n_actions,
                                     const std::vector<int>& rare_set = {0, 3});

struct TransitionReport {
  std::vector<std::vector<double>> t_true;  // row-normalized
  std::vector<std::vector<double>> t_pred;
  std::vector<bool> flagged_true;  // rows with zero counts (made uniform)
  std::vector<bool> flagged_pred;
  double l1_distance = 0.0;  // mean over rows of sum |diff|
};
TransitionReport transition_similarity(const std::vector<Sequence>& truth,
                                       const std::vector<Sequence>& predicted, int n_actions);

struct ExtensionReport {
  int action = 6;
  long true_count = 0;
  long predicted_count = 0;
  double frequency_ratio = 0.0;  // predicted / true; 0 when either absent
  bool flagged_missing = false;  // predicted never emits the action
  std::vector<long> predicted_hour_histogram;  // 24 bins
  double in_window_fraction = 0.0;
  int window_lo = 11, window_hi = 17;  // inclusive
};
ExtensionReport extension_report(const std::vector<Sequence>& truth,
                                 const std::vector<Sequence>& predicted, int action,
                                 int window_lo = 11, int window_hi = 17);

struct EvalReport {
  int n_actions = 0;
  std::size_t n_sequences = 0;
  Distribution dist_true, dist_pred;
  double delta_h = 0.0;
  Coverage cover;
  ConfusionReport confusion;
  TransitionReport transitions;
  double exact_match_rate = 0.0;  // fraction of aligned hours predicted exactly
};
EvalReport build_report(const std::vector<Sequence>& truth,
                        const std::vector<Sequence>& predicted, int n_actions,
                        const std::vector<int>& rare_set = {0, 3});

}  // namespace hts::eval
