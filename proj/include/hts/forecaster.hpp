#pragma once
// Multi-day attention sequence model: per-day 2-layer LSTM encoders, day-level
// multi-head self-attention with positional encoding, and an additive-attention
// decoder that emits the target day's 24-action sequence. Training uses teacher
// forcing with a linear decay schedule.

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "hts/domain.hpp"
#include "hts/numkit.hpp"
#include "hts/rng.hpp"
#include "hts/synthgen.hpp"

namespace hts::forecast {

struct ForecasterConfig {
  int hidden_dim = 128;
  int encoder_layers = 2;
  int history_days = 3;
  int n_heads = 4;
  int n_actions = 6;
  int batch_size = 32;
  int epochs = 30;
  int hours_per_day = 24;  // shrunk only by micro test configurations
  double learning_rate = 1e-3;
  double tf_start = 0.8;
  double tf_end = 0.2;
  std::uint64_t seed = 42;

  int feature_dim() const { return n_actions + 8; }
  void validate() const;
};

// teacher-forcing ratio at epoch e; linear from tf_start to tf_end.
double tf_schedule(const ForecasterConfig& cfg, int epoch);

struct Sample {
  std::vector<std::vector<std::vector<double>>> hist;  // H x hours x feature_dim
  std::vector<std::vector<double>> env;                // hours x 8 (target day, env only)
  std::vector<int> target;                             // hours (empty for prediction)
  int target_day = -1;
};

Sample make_sample(const std::vector<domain::DayRecord>& days, int target_day,
                   int history_days, int n_actions);
std::vector<Sample> make_samples(const std::vector<domain::DayRecord>& days,
                                 const std::vector<int>& targets, int history_days,
                                 int n_actions);

// Sinusoidal positional encoding value for slot `pos`, coordinate `k` of `dim`.
double positional_encoding(int pos, int k, int dim);

class Forecaster {
 public:
  explicit Forecaster(const ForecasterConfig& cfg);             // seeded init
  Forecaster(const ForecasterConfig& cfg, num::ParamStore params);  // from checkpoint

  const ForecasterConfig& config() const { return cfg_; }
  num::ParamStore& params() { return params_; }
  const num::ParamStore& params() const { return params_; }

  struct Cache;  // opaque forward cache for backward

  struct Forward {
    std::vector<std::vector<double>> logits;  // hours x n_actions
    std::vector<std::vector<double>> probs;
    std::vector<int> argmax;
    double loss = 0.0;  // mean per-hour cross-entropy when targets present
  };

  // coins == nullptr makes the teacher decision deterministic:
  // teacher iff tf_ratio >= 1. Targets required whenever teacher forcing can occur.
  Forward forward(const Sample& s, double tf_ratio, rng::Stream* coins, Cache* cache) const;

  // Accumulates mean-cross-entropy gradients for one sample into g.
  void backward(const Cache& cache, const Sample& s, num::GradBuffers& g) const;

  // Greedy decoding; deterministic.
  Forward predict(const Sample& s) const;

  // Exposed sub-operations (also used internally).
  // 2-layer recurrent encoding of one day: (hourly top states, day embedding).
  std::pair<std::vector<std::vector<double>>, std::vector<double>> encode_day(
      const std::vector<std::vector<double>>& day_features) const;
  // Positional encoding + multi-head self-attention over day embeddings.
  std::vector<std::vector<double>> attend_days(
      const std::vector<std::vector<double>>& day_embeddings) const;
  // Attention weights of the day-level self-attention (head 0) for inspection.
  std::vector<std::vector<double>> day_attention_weights(
      const std::vector<std::vector<double>>& day_embeddings) const;

  ~Forecaster();
  Forecaster(Forecaster&&) noexcept;
  Forecaster& operator=(Forecaster&&) noexcept;
  Forecaster(const Forecaster&) = delete;
  Forecaster& operator=(const Forecaster&) = delete;

  static num::ParamStore make_params(const ForecasterConfig& cfg, bool seeded_init);

  Cache* new_cache() const;
  static void free_cache(Cache* c);

 private:
  ForecasterConfig cfg_;
  num::ParamStore params_;
};

struct Checkpoint {
  ForecasterConfig config;
  num::ParamStore params;  // best-validation snapshot
  num::AdamState opt;
  int epoch = 0;  // epoch of the retained snapshot
  std::vector<double> train_curve;
  std::vector<double> val_curve;
  std::uint64_t registry_version = 0;
};

using EpochCallback = std::function<void(int epoch, double train_loss, double val_loss)>;

Checkpoint train_forecaster(const std::vector<domain::DayRecord>& days,
                            const synthgen::SplitSets& split, const ForecasterConfig& cfg,
                            const EpochCallback& on_epoch = {});

struct Prediction {
  std::vector<int> actions;                 // hours
  std::vector<std::vector<double>> probs;   // hours x n_actions
};

Prediction predict_day(const Checkpoint& ckpt, const std::vector<domain::DayRecord>& history,
                       const std::vector<domain::EnvSnapshot>& target_env);

}  // namespace hts::forecast
