#include "hts/forecaster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace hts::forecast {

using num::LstmStepCache;
using num::ParamStore;
using num::Tensor;

void ForecasterConfig::validate() const {
  if (hidden_dim <= 0 || hidden_dim % n_heads != 0)
    throw std::invalid_argument("ForecasterConfig: hidden_dim must be positive and divisible by n_heads");
  if (encoder_layers != 2)
    throw std::invalid_argument("ForecasterConfig: only 2 encoder layers are supported");
  if (history_days <= 0) throw std::invalid_argument("ForecasterConfig: history_days must be positive");
  if (n_actions != 6 && n_actions != 7)
    throw std::invalid_argument("ForecasterConfig: n_actions must be 6 or 7");
  if (hours_per_day <= 0 || hours_per_day > 24)
    throw std::invalid_argument("ForecasterConfig: hours_per_day must be in 1..24");
  if (batch_size <= 0 || epochs <= 0)
    throw std::invalid_argument("ForecasterConfig: batch_size and epochs must be positive");
  if (!(0.0 <= tf_end && tf_end <= tf_start && tf_start <= 1.0))
    throw std::invalid_argument("ForecasterConfig: need 0 <= tf_end <= tf_start <= 1");
}

double tf_schedule(const ForecasterConfig& cfg, int epoch) {
  if (cfg.epochs <= 1) return cfg.tf_start;
  const double frac = static_cast<double>(epoch) / (cfg.epochs - 1);
  return cfg.tf_start + (cfg.tf_end - cfg.tf_start) * frac;
}

Sample make_sample(const std::vector<domain::DayRecord>& days, int target_day,
                   int history_days, int n_actions) {
  if (target_day < history_days || target_day >= static_cast<int>(days.size()))
    throw std::invalid_argument("make_sample: target day out of range");
  Sample s;
  s.target_day = target_day;
  s.hist.reserve(history_days);
  for (int d = target_day - history_days; d < target_day; ++d) {
    const auto& day = days[d];
    std::vector<std::vector<double>> feats;
    feats.reserve(day.hours.size());
    for (const auto& hr : day.hours)
      feats.push_back(domain::encode_hour_features(hr.env.hour, hr.env, hr.action, n_actions));
    s.hist.push_back(std::move(feats));
  }
  const auto& tgt = days[target_day];
  s.env.reserve(tgt.hours.size());
  s.target.reserve(tgt.hours.size());
  for (const auto& hr : tgt.hours) {
    s.env.push_back(domain::encode_env_features(hr.env.hour, hr.env));
    if (hr.action < 0 || hr.action >= n_actions)
      throw std::invalid_argument("make_sample: action id out of range for n_actions");
    s.target.push_back(hr.action);
  }
  return s;
}

std::vector<Sample> make_samples(const std::vector<domain::DayRecord>& days,
                                 const std::vector<int>& targets, int history_days,
                                 int n_actions) {
  std::vector<Sample> out;
  out.reserve(targets.size());
  for (int t : targets) out.push_back(make_sample(days, t, history_days, n_actions));
  return out;
}

double positional_encoding(int pos, int k, int dim) {
  const double exponent = static_cast<double>(2 * (k / 2)) / dim;
  const double denom = std::pow(10000.0, exponent);
  return (k % 2 == 0) ? std::sin(pos / denom) : std::cos(pos / denom);
}

// ---------------------------------------------------------------------------

namespace {

void seeded_uniform(Tensor& t, rng::Stream& s) {
  const double fan = t.shape.size() >= 2 ? static_cast<double>(t.cols())
                                         : static_cast<double>(t.size());
  const double r = 1.0 / std::sqrt(fan);
  for (double& v : t.data) v = s.next_range(-r, r);
}

}  // namespace

num::ParamStore Forecaster::make_params(const ForecasterConfig& cfg, bool seeded_init) {
  cfg.validate();
  const std::size_t h = cfg.hidden_dim;
  const std::size_t f = cfg.feature_dim();
  const std::size_t n = cfg.n_actions;
  const std::size_t dec_in = n + 8 + h;
  ParamStore ps;
  ps.add("enc0.Wx", {4 * h, f});
  ps.add("enc0.Wh", {4 * h, h});
  ps.add("enc0.b", {4 * h});
  ps.add("enc1.Wx", {4 * h, h});
  ps.add("enc1.Wh", {4 * h, h});
  ps.add("enc1.b", {4 * h});
  ps.add("day.Wq", {h, h});
  ps.add("day.Wk", {h, h});
  ps.add("day.Wv", {h, h});
  ps.add("day.Wo", {h, h});
  ps.add("attn.Wq", {h, h});
  ps.add("attn.Wk", {h, h});
  ps.add("attn.v", {h});
  ps.add("dec0.Wx", {4 * h, dec_in});
  ps.add("dec0.Wh", {4 * h, h});
  ps.add("dec0.b", {4 * h});
  ps.add("dec1.Wx", {4 * h, h});
  ps.add("dec1.Wh", {4 * h, h});
  ps.add("dec1.b", {4 * h});
  ps.add("out.W", {n, h});
  ps.add("out.b", {n});
  ps.add("start", {n});
  if (seeded_init) {
    rng::Stream init(cfg.seed, "forecaster.init");
    for (std::size_t i = 0; i < ps.count(); ++i) seeded_uniform(ps.entry(i).value, init);
    // biases start at zero, except the forget gate which starts open
    for (const char* bias : {"enc0.b", "enc1.b", "dec0.b", "dec1.b"}) {
      Tensor& b = ps.value(bias);
      std::fill(b.data.begin(), b.data.end(), 0.0);
      for (std::size_t k = h; k < 2 * h; ++k) b.data[k] = 1.0;
    }
  }
  return ps;
}

struct Forecaster::Cache {
  // encoder: [day][layer][hour]
  std::vector<std::array<std::vector<LstmStepCache>, 2>> enc;
  std::vector<std::vector<double>> enc_top;  // day -> hours*h top states
  std::vector<double> day_emb;               // H*h, after positional encoding
  num::MhaCache mha;
  std::vector<double> attended;              // H*h
  std::vector<double> memory;                // (H*hours)*h
  std::vector<double> Kmem;                  // (H*hours)*h
  std::array<std::vector<LstmStepCache>, 2> dec;
  std::vector<num::AddAttnCache> attn;       // per decoder step
  std::vector<std::vector<double>> probs;    // per step
  std::vector<int> targets;                  // copy used by backward
};

Forecaster::Cache* Forecaster::new_cache() const { return new Cache(); }
void Forecaster::free_cache(Cache* c) { delete c; }

Forecaster::Forecaster(const ForecasterConfig& cfg)
    : cfg_(cfg), params_(make_params(cfg, /*seeded_init=*/true)) {}

Forecaster::Forecaster(const ForecasterConfig& cfg, num::ParamStore params)
    : cfg_(cfg), params_(std::move(params)) {
  ParamStore expect = make_params(cfg, /*seeded_init=*/false);
  if (expect.count() != params_.count())
    throw std::invalid_argument("Forecaster: checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < expect.count(); ++i) {
    if (expect.entry(i).name != params_.entry(i).name ||
        expect.entry(i).value.shape != params_.entry(i).value.shape)
      throw std::invalid_argument("Forecaster: checkpoint parameter mismatch at " +
                                  expect.entry(i).name);
  }
}

Forecaster::~Forecaster() = default;
Forecaster::Forecaster(Forecaster&&) noexcept = default;
Forecaster& Forecaster::operator=(Forecaster&&) noexcept = default;

std::pair<std::vector<std::vector<double>>, std::vector<double>> Forecaster::encode_day(
    const std::vector<std::vector<double>>& day_features) const {
  const std::size_t h = cfg_.hidden_dim;
  const Tensor& Wx0 = params_.value("enc0.Wx");
  const Tensor& Wh0 = params_.value("enc0.Wh");
  const Tensor& b0 = params_.value("enc0.b");
  const Tensor& Wx1 = params_.value("enc1.Wx");
  const Tensor& Wh1 = params_.value("enc1.Wh");
  const Tensor& b1 = params_.value("enc1.b");

  std::vector<double> h0(h, 0.0), c0(h, 0.0), h1(h, 0.0), c1(h, 0.0);
  std::vector<double> h0n(h), c0n(h), h1n(h), c1n(h);
  std::vector<std::vector<double>> top;
  top.reserve(day_features.size());
  for (const auto& x : day_features) {
    if (x.size() != static_cast<std::size_t>(cfg_.feature_dim()))
      throw std::invalid_argument("encode_day: feature dimension mismatch");
    num::lstm_forward(Wx0, Wh0, b0, x.data(), x.size(), h0.data(), c0.data(), h0n.data(),
                      c0n.data(), nullptr);
    h0.swap(h0n);
    c0.swap(c0n);
    num::lstm_forward(Wx1, Wh1, b1, h0.data(), h, h1.data(), c1.data(), h1n.data(), c1n.data(),
                      nullptr);
    h1.swap(h1n);
    c1.swap(c1n);
    top.push_back(h1);
  }
  return {std::move(top), h1};
}

std::vector<std::vector<double>> Forecaster::attend_days(
    const std::vector<std::vector<double>>& day_embeddings) const {
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t H = day_embeddings.size();
  if (H == 0) throw std::invalid_argument("attend_days: no day embeddings");
  std::vector<double> X(H * h);
  for (std::size_t d = 0; d < H; ++d) {
    if (day_embeddings[d].size() != h)
      throw std::invalid_argument("attend_days: embedding dimension mismatch");
    for (std::size_t k = 0; k < h; ++k)
      X[d * h + k] = day_embeddings[d][k] + positional_encoding(d, k, h);
  }
  std::vector<double> Y(H * h);
  num::mha_forward(params_.value("day.Wq"), params_.value("day.Wk"), params_.value("day.Wv"),
                   params_.value("day.Wo"), X.data(), H, h, cfg_.n_heads, Y.data(), nullptr);
  std::vector<std::vector<double>> out(H, std::vector<double>(h));
  for (std::size_t d = 0; d < H; ++d)
    std::copy(&Y[d * h], &Y[(d + 1) * h], out[d].begin());
  return out;
}

std::vector<std::vector<double>> Forecaster::day_attention_weights(
    const std::vector<std::vector<double>>& day_embeddings) const {
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t H = day_embeddings.size();
  std::vector<double> X(H * h);
  for (std::size_t d = 0; d < H; ++d)
    for (std::size_t k = 0; k < h; ++k)
      X[d * h + k] = day_embeddings[d][k] + positional_encoding(d, k, h);
  std::vector<double> Y(H * h);
  num::MhaCache cache;
  num::mha_forward(params_.value("day.Wq"), params_.value("day.Wk"), params_.value("day.Wv"),
                   params_.value("day.Wo"), X.data(), H, h, cfg_.n_heads, Y.data(), &cache);
  std::vector<std::vector<double>> rows(H, std::vector<double>(H));
  for (std::size_t t = 0; t < H; ++t)
    for (std::size_t j = 0; j < H; ++j) rows[t][j] = cache.A[t * H + j];  // head 0
  return rows;
}

Forecaster::Forward Forecaster::forward(const Sample& s, double tf_ratio, rng::Stream* coins,
                                        Cache* cache) const {
  if (tf_ratio < 0.0 || tf_ratio > 1.0)
    throw std::invalid_argument("forward: tf_ratio outside [0,1]");
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t n = cfg_.n_actions;
  const std::size_t H = cfg_.history_days;
  const std::size_t hours = cfg_.hours_per_day;
  if (s.hist.size() != H) throw std::invalid_argument("forward: history length != history_days");
  if (s.env.size() != hours) throw std::invalid_argument("forward: target env length mismatch");
  const bool with_loss = !s.target.empty();
  if (with_loss && s.target.size() != hours)
    throw std::invalid_argument("forward: target length mismatch");
  for (const auto& day : s.hist)
    if (day.size() != hours) throw std::invalid_argument("forward: history day length mismatch");

  const Tensor& eWx0 = params_.value("enc0.Wx");
  const Tensor& eWh0 = params_.value("enc0.Wh");
  const Tensor& eb0 = params_.value("enc0.b");
  const Tensor& eWx1 = params_.value("enc1.Wx");
  const Tensor& eWh1 = params_.value("enc1.Wh");
  const Tensor& eb1 = params_.value("enc1.b");
  const Tensor& aWq = params_.value("attn.Wq");
  const Tensor& aWk = params_.value("attn.Wk");
  const std::vector<double>& av = params_.value("attn.v").data;
  const Tensor& dWx0 = params_.value("dec0.Wx");
  const Tensor& dWh0 = params_.value("dec0.Wh");
  const Tensor& db0 = params_.value("dec0.b");
  const Tensor& dWx1 = params_.value("dec1.Wx");
  const Tensor& dWh1 = params_.value("dec1.Wh");
  const Tensor& db1 = params_.value("dec1.b");
  const Tensor& oW = params_.value("out.W");
  const Tensor& ob = params_.value("out.b");
  const std::vector<double>& start = params_.value("start").data;

  Cache local;
  Cache& C = cache ? *cache : local;
  C.enc.assign(H, {});
  C.enc_top.assign(H, std::vector<double>(hours * h));

  // per-day encoder
  std::vector<double> raw_day_emb(H * h);
  for (std::size_t d = 0; d < H; ++d) {
    C.enc[d][0].resize(hours);
    C.enc[d][1].resize(hours);
    std::vector<double> h0(h, 0.0), c0(h, 0.0), h1(h, 0.0), c1(h, 0.0);
    std::vector<double> h0n(h), c0n(h), h1n(h), c1n(h);
    for (std::size_t t = 0; t < hours; ++t) {
      const auto& x = s.hist[d][t];
      if (x.size() != static_cast<std::size_t>(cfg_.feature_dim()))
        throw std::invalid_argument("forward: history feature dimension mismatch");
      num::lstm_forward(eWx0, eWh0, eb0, x.data(), x.size(), h0.data(), c0.data(), h0n.data(),
                        c0n.data(), cache ? &C.enc[d][0][t] : nullptr);
      h0.swap(h0n);
      c0.swap(c0n);
      num::lstm_forward(eWx1, eWh1, eb1, h0.data(), h, h1.data(), c1.data(), h1n.data(),
                        c1n.data(), cache ? &C.enc[d][1][t] : nullptr);
      h1.swap(h1n);
      c1.swap(c1n);
      std::copy(h1.begin(), h1.end(), C.enc_top[d].begin() + t * h);
    }
    std::copy(h1.begin(), h1.end(), raw_day_emb.begin() + d * h);
  }

  // day-level self-attention with positional encoding
  C.day_emb.assign(H * h, 0.0);
  for (std::size_t d = 0; d < H; ++d)
    for (std::size_t k = 0; k < h; ++k)
      C.day_emb[d * h + k] = raw_day_emb[d * h + k] + positional_encoding(d, k, h);
  C.attended.assign(H * h, 0.0);
  num::mha_forward(params_.value("day.Wq"), params_.value("day.Wk"), params_.value("day.Wv"),
                   params_.value("day.Wo"), C.day_emb.data(), H, h, cfg_.n_heads,
                   C.attended.data(), cache ? &C.mha : nullptr);

  // memory: hourly encoder states with the attended day vector as a residual
  const std::size_t N = H * hours;
  C.memory.assign(N * h, 0.0);
  for (std::size_t d = 0; d < H; ++d)
    for (std::size_t t = 0; t < hours; ++t)
      for (std::size_t k = 0; k < h; ++k)
        C.memory[(d * hours + t) * h + k] = C.enc_top[d][t * h + k] + C.attended[d * h + k];
  C.Kmem.assign(N * h, 0.0);
  for (std::size_t j = 0; j < N; ++j)
    num::matvec(aWk.data.data(), &C.memory[j * h], &C.Kmem[j * h], h, h);

  // decoder
  C.dec[0].resize(hours);
  C.dec[1].resize(hours);
  C.attn.resize(hours);
  C.probs.assign(hours, {});
  C.targets = s.target;

  Forward out;
  out.logits.assign(hours, std::vector<double>(n));
  out.probs.assign(hours, {});
  out.argmax.assign(hours, 0);

  const std::size_t dec_in = n + 8 + h;
  std::vector<double> h0(h, 0.0), c0(h, 0.0), h1(h, 0.0), c1(h, 0.0);
  std::vector<double> h0n(h), c0n(h), h1n(h), c1n(h);
  std::vector<double> x(dec_in), ctx(h), zero_q(h, 0.0);
  double loss = 0.0;
  int prev_pred = -1;
  for (std::size_t t = 0; t < hours; ++t) {
    std::fill(x.begin(), x.begin() + n, 0.0);
    if (t == 0) {
      std::copy(start.begin(), start.end(), x.begin());
    } else {
      bool teacher;
      if (coins)
        teacher = coins->next_double() < tf_ratio;
      else
        teacher = tf_ratio >= 1.0;
      if (teacher) {
        if (!with_loss) throw std::invalid_argument("forward: teacher forcing needs targets");
        x[s.target[t - 1]] = 1.0;
      } else {
        x[prev_pred] = 1.0;
      }
    }
    std::copy(s.env[t].begin(), s.env[t].end(), x.begin() + n);
    const double* q = t == 0 ? zero_q.data() : h1.data();
    num::additive_attention_forward(aWq, av, q, C.Kmem.data(), C.memory.data(), N, h, ctx.data(),
                                    cache ? &C.attn[t] : nullptr);
    std::copy(ctx.begin(), ctx.end(), x.begin() + n + 8);

    num::lstm_forward(dWx0, dWh0, db0, x.data(), dec_in, h0.data(), c0.data(), h0n.data(),
                      c0n.data(), cache ? &C.dec[0][t] : nullptr);
    h0.swap(h0n);
    c0.swap(c0n);
    num::lstm_forward(dWx1, dWh1, db1, h0.data(), h, h1.data(), c1.data(), h1n.data(), c1n.data(),
                      cache ? &C.dec[1][t] : nullptr);
    h1.swap(h1n);
    c1.swap(c1n);

    std::vector<double>& logits = out.logits[t];
    num::matvec(oW.data.data(), h1.data(), logits.data(), n, h);
    for (std::size_t k = 0; k < n; ++k) logits[k] += ob.data[k];
    out.probs[t] = num::softmax(logits);
    prev_pred = static_cast<int>(
        std::max_element(out.probs[t].begin(), out.probs[t].end()) - out.probs[t].begin());
    out.argmax[t] = prev_pred;
    if (with_loss) loss -= std::log(std::max(out.probs[t][s.target[t]], 1e-300));
    if (cache) C.probs[t] = out.probs[t];
  }
  out.loss = with_loss ? loss / hours : 0.0;
  return out;
}

void Forecaster::backward(const Cache& C, const Sample& s, num::GradBuffers& g) const {
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t n = cfg_.n_actions;
  const std::size_t H = cfg_.history_days;
  const std::size_t hours = cfg_.hours_per_day;
  const std::size_t N = H * hours;
  const std::size_t dec_in = n + 8 + h;
  if (C.targets.empty()) throw std::invalid_argument("backward: forward cache has no targets");

  const ParamStore& ps = params_;
  auto G = [&](const char* name) { return g[ps.index_of(name)].data(); };
  const Tensor& eWx0 = ps.value("enc0.Wx");
  const Tensor& eWh0 = ps.value("enc0.Wh");
  const Tensor& eWx1 = ps.value("enc1.Wx");
  const Tensor& eWh1 = ps.value("enc1.Wh");
  const Tensor& aWq = ps.value("attn.Wq");
  const Tensor& aWk = ps.value("attn.Wk");
  const std::vector<double>& av = ps.value("attn.v").data;
  const Tensor& dWx0 = ps.value("dec0.Wx");
  const Tensor& dWh0 = ps.value("dec0.Wh");
  const Tensor& dWx1 = ps.value("dec1.Wx");
  const Tensor& dWh1 = ps.value("dec1.Wh");
  const Tensor& oW = ps.value("out.W");

  const double inv_hours = 1.0 / static_cast<double>(hours);

  std::vector<double> dmem(N * h, 0.0), dK(N * h, 0.0);
  std::vector<double> dh1(h, 0.0), dc1(h, 0.0), dh0(h, 0.0), dc0(h, 0.0);
  std::vector<double> dh1_tmp(h), dc1_tmp(h), dh0_tmp(h), dc0_tmp(h);
  std::vector<double> dx(dec_in), dlogits(n), dh_mid(h);

  // decoder, reverse
  for (std::size_t t = hours; t-- > 0;) {
    for (std::size_t k = 0; k < n; ++k) dlogits[k] = C.probs[t][k] * inv_hours;
    dlogits[C.targets[t]] -= inv_hours;
    {
      // h1 of step t isn't stored directly; reassemble it as o * tanh(c)
      std::vector<double> h1v(h);
      for (std::size_t k = 0; k < h; ++k) h1v[k] = C.dec[1][t].o[k] * C.dec[1][t].tanh_c[k];
      num::outer_accum(dlogits.data(), h1v.data(), G("out.W"), n, h);
      for (std::size_t k = 0; k < n; ++k) G("out.b")[k] += dlogits[k];
      num::matvec_t_accum(oW.data.data(), dlogits.data(), dh1.data(), n, h);
    }

    std::fill(dh_mid.begin(), dh_mid.end(), 0.0);
    std::fill(dh1_tmp.begin(), dh1_tmp.end(), 0.0);
    num::lstm_backward(dWx1, dWh1, C.dec[1][t], dh1.data(), dc1.data(), G("dec1.Wx"),
                       G("dec1.Wh"), G("dec1.b"), dh_mid.data(), dh1_tmp.data(), dc1_tmp.data());
    dh1 = dh1_tmp;
    dc1 = dc1_tmp;

    for (std::size_t k = 0; k < h; ++k) dh0[k] += dh_mid[k];
    std::fill(dx.begin(), dx.end(), 0.0);
    std::fill(dh0_tmp.begin(), dh0_tmp.end(), 0.0);
    num::lstm_backward(dWx0, dWh0, C.dec[0][t], dh0.data(), dc0.data(), G("dec0.Wx"),
                       G("dec0.Wh"), G("dec0.b"), dx.data(), dh0_tmp.data(), dc0_tmp.data());
    dh0 = dh0_tmp;
    dc0 = dc0_tmp;

    if (t == 0)
      for (std::size_t k = 0; k < n; ++k) G("start")[k] += dx[k];
    // env features and discrete feedback carry no parameter gradient

    // attention context gradient: query was h1 of step t-1 (zero at t==0)
    std::vector<double> dq(h, 0.0);
    num::additive_attention_backward(aWq, av, C.attn[t], C.memory.data(), dx.data() + n + 8,
                                     dq.data(), dK.data(), dmem.data(), G("attn.Wq"),
                                     G("attn.v"));
    if (t > 0)
      for (std::size_t k = 0; k < h; ++k) dh1[k] += dq[k];
  }

  // K = Wk * memory
  for (std::size_t j = 0; j < N; ++j) {
    num::outer_accum(&dK[j * h], &C.memory[j * h], G("attn.Wk"), h, h);
    num::matvec_t_accum(aWk.data.data(), &dK[j * h], &dmem[j * h], h, h);
  }

  // memory residual: split into hourly encoder states and attended day vectors
  std::vector<double> denc_top(H * hours * h, 0.0);
  std::vector<double> dattended(H * h, 0.0);
  for (std::size_t d = 0; d < H; ++d)
    for (std::size_t t = 0; t < hours; ++t)
      for (std::size_t k = 0; k < h; ++k) {
        const double v = dmem[(d * hours + t) * h + k];
        denc_top[(d * hours + t) * h + k] += v;
        dattended[d * h + k] += v;
      }

  // day-level self-attention backward (positional encoding is additive)
  std::vector<double> dday_emb(H * h, 0.0);
  num::mha_backward(ps.value("day.Wq"), ps.value("day.Wk"), ps.value("day.Wv"),
                    ps.value("day.Wo"), C.mha, dattended.data(), dday_emb.data(), G("day.Wq"),
                    G("day.Wk"), G("day.Wv"), G("day.Wo"));

  // encoder, reverse per day
  for (std::size_t d = 0; d < H; ++d) {
    std::vector<double> dh_top(h, 0.0), dc_top(h, 0.0);
    std::vector<double> dmid(hours * h, 0.0);  // grads into layer-1 inputs (= layer-0 h outputs)
    for (std::size_t k = 0; k < h; ++k) dh_top[k] = dday_emb[d * h + k];
    std::vector<double> dh_tmp(h), dc_tmp(h);
    for (std::size_t t = hours; t-- > 0;) {
      for (std::size_t k = 0; k < h; ++k) dh_top[k] += denc_top[(d * hours + t) * h + k];
      std::fill(dh_tmp.begin(), dh_tmp.end(), 0.0);
      num::lstm_backward(eWx1, eWh1, C.enc[d][1][t], dh_top.data(), dc_top.data(), G("enc1.Wx"),
                         G("enc1.Wh"), G("enc1.b"), &dmid[t * h], dh_tmp.data(), dc_tmp.data());
      dh_top = dh_tmp;
      dc_top = dc_tmp;
    }
    std::vector<double> dh_bot(h, 0.0), dc_bot(h, 0.0);
    for (std::size_t t = hours; t-- > 0;) {
      for (std::size_t k = 0; k < h; ++k) dh_bot[k] += dmid[t * h + k];
      std::fill(dh_tmp.begin(), dh_tmp.end(), 0.0);
      num::lstm_backward(eWx0, eWh0, C.enc[d][0][t], dh_bot.data(), dc_bot.data(), G("enc0.Wx"),
                         G("enc0.Wh"), G("enc0.b"), nullptr, dh_tmp.data(), dc_tmp.data());
      dh_bot = dh_tmp;
      dc_bot = dc_tmp;
    }
  }
  (void)s;
}

Forecaster::Forward Forecaster::predict(const Sample& s) const {
  Sample stripped = s;
  stripped.target.clear();
  return forward(stripped, 0.0, nullptr, nullptr);
}

// ---------------------------------------------------------------------------

Checkpoint train_forecaster(const std::vector<domain::DayRecord>& days,
                            const synthgen::SplitSets& split, const ForecasterConfig& cfg,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  if (split.train_targets.empty() || split.val_targets.empty())
    throw std::invalid_argument("train_forecaster: empty split");

  std::vector<Sample> train = make_samples(days, split.train_targets, cfg.history_days, cfg.n_actions);
  std::vector<Sample> val = make_samples(days, split.val_targets, cfg.history_days, cfg.n_actions);

  Forecaster model(cfg);
  num::AdamState opt;
  opt.cfg.lr = cfg.learning_rate;
  opt.init(model.params());

  rng::Stream shuffle_root(cfg.seed, "forecaster.shuffle");
  rng::Stream coin_root(cfg.seed, "forecaster.tf");

  Checkpoint ckpt;
  ckpt.config = cfg;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_params;

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::unique_ptr<Forecaster::Cache, void (*)(Forecaster::Cache*)> cache(model.new_cache(),
                                                                         &Forecaster::free_cache);
  num::GradBuffers grads = num::make_grad_buffers(model.params());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double tf = tf_schedule(cfg, epoch);
    {
      rng::Stream sh = shuffle_root.at(epoch);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[sh.next_below(i)]);
    }
    double train_loss = 0.0;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t bsz = std::min<std::size_t>(cfg.batch_size, order.size() - done);
      for (auto& buf : grads) std::fill(buf.begin(), buf.end(), 0.0);
      for (std::size_t b = 0; b < bsz; ++b) {
        const Sample& smp = train[order[done + b]];
        rng::Stream coins = coin_root.at(epoch, done + b);
        auto fwd = model.forward(smp, tf, &coins, cache.get());
        train_loss += fwd.loss;
        model.backward(*cache, smp, grads);
      }
      num::accumulate_grads(model.params(), grads, 1.0 / bsz);
      num::adam_step(model.params(), opt);
      done += bsz;
    }
    train_loss /= train.size();

    double val_loss = 0.0;
    for (const Sample& smp : val) val_loss += model.forward(smp, 1.0, nullptr, nullptr).loss;
    val_loss /= val.size();

    ckpt.train_curve.push_back(train_loss);
    ckpt.val_curve.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      ckpt.epoch = epoch;
      best_params.clear();
      for (std::size_t i = 0; i < model.params().count(); ++i)
        best_params.push_back(model.params().entry(i).value.data);
    }
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);
  }

  ckpt.params = Forecaster::make_params(cfg, /*seeded_init=*/false);
  for (std::size_t i = 0; i < ckpt.params.count(); ++i)
    ckpt.params.entry(i).value.data = best_params[i];
  ckpt.opt = std::move(opt);
  return ckpt;
}

Prediction predict_day(const Checkpoint& ckpt, const std::vector<domain::DayRecord>& history,
                       const std::vector<domain::EnvSnapshot>& target_env) {
  const ForecasterConfig& cfg = ckpt.config;
  if (static_cast<int>(history.size()) != cfg.history_days)
    throw std::invalid_argument("predict_day: history length != history_days");
  if (static_cast<int>(target_env.size()) != cfg.hours_per_day)
    throw std::invalid_argument("predict_day: target env length mismatch");

  Sample s;
  s.hist.reserve(history.size());
  for (const auto& day : history) {
    std::vector<std::vector<double>> feats;
    for (const auto& hr : day.hours)
      feats.push_back(domain::encode_hour_features(hr.env.hour, hr.env, hr.action, cfg.n_actions));
    s.hist.push_back(std::move(feats));
  }
  for (const auto& env : target_env) s.env.push_back(domain::encode_env_features(env.hour, env));

  num::ParamStore params = Forecaster::make_params(cfg, false);
  for (std::size_t i = 0; i < params.count(); ++i)
    params.entry(i).value.data = ckpt.params.entry(i).value.data;
  Forecaster model(cfg, std::move(params));
  auto fwd = model.predict(s);
  return {fwd.argmax, fwd.probs};
}

}  // namespace hts::forecast
