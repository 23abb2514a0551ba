#include "hts/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "hts/rng.hpp"

namespace hts::num {

namespace {

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": non-finite value in result");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  data.assign(n, 0.0);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
    throw std::invalid_argument("matmul: incompatible shapes");
  Tensor out({a.shape[0], b.shape[1]});
  for (std::size_t i = 0; i < a.shape[0]; ++i)
    for (std::size_t k = 0; k < a.shape[1]; ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      axpy(aik, &b.data[k * b.shape[1]], &out.data[i * b.shape[1]], b.shape[1]);
    }
  check_finite(out, "matmul");
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
  check_finite(out, "add");
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mul: shape mismatch");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
  check_finite(out, "mul");
  return out;
}

Tensor tanh_t(const Tensor& a) {
  Tensor out = a;
  for (double& v : out.data) v = std::tanh(v);
  return out;
}

Tensor sigmoid_t(const Tensor& a) {
  Tensor out = a;
  for (double& v : out.data) v = sigmoid(v);
  return out;
}

Tensor concat(const Tensor& a, const Tensor& b, int axis) {
  if (a.shape.size() != b.shape.size()) throw std::invalid_argument("concat: rank mismatch");
  if (a.shape.size() == 1) {
    if (axis != 0) throw std::invalid_argument("concat: bad axis for rank-1");
    Tensor out({a.shape[0] + b.shape[0]});
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.size());
    return out;
  }
  if (a.shape.size() != 2) throw std::invalid_argument("concat: only rank 1/2 supported");
  if (axis == 0) {
    if (a.shape[1] != b.shape[1]) throw std::invalid_argument("concat: column mismatch");
    Tensor out({a.shape[0] + b.shape[0], a.shape[1]});
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.size());
    return out;
  }
  if (axis == 1) {
    if (a.shape[0] != b.shape[0]) throw std::invalid_argument("concat: row mismatch");
    Tensor out({a.shape[0], a.shape[1] + b.shape[1]});
    for (std::size_t r = 0; r < a.shape[0]; ++r) {
      std::copy(&a.data[r * a.shape[1]], &a.data[(r + 1) * a.shape[1]], &out.data[r * out.shape[1]]);
      std::copy(&b.data[r * b.shape[1]], &b.data[(r + 1) * b.shape[1]],
                &out.data[r * out.shape[1] + a.shape[1]]);
    }
    return out;
  }
  throw std::invalid_argument("concat: bad axis");
}

Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t end) {
  if (axis < 0 || static_cast<std::size_t>(axis) >= std::max<std::size_t>(a.shape.size(), 1) ||
      start >= end || end > a.shape[static_cast<std::size_t>(axis)])
    throw std::invalid_argument("slice: bad range");
  if (a.shape.size() == 1) {
    Tensor out({end - start});
    std::copy(a.data.begin() + start, a.data.begin() + end, out.data.begin());
    return out;
  }
  if (a.shape.size() != 2) throw std::invalid_argument("slice: only rank 1/2 supported");
  if (axis == 0) {
    Tensor out({end - start, a.shape[1]});
    std::copy(&a.data[start * a.shape[1]], &a.data[end * a.shape[1]], out.data.begin());
    return out;
  }
  Tensor out({a.shape[0], end - start});
  for (std::size_t r = 0; r < a.shape[0]; ++r)
    std::copy(&a.data[r * a.shape[1] + start], &a.data[r * a.shape[1] + end],
              &out.data[r * out.shape[1]]);
  return out;
}

// ---------------------------------------------------------------------------

Tensor& ParamStore::add(const std::string& name, std::vector<std::size_t> shape) {
  if (has(name)) throw std::invalid_argument("ParamStore::add: duplicate name " + name);
  index_[name] = entries_.size();
  entries_.push_back({name, Tensor(shape), Tensor(shape)});
  return entries_.back().value;
}

Tensor& ParamStore::value(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
  return entries_[it->second].value;
}
const Tensor& ParamStore::value(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
  return entries_[it->second].value;
}
Tensor& ParamStore::grad(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
  return entries_[it->second].grad;
}
const Tensor& ParamStore::grad(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
  return entries_[it->second].grad;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) std::fill(e.grad.data.begin(), e.grad.data.end(), 0.0);
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

GradBuffers make_grad_buffers(const ParamStore& ps) {
  GradBuffers g(ps.count());
  for (std::size_t i = 0; i < ps.count(); ++i) g[i].assign(ps.entry(i).value.size(), 0.0);
  return g;
}

void accumulate_grads(ParamStore& ps, const GradBuffers& g, double scale) {
  if (g.size() != ps.count()) throw std::invalid_argument("accumulate_grads: buffer mismatch");
  for (std::size_t i = 0; i < ps.count(); ++i) {
    auto& dst = ps.entry(i).grad.data;
    const auto& src = g[i];
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
  }
}

// ---------------------------------------------------------------------------

void AdamState::init(const ParamStore& ps) {
  m.assign(ps.count(), {});
  v.assign(ps.count(), {});
  for (std::size_t i = 0; i < ps.count(); ++i) {
    m[i].assign(ps.entry(i).value.size(), 0.0);
    v[i].assign(ps.entry(i).value.size(), 0.0);
  }
  step = 0;
}

void adam_step(ParamStore& ps, AdamState& st) {
  if (!st.initialized()) st.init(ps);
  if (st.m.size() != ps.count()) throw std::invalid_argument("adam_step: state/store mismatch");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.cfg.beta1, st.step);
  const double bc2 = 1.0 - std::pow(st.cfg.beta2, st.step);
  for (std::size_t i = 0; i < ps.count(); ++i) {
    auto& p = ps.entry(i).value.data;
    auto& g = ps.entry(i).grad.data;
    auto& m = st.m[i];
    auto& v = st.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = st.cfg.beta1 * m[k] + (1.0 - st.cfg.beta1) * g[k];
      v[k] = st.cfg.beta2 * v[k] + (1.0 - st.cfg.beta2) * g[k] * g[k];
      p[k] -= st.cfg.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + st.cfg.eps);
      g[k] = 0.0;
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

SoftmaxXentResult softmax_crossentropy(const std::vector<double>& logits, std::size_t target) {
  if (logits.empty()) throw std::invalid_argument("softmax_crossentropy: empty logits");
  if (target >= logits.size()) throw std::invalid_argument("softmax_crossentropy: target out of range");
  SoftmaxXentResult r;
  r.probs = softmax(logits);
  r.loss = -std::log(std::max(r.probs[target], 1e-300));
  r.grad_logits = r.probs;
  r.grad_logits[target] -= 1.0;
  return r;
}

// ---------------------------------------------------------------------------

void lstm_forward(const Tensor& Wx, const Tensor& Wh, const Tensor& b,
                  const double* x, std::size_t in_dim,
                  const double* h_prev, const double* c_prev,
                  double* h_out, double* c_out, LstmStepCache* cache) {
  const std::size_t h4 = Wx.shape[0];
  const std::size_t h = h4 / 4;
  if (Wx.shape[1] != in_dim || Wh.shape[0] != h4 || Wh.shape[1] != h || b.size() != h4)
    throw std::invalid_argument("lstm_forward: dimension mismatch");

  std::vector<double> z(b.data);
  matvec(Wx.data.data(), x, z.data(), h4, in_dim, /*accumulate=*/true);
  matvec(Wh.data.data(), h_prev, z.data(), h4, h, /*accumulate=*/true);

  std::vector<double> gi(h), gf(h), gg(h), go(h), tc(h);
  for (std::size_t k = 0; k < h; ++k) {
    gi[k] = sigmoid(z[k]);
    gf[k] = sigmoid(z[h + k]);
    gg[k] = std::tanh(z[2 * h + k]);
    go[k] = sigmoid(z[3 * h + k]);
    c_out[k] = gf[k] * c_prev[k] + gi[k] * gg[k];
    tc[k] = std::tanh(c_out[k]);
    h_out[k] = go[k] * tc[k];
  }
  if (cache) {
    cache->x.assign(x, x + in_dim);
    cache->h_prev.assign(h_prev, h_prev + h);
    cache->c_prev.assign(c_prev, c_prev + h);
    cache->i = std::move(gi);
    cache->f = std::move(gf);
    cache->g = std::move(gg);
    cache->o = std::move(go);
    cache->tanh_c = std::move(tc);
  }
}

void lstm_backward(const Tensor& Wx, const Tensor& Wh, const LstmStepCache& cache,
                   const double* dh, const double* dc,
                   double* dWx, double* dWh, double* db,
                   double* dx_accum, double* dh_prev_accum, double* dc_prev_out) {
  const std::size_t h = cache.i.size();
  const std::size_t in_dim = cache.x.size();
  std::vector<double> dz(4 * h);
  for (std::size_t k = 0; k < h; ++k) {
    const double i = cache.i[k], f = cache.f[k], g = cache.g[k], o = cache.o[k];
    const double tc = cache.tanh_c[k];
    const double dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
    dz[k] = dct * g * i * (1.0 - i);
    dz[h + k] = dct * cache.c_prev[k] * f * (1.0 - f);
    dz[2 * h + k] = dct * i * (1.0 - g * g);
    dz[3 * h + k] = dh[k] * tc * o * (1.0 - o);
    dc_prev_out[k] = dct * f;
  }
  outer_accum(dz.data(), cache.x.data(), dWx, 4 * h, in_dim);
  outer_accum(dz.data(), cache.h_prev.data(), dWh, 4 * h, h);
  for (std::size_t k = 0; k < 4 * h; ++k) db[k] += dz[k];
  if (dx_accum) matvec_t_accum(Wx.data.data(), dz.data(), dx_accum, 4 * h, in_dim);
  matvec_t_accum(Wh.data.data(), dz.data(), dh_prev_accum, 4 * h, h);
}

// ---------------------------------------------------------------------------

void additive_attention_forward(const Tensor& Wq, const std::vector<double>& v,
                                const double* q, const double* K, const double* M,
                                std::size_t N, std::size_t d, double* ctx,
                                AddAttnCache* cache) {
  std::vector<double> u(d);
  matvec(Wq.data.data(), q, u.data(), d, d);
  std::vector<double> t(N * d);
  std::vector<double> scores(N);
  for (std::size_t j = 0; j < N; ++j) {
    double* tj = &t[j * d];
    const double* kj = K + j * d;
    for (std::size_t k = 0; k < d; ++k) tj[k] = std::tanh(u[k] + kj[k]);
    scores[j] = dot(v.data(), tj, d);
  }
  std::vector<double> alpha = softmax(scores);
  std::fill(ctx, ctx + d, 0.0);
  for (std::size_t j = 0; j < N; ++j) axpy(alpha[j], M + j * d, ctx, d);
  if (cache) {
    cache->q.assign(q, q + d);
    cache->u = std::move(u);
    cache->t = std::move(t);
    cache->alpha = std::move(alpha);
  }
}

void additive_attention_backward(const Tensor& Wq, const std::vector<double>& v,
                                 const AddAttnCache& cache, const double* M,
                                 const double* dctx,
                                 double* dq_accum, double* dK_accum, double* dM_accum,
                                 double* dWq, double* dv) {
  const std::size_t d = cache.q.size();
  const std::size_t N = cache.alpha.size();
  std::vector<double> dalpha(N);
  for (std::size_t j = 0; j < N; ++j) {
    dalpha[j] = dot(dctx, M + j * d, d);
    if (dM_accum) axpy(cache.alpha[j], dctx, dM_accum + j * d, d);
  }
  double mean = 0.0;
  for (std::size_t j = 0; j < N; ++j) mean += cache.alpha[j] * dalpha[j];
  std::vector<double> du(d, 0.0);
  for (std::size_t j = 0; j < N; ++j) {
    const double ds = cache.alpha[j] * (dalpha[j] - mean);
    const double* tj = &cache.t[j * d];
    for (std::size_t k = 0; k < d; ++k) {
      dv[k] += ds * tj[k];
      const double dpre = ds * v[k] * (1.0 - tj[k] * tj[k]);
      du[k] += dpre;
      if (dK_accum) dK_accum[j * d + k] += dpre;
    }
  }
  outer_accum(du.data(), cache.q.data(), dWq, d, d);
  matvec_t_accum(Wq.data.data(), du.data(), dq_accum, d, d);
}

AdditiveAttentionResult additive_attention(const Tensor& Wq, const Tensor& Wk,
                                           const std::vector<double>& v,
                                           const std::vector<double>& query,
                                           const std::vector<std::vector<double>>& keys) {
  if (keys.empty()) throw std::invalid_argument("additive_attention: no keys");
  const std::size_t d = query.size();
  if (Wq.shape != std::vector<std::size_t>{d, d} || Wk.shape != std::vector<std::size_t>{d, d} ||
      v.size() != d)
    throw std::invalid_argument("additive_attention: weight dimension mismatch");
  std::vector<double> M(keys.size() * d), K(keys.size() * d);
  for (std::size_t j = 0; j < keys.size(); ++j) {
    if (keys[j].size() != d) throw std::invalid_argument("additive_attention: key dimension mismatch");
    std::copy(keys[j].begin(), keys[j].end(), M.begin() + j * d);
    matvec(Wk.data.data(), keys[j].data(), &K[j * d], d, d);
  }
  AdditiveAttentionResult r;
  r.context.assign(d, 0.0);
  AddAttnCache cache;
  additive_attention_forward(Wq, v, query.data(), K.data(), M.data(), keys.size(), d,
                             r.context.data(), &cache);
  r.weights = cache.alpha;
  return r;
}

// ---------------------------------------------------------------------------

void mha_forward(const Tensor& Wq, const Tensor& Wk, const Tensor& Wv, const Tensor& Wo,
                 const double* X, std::size_t N, std::size_t d, std::size_t heads,
                 double* Y, MhaCache* cache) {
  if (d % heads != 0) throw std::invalid_argument("mha_forward: d not divisible by heads");
  const std::size_t dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> Q(N * d), K(N * d), V(N * d), O(N * d, 0.0), A(heads * N * N);
  for (std::size_t t = 0; t < N; ++t) {
    matvec(Wq.data.data(), X + t * d, &Q[t * d], d, d);
    matvec(Wk.data.data(), X + t * d, &K[t * d], d, d);
    matvec(Wv.data.data(), X + t * d, &V[t * d], d, d);
  }
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t t = 0; t < N; ++t) {
      std::vector<double> s(N);
      for (std::size_t j = 0; j < N; ++j)
        s[j] = scale * dot(&Q[t * d + off], &K[j * d + off], dk);
      std::vector<double> a = softmax(s);
      for (std::size_t j = 0; j < N; ++j) {
        A[(h * N + t) * N + j] = a[j];
        axpy(a[j], &V[j * d + off], &O[t * d + off], dk);
      }
    }
  }
  for (std::size_t t = 0; t < N; ++t) matvec(Wo.data.data(), &O[t * d], Y + t * d, d, d);
  if (cache) {
    cache->N = N;
    cache->d = d;
    cache->heads = heads;
    cache->X.assign(X, X + N * d);
    cache->Q = std::move(Q);
    cache->K = std::move(K);
    cache->V = std::move(V);
    cache->A = std::move(A);
    cache->O = std::move(O);
  }
}

void mha_backward(const Tensor& Wq, const Tensor& Wk, const Tensor& Wv, const Tensor& Wo,
                  const MhaCache& cache, const double* dY,
                  double* dX_accum,
                  double* dWq, double* dWk, double* dWv, double* dWo) {
  const std::size_t N = cache.N, d = cache.d, heads = cache.heads;
  const std::size_t dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> dO(N * d, 0.0), dQ(N * d, 0.0), dK(N * d, 0.0), dV(N * d, 0.0);
  for (std::size_t t = 0; t < N; ++t) {
    outer_accum(dY + t * d, &cache.O[t * d], dWo, d, d);
    matvec_t_accum(Wo.data.data(), dY + t * d, &dO[t * d], d, d);
  }
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dk;
    for (std::size_t t = 0; t < N; ++t) {
      const double* a = &cache.A[(h * N + t) * N];
      std::vector<double> da(N);
      for (std::size_t j = 0; j < N; ++j) {
        da[j] = dot(&dO[t * d + off], &cache.V[j * d + off], dk);
        axpy(a[j], &dO[t * d + off], &dV[j * d + off], dk);
      }
      double mean = 0.0;
      for (std::size_t j = 0; j < N; ++j) mean += a[j] * da[j];
      for (std::size_t j = 0; j < N; ++j) {
        const double ds = scale * a[j] * (da[j] - mean);
        axpy(ds, &cache.K[j * d + off], &dQ[t * d + off], dk);
        axpy(ds, &cache.Q[t * d + off], &dK[j * d + off], dk);
      }
    }
  }
  for (std::size_t t = 0; t < N; ++t) {
    outer_accum(&dQ[t * d], &cache.X[t * d], dWq, d, d);
    outer_accum(&dK[t * d], &cache.X[t * d], dWk, d, d);
    outer_accum(&dV[t * d], &cache.X[t * d], dWv, d, d);
    if (dX_accum) {
      matvec_t_accum(Wq.data.data(), &dQ[t * d], dX_accum + t * d, d, d);
      matvec_t_accum(Wk.data.data(), &dK[t * d], dX_accum + t * d, d, d);
      matvec_t_accum(Wv.data.data(), &dV[t * d], dX_accum + t * d, d, d);
    }
  }
}

// ---------------------------------------------------------------------------

GradCheckResult finite_diff_check(ParamStore& ps, const std::function<double(bool)>& loss,
                                  int n_coords, std::uint64_t seed, double step) {
  ps.zero_grads();
  const double l_ref = loss(true);
  GradBuffers analytic(ps.count());
  for (std::size_t i = 0; i < ps.count(); ++i) analytic[i] = ps.entry(i).grad.data;

  const double l_again = loss(false);
  if (l_ref != l_again)
    throw std::runtime_error("finite_diff_check: loss is non-deterministic (" +
                             std::to_string(l_ref) + " vs " + std::to_string(l_again) + ")");

  const std::size_t total = ps.total_size();
  if (total == 0) throw std::invalid_argument("finite_diff_check: empty parameter store");
  rng::Stream stream(seed, "gradcheck");

  GradCheckResult r;
  const std::size_t checks = std::min<std::size_t>(static_cast<std::size_t>(n_coords), total);
  for (std::size_t c = 0; c < checks; ++c) {
    std::size_t flat = stream.next_below(total);
    std::size_t entry = 0;
    while (flat >= ps.entry(entry).value.size()) flat -= ps.entry(entry++).value.size();
    double& p = ps.entry(entry).value.data[flat];
    const double saved = p;
    p = saved + step;
    const double lp = loss(false);
    p = saved - step;
    const double lm = loss(false);
    p = saved;
    const double g_num = (lp - lm) / (2.0 * step);
    const double g_ana = analytic[entry][flat];
    // the 1e-6 floor keeps central-difference roundoff (~|L|*eps/step) from
    // dominating coordinates whose true gradient is essentially zero
    const double rel = std::fabs(g_ana - g_num) / std::max(1e-6, std::fabs(g_ana) + std::fabs(g_num));
    if (rel > r.max_rel_err) {
      r.max_rel_err = rel;
      r.worst_param = ps.entry(entry).name;
      r.worst_index = flat;
      r.worst_analytic = g_ana;
      r.worst_numeric = g_num;
    }
    ++r.coords_checked;
  }
  return r;
}

}  // namespace hts::num
