#pragma once
// Minimal dense numeric kernel: tensors, LSTM cell, attention primitives,
// softmax/cross-entropy, Adam, and a finite-difference gradient checker.
// Double precision throughout; every model wires its own backward pass.

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hts::num {

// ---------------------------------------------------------------------------
// Hot inner loops. Written with independent accumulators so gcc vectorizes
// them without -ffast-math (bit-for-bit deterministic results).

inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// y = W x (+y if accumulate), W row-major [rows x cols]
inline void matvec(const double* W, const double* x, double* y, std::size_t rows,
                   std::size_t cols, bool accumulate = false) {
  for (std::size_t r = 0; r < rows; ++r) {
    double v = dot(W + r * cols, x, cols);
    y[r] = accumulate ? y[r] + v : v;
  }
}

// dx += W^T dy
inline void matvec_t_accum(const double* W, const double* dy, double* dx,
                           std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(dy[r], W + r * cols, dx, cols);
}

// dW += dy (x) x
inline void outer_accum(const double* dy, const double* x, double* dW,
                        std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(dy[r], x, dW + r * cols, cols);
}

// ---------------------------------------------------------------------------
// Tensor

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& operator()(std::size_t i) { return data[i]; }
  double operator()(std::size_t i) const { return data[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Public tensor algebra; each op validates shapes and asserts finite output.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor tanh_t(const Tensor& a);
Tensor sigmoid_t(const Tensor& a);
Tensor concat(const Tensor& a, const Tensor& b, int axis);
Tensor slice(const Tensor& a, int axis, std::size_t start, std::size_t end);

// ---------------------------------------------------------------------------
// Parameter store: named tensors with paired gradient buffers, stable order.

class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  Tensor& add(const std::string& name, std::vector<std::size_t> shape);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  std::size_t count() const { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t index_of(const std::string& name) const;

  void zero_grads();
  std::size_t total_size() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gradient buffers parallel to a ParamStore's entry order (for per-sample
// accumulation with a deterministic summation order).
using GradBuffers = std::vector<std::vector<double>>;
GradBuffers make_grad_buffers(const ParamStore& ps);
void accumulate_grads(ParamStore& ps, const GradBuffers& g, double scale = 1.0);

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<std::vector<double>> m;  // first moments, entry order
  std::vector<std::vector<double>> v;  // second moments

  void init(const ParamStore& ps);
  bool initialized() const { return !m.empty(); }
};

// Descent step on ps grads; increments the step counter and zeroes grads.
void adam_step(ParamStore& ps, AdamState& st);

// ---------------------------------------------------------------------------
// Softmax / cross-entropy

std::vector<double> softmax(const std::vector<double>& logits);

struct SoftmaxXentResult {
  std::vector<double> probs;
  double loss = 0.0;
  std::vector<double> grad_logits;  // probs - onehot(target)
};
SoftmaxXentResult softmax_crossentropy(const std::vector<double>& logits, std::size_t target);

// ---------------------------------------------------------------------------
// LSTM cell (gate order i, f, g, o). Weights: Wx [4h x in], Wh [4h x h], b [4h].

struct LstmStepCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, g, o, tanh_c;
};

void lstm_forward(const Tensor& Wx, const Tensor& Wh, const Tensor& b,
                  const double* x, std::size_t in_dim,
                  const double* h_prev, const double* c_prev,
                  double* h_out, double* c_out, LstmStepCache* cache);

// dh/dc are the incoming gradients wrt h_out/c_out; outputs accumulate.
void lstm_backward(const Tensor& Wx, const Tensor& Wh, const LstmStepCache& cache,
                   const double* dh, const double* dc,
                   double* dWx, double* dWh, double* db,
                   double* dx_accum, double* dh_prev_accum, double* dc_prev_out);

// ---------------------------------------------------------------------------
// Additive attention: score_j = v . tanh(Wq q + Wk m_j); context over values.

struct AddAttnCache {
  std::vector<double> q;      // query copy
  std::vector<double> u;      // Wq q
  std::vector<double> t;      // N x d, tanh(u + K_j)
  std::vector<double> alpha;  // N
};

// K = precomputed Wk * M rows [N x d]; M doubles as keys and values.
void additive_attention_forward(const Tensor& Wq, const std::vector<double>& v,
                                const double* q, const double* K, const double* M,
                                std::size_t N, std::size_t d, double* ctx,
                                AddAttnCache* cache);

void additive_attention_backward(const Tensor& Wq, const std::vector<double>& v,
                                 const AddAttnCache& cache, const double* M,
                                 const double* dctx,
                                 double* dq_accum, double* dK_accum, double* dM_accum,
                                 double* dWq, double* dv);

// Simple public form: keys double as values; weights returned.
struct AdditiveAttentionResult {
  std::vector<double> context;
  std::vector<double> weights;
};
AdditiveAttentionResult additive_attention(const Tensor& Wq, const Tensor& Wk,
                                           const std::vector<double>& v,
                                           const std::vector<double>& query,
                                           const std::vector<std::vector<double>>& keys);

// ---------------------------------------------------------------------------
// Multi-head self-attention over N tokens of dim d. Weights Wq,Wk,Wv,Wo [d x d].

struct MhaCache {
  std::size_t N = 0, d = 0, heads = 0;
  std::vector<double> X;      // N x d input copy
  std::vector<double> Q, K, V;  // N x d
  std::vector<double> A;      // heads x N x N attention rows
  std::vector<double> O;      // N x d concat of head outputs
};

void mha_forward(const Tensor& Wq, const Tensor& Wk, const Tensor& Wv, const Tensor& Wo,
                 const double* X, std::size_t N, std::size_t d, std::size_t heads,
                 double* Y, MhaCache* cache);

void mha_backward(const Tensor& Wq, const Tensor& Wk, const Tensor& Wv, const Tensor& Wo,
                  const MhaCache& cache, const double* dY,
                  double* dX_accum,
                  double* dWq, double* dWk, double* dWv, double* dWo);

// ---------------------------------------------------------------------------
// Finite-difference gradient checker. `loss(true)` must compute the loss and
// fill ps grads; `loss(false)` computes the loss only. Central differences on
// seeded random coordinates; throws if two evaluations of the loss differ.

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

GradCheckResult finite_diff_check(ParamStore& ps, const std::function<double(bool)>& loss,
                                  int n_coords = 200, std::uint64_t seed = 0,
                                  double step = 1e-5);

}  // namespace hts::num
