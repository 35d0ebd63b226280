#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace hiertext::neuralcore {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec sigmoid(const Vec& z) {
  return z.unaryExpr([](double x) { return sigmoid(x); });
}

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization.
inline Mat init_weight(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat w(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = dist(rng);
  return w;
}

// ---------------------------------------------------------------------------
// LSTM cell. Gates operate on the concatenation z_t = [h_{t-1}, x_t]:
//   f = sigma(W_f z + b_f),  i = sigma(W_i z + b_i),  g = tanh(W_c z + b_c)
//   c_t = f (.) c_{t-1} + i (.) g
//   o = sigma(W_o z + b_o),  h_t = o (.) tanh(c_t)
// ---------------------------------------------------------------------------

struct LstmParams {
  int input = 0;
  int hidden = 0;
  Mat Wf, Wi, Wc, Wo;  // each hidden x (hidden + input)
  Vec bf, bi, bc, bo;  // each hidden

  static LstmParams create(int input, int hidden, std::mt19937_64& rng) {
    LstmParams p;
    p.input = input;
    p.hidden = hidden;
    const int cols = hidden + input;
    p.Wf = init_weight(hidden, cols, rng);
    p.Wi = init_weight(hidden, cols, rng);
    p.Wc = init_weight(hidden, cols, rng);
    p.Wo = init_weight(hidden, cols, rng);
    p.bf = Vec::Constant(hidden, 1.0);  // forget-gate bias starts open
    p.bi = Vec::Zero(hidden);
    p.bc = Vec::Zero(hidden);
    p.bo = Vec::Zero(hidden);
    return p;
  }

  static LstmParams zeros(int input, int hidden) {
    LstmParams p;
    p.input = input;
    p.hidden = hidden;
    const int cols = hidden + input;
    p.Wf = Mat::Zero(hidden, cols);
    p.Wi = Mat::Zero(hidden, cols);
    p.Wc = Mat::Zero(hidden, cols);
    p.Wo = Mat::Zero(hidden, cols);
    p.bf = Vec::Zero(hidden);
    p.bi = Vec::Zero(hidden);
    p.bc = Vec::Zero(hidden);
    p.bo = Vec::Zero(hidden);
    return p;
  }
};

struct LstmState {
  Vec h, c;
  static LstmState zero(int hidden) { return {Vec::Zero(hidden), Vec::Zero(hidden)}; }
};

namespace detail {
inline void check_shapes(const LstmParams& p, const Vec& x, const LstmState& s) {
  if (x.size() != p.input || s.h.size() != p.hidden || s.c.size() != p.hidden)
    throw std::invalid_argument("lstm: shape mismatch");
}
}  // namespace detail

inline LstmState lstm_step(const LstmParams& p, const Vec& x, const LstmState& prev) {
  detail::check_shapes(p, x, prev);
  Vec z(p.hidden + p.input);
  z << prev.h, x;
  const Vec f = sigmoid(p.Wf * z + p.bf);
  const Vec i = sigmoid(p.Wi * z + p.bi);
  const Vec g = (p.Wc * z + p.bc).array().tanh();
  const Vec c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  const Vec o = sigmoid(p.Wo * z + p.bo);
  return {o.cwiseProduct(c.array().tanh().matrix()), c};
}

struct LstmCache {
  // per-step activations, index 0..T-1
  std::vector<Vec> z, f, i, g, o, c, tanh_c;
  std::vector<Vec> h;  // h[t] is the step-t output
  Vec c0;
};

struct LstmForward {
  Mat h_seq;  // T x hidden
  LstmState final;
  LstmCache cache;
};

// x_seq rows are timesteps.
inline LstmForward lstm_forward(const LstmParams& p, const Mat& x_seq,
                                const LstmState& state0) {
  const auto T = x_seq.rows();
  if (T == 0) throw std::invalid_argument("lstm_forward: empty sequence");
  if (x_seq.cols() != p.input) throw std::invalid_argument("lstm_forward: shape mismatch");
  LstmForward out;
  out.h_seq.resize(T, p.hidden);
  out.cache.c0 = state0.c;
  LstmState s = state0;
  for (Eigen::Index t = 0; t < T; ++t) {
    Vec z(p.hidden + p.input);
    z << s.h, x_seq.row(t).transpose();
    Vec f = sigmoid(p.Wf * z + p.bf);
    Vec i = sigmoid(p.Wi * z + p.bi);
    Vec g = (p.Wc * z + p.bc).array().tanh();
    Vec c = f.cwiseProduct(s.c) + i.cwiseProduct(g);
    Vec o = sigmoid(p.Wo * z + p.bo);
    Vec tc = c.array().tanh();
    Vec h = o.cwiseProduct(tc);
    out.h_seq.row(t) = h.transpose();
    out.cache.z.push_back(std::move(z));
    out.cache.f.push_back(std::move(f));
    out.cache.i.push_back(std::move(i));
    out.cache.g.push_back(std::move(g));
    out.cache.o.push_back(std::move(o));
    out.cache.c.push_back(c);
    out.cache.tanh_c.push_back(std::move(tc));
    out.cache.h.push_back(h);
    s.h = out.cache.h.back();
    s.c = std::move(c);
  }
  out.final = s;
  return out;
}

struct LstmGrads {
  Mat dWf, dWi, dWc, dWo;
  Vec dbf, dbi, dbc, dbo;
  Mat dx_seq;  // T x input
  Vec dh0, dc0;

  static LstmGrads zeros(const LstmParams& p, Eigen::Index T) {
    LstmGrads g;
    const int cols = p.hidden + p.input;
    g.dWf = Mat::Zero(p.hidden, cols);
    g.dWi = Mat::Zero(p.hidden, cols);
    g.dWc = Mat::Zero(p.hidden, cols);
    g.dWo = Mat::Zero(p.hidden, cols);
    g.dbf = Vec::Zero(p.hidden);
    g.dbi = Vec::Zero(p.hidden);
    g.dbc = Vec::Zero(p.hidden);
    g.dbo = Vec::Zero(p.hidden);
    g.dx_seq = Mat::Zero(T, p.input);
    g.dh0 = Vec::Zero(p.hidden);
    g.dc0 = Vec::Zero(p.hidden);
    return g;
  }
};

// Backprop through time. dh_seq carries the upstream gradient on every
// step's output; dh_final/dc_final the gradient on the final state.
inline LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache,
                               const Mat& dh_seq, const Vec& dh_final,
                               const Vec& dc_final) {
  const auto T = static_cast<Eigen::Index>(cache.z.size());
  if (dh_seq.rows() != T || dh_seq.cols() != p.hidden)
    throw std::invalid_argument("lstm_backward: dh_seq shape mismatch");
  LstmGrads grads = LstmGrads::zeros(p, T);
  Vec dh_next = dh_final;
  Vec dc_next = dc_final;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Vec dh = dh_seq.row(t).transpose() + dh_next;
    const Vec& f = cache.f[t];
    const Vec& i = cache.i[t];
    const Vec& g = cache.g[t];
    const Vec& o = cache.o[t];
    const Vec& tc = cache.tanh_c[t];
    const Vec& c_prev = t == 0 ? cache.c0 : cache.c[t - 1];

    const Vec do_ = dh.cwiseProduct(tc);
    Vec dc = dc_next + dh.cwiseProduct(o).cwiseProduct(
                           (1.0 - tc.array().square()).matrix());
    const Vec df = dc.cwiseProduct(c_prev);
    const Vec di = dc.cwiseProduct(g);
    const Vec dg = dc.cwiseProduct(i);
    dc_next = dc.cwiseProduct(f);

    const Vec daf = df.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
    const Vec dai = di.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
    const Vec dag = dg.cwiseProduct((1.0 - g.array().square()).matrix());
    const Vec dao = do_.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());

    const Vec& z = cache.z[t];
    grads.dWf.noalias() += daf * z.transpose();
    grads.dWi.noalias() += dai * z.transpose();
    grads.dWc.noalias() += dag * z.transpose();
    grads.dWo.noalias() += dao * z.transpose();
    grads.dbf += daf;
    grads.dbi += dai;
    grads.dbc += dag;
    grads.dbo += dao;

    const Vec dz = p.Wf.transpose() * daf + p.Wi.transpose() * dai +
                   p.Wc.transpose() * dag + p.Wo.transpose() * dao;
    dh_next = dz.head(p.hidden);
    grads.dx_seq.row(t) = dz.tail(p.input).transpose();
  }
  grads.dh0 = dh_next;
  grads.dc0 = dc_next;
  return grads;
}

// ---------------------------------------------------------------------------
// Layers and losses
// ---------------------------------------------------------------------------

inline Vec dense_relu(const Mat& W, const Vec& b, const Vec& x) {
  if (W.cols() != x.size() || W.rows() != b.size())
    throw std::invalid_argument("dense_relu: shape mismatch");
  return (W * x + b).cwiseMax(0.0);
}

inline Vec softmax(const Vec& z) {
  const Vec e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

// Inverted dropout: each element is zeroed with probability `rate` in
// training mode and survivors are scaled by 1/(1-rate); inference is the
// identity. The mask (post-scale multiplier per element) is written to
// mask_out when given, for reuse in the backward pass.
inline Vec dropout(const Vec& x, double rate, bool training, std::mt19937_64& rng,
                   Vec* mask_out = nullptr) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) {
    if (mask_out) *mask_out = Vec::Ones(x.size());
    return x;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec mask(x.size());
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    mask(i) = unit(rng) < rate ? 0.0 : scale;
  if (mask_out) *mask_out = mask;
  return x.cwiseProduct(mask);
}

inline constexpr double kProbFloor = 1e-12;

inline double cross_entropy(const Vec& probs, int true_class) {
  if (true_class < 0 || true_class >= probs.size())
    throw std::invalid_argument("cross_entropy: class out of range");
  return -std::log(std::max(probs(true_class), kProbFloor));
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  int64_t t = 0;
  std::vector<Mat> m, v;
};

// One Adam step with bias correction over a parameter group. Moment
// buffers are allocated lazily on the first call.
inline void adam_step(std::vector<Eigen::Ref<Mat>> params,
                      const std::vector<Mat>& grads, AdamState& state,
                      const AdamConfig& cfg = {}) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: param/grad count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Mat::Zero(p.rows(), p.cols()));
      state.v.push_back(Mat::Zero(p.rows(), p.cols()));
    }
  }
  for (const auto& g : grads)
    if (!g.allFinite()) throw std::runtime_error("adam_step: non-finite gradient");
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t k = 0; k < params.size(); ++k) {
    auto& m = state.m[k];
    auto& v = state.v[k];
    const auto& g = grads[k];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const Mat m_hat = m / bc1;
    const Mat v_hat = v / bc2;
    params[k] -= cfg.lr * m_hat.cwiseQuotient(
                              (v_hat.cwiseSqrt().array() + cfg.eps).matrix());
  }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

// Central finite differences over every element of every tensor; the loss
// function is re-evaluated with perturbed parameters in place. Returns the
// maximum relative error against the supplied analytic gradients.
inline double grad_check(const std::function<double()>& loss,
                         std::vector<Eigen::Ref<Mat>> params,
                         const std::vector<Mat>& analytic, double eps = 1e-5) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be > 0");
  if (params.size() != analytic.size())
    throw std::invalid_argument("grad_check: param/grad count mismatch");
  double max_rel = 0.0;
  for (size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const double orig = p(r, c);
        p(r, c) = orig + eps;
        const double up = loss();
        p(r, c) = orig - eps;
        const double down = loss();
        p(r, c) = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic[k](r, c);
        const double denom = std::max(1e-8, std::abs(numeric) + std::abs(a));
        max_rel = std::max(max_rel, std::abs(numeric - a) / denom);
      }
    }
  }
  return max_rel;
}

}  // namespace hiertext::neuralcore
