#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiertext/binio.hpp"
#include "hiertext/corpus.hpp"
#include "hiertext/embedding.hpp"
#include "hiertext/neuralcore.hpp"
#include "hiertext/preprocess.hpp"

namespace hiertext::hmlstm {

using neuralcore::Mat;
using neuralcore::Vec;

enum class ConsistencyMode { Mask, ArgmaxFree };

struct Config {
  int hidden = 128;       // hidden size of each LSTM layer
  int max_seq_len = 128;
  int batch = 32;
  double dropout = 0.5;
  double lr = 0.001;
  int epochs = 10;
  int patience = 3;                  // early-stop patience on validation loss
  double validation_fraction = 0.2;  // slice of training data held out
  uint64_t seed = 1;
  ConsistencyMode consistency = ConsistencyMode::Mask;

  void validate() const {
    if (hidden < 1 || max_seq_len < 1 || batch < 1 || epochs < 1 || patience < 1)
      throw std::invalid_argument("hmlstm config: counts must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0))
      throw std::invalid_argument("hmlstm config: dropout must be in [0,1)");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
      throw std::invalid_argument("hmlstm config: validation_fraction must be in (0,1)");
  }
};

// Two stacked LSTM layers over frozen embeddings. The first layer feeds a
// softmax head for the top categories; its hidden sequence is the input of
// the second layer, whose head covers the subcategories. Heads are a single
// dense layer with ReLU before the softmax.
struct Model {
  Config cfg;
  corpus::Taxonomy taxonomy;
  embedding::Vocabulary vocab;
  embedding::Matrix embeddings;  // frozen; never updated by training
  uint64_t emb_hash = 0;

  neuralcore::LstmParams lstm1, lstm2;
  Mat head1_W;  // |level1| x hidden
  Vec head1_b;
  Mat head2_W;  // |level2| x hidden
  Vec head2_b;

  std::vector<int> level1_ids, level2_ids;  // class index -> taxonomy node id
  neuralcore::AdamState adam;
  std::mt19937_64 rng{1};

  int n_level1() const { return static_cast<int>(level1_ids.size()); }
  int n_level2() const { return static_cast<int>(level2_ids.size()); }
};

struct HierPrediction {
  Vec p1, p2;           // level distributions (p2 renormalized in mask mode)
  int label1 = corpus::kRoot;
  int label2 = corpus::kRoot;  // taxonomy node ids
  bool consistency_enforced = false;
};

// Trainable tensors in a fixed order, shared by Adam, checkpointing and
// the gradient checker.
inline std::vector<Eigen::Ref<Mat>> param_refs(Model& m) {
  std::vector<Eigen::Ref<Mat>> refs;
  for (auto* l : {&m.lstm1, &m.lstm2}) {
    refs.emplace_back(l->Wf);
    refs.emplace_back(l->Wi);
    refs.emplace_back(l->Wc);
    refs.emplace_back(l->Wo);
    refs.emplace_back(l->bf);
    refs.emplace_back(l->bi);
    refs.emplace_back(l->bc);
    refs.emplace_back(l->bo);
  }
  refs.emplace_back(m.head1_W);
  refs.emplace_back(m.head1_b);
  refs.emplace_back(m.head2_W);
  refs.emplace_back(m.head2_b);
  return refs;
}

struct Grads {
  std::vector<Mat> tensors;  // aligned with param_refs

  static Grads zeros_like(Model& m) {
    Grads g;
    for (const auto& p : param_refs(m)) g.tensors.push_back(Mat::Zero(p.rows(), p.cols()));
    return g;
  }
  void accumulate(const Grads& other) {
    for (size_t k = 0; k < tensors.size(); ++k) tensors[k] += other.tensors[k];
  }
  void scale(double s) {
    for (auto& t : tensors) t *= s;
  }
};

inline Model build_model(const corpus::Taxonomy& taxonomy,
                         const embedding::Vocabulary& vocab,
                         const embedding::Matrix& embeddings, const Config& cfg) {
  cfg.validate();
  if (taxonomy.levels != 2)
    throw std::invalid_argument("hmlstm requires a taxonomy of exactly 2 levels");
  if (embeddings.rows() != vocab.size())
    throw std::invalid_argument("embedding row count does not match vocabulary size");
  Model m;
  m.cfg = cfg;
  m.taxonomy = taxonomy;
  m.vocab = vocab;
  m.embeddings = embeddings;
  m.emb_hash = embedding::embeddings_hash(vocab, embeddings);
  m.level1_ids = taxonomy.level_ids(1);
  m.level2_ids = taxonomy.level_ids(2);
  m.rng.seed(cfg.seed);
  const int dim = static_cast<int>(embeddings.cols());
  m.lstm1 = neuralcore::LstmParams::create(dim, cfg.hidden, m.rng);
  m.lstm2 = neuralcore::LstmParams::create(cfg.hidden, cfg.hidden, m.rng);
  m.head1_W = neuralcore::init_weight(m.n_level1(), cfg.hidden, m.rng);
  m.head1_b = Vec::Zero(m.n_level1());
  m.head2_W = neuralcore::init_weight(m.n_level2(), cfg.hidden, m.rng);
  m.head2_b = Vec::Zero(m.n_level2());
  return m;
}

struct ForwardCache {
  neuralcore::LstmForward l1, l2;
  Vec h2_dropped, drop_mask;
  Vec a1, p1, a2, p2;  // head pre-activations and softmax outputs
  Eigen::Index T = 0;
};

// Token ids are vocabulary indices; an empty sequence runs one PAD step.
inline ForwardCache forward(Model& m, const std::vector<int>& ids, bool training) {
  const auto max_len = static_cast<size_t>(m.cfg.max_seq_len);
  Eigen::Index T = static_cast<Eigen::Index>(std::min(ids.size(), max_len));
  Mat x;
  if (T == 0) {
    T = 1;
    x = Mat::Zero(1, m.embeddings.cols());
  } else {
    x.resize(T, m.embeddings.cols());
    for (Eigen::Index t = 0; t < T; ++t) x.row(t) = m.embeddings.row(ids[t]);
  }
  ForwardCache c;
  c.T = T;
  c.l1 = neuralcore::lstm_forward(m.lstm1, x, neuralcore::LstmState::zero(m.cfg.hidden));
  c.a1 = m.head1_W * c.l1.final.h + m.head1_b;
  c.p1 = neuralcore::softmax(c.a1.cwiseMax(0.0));
  c.l2 = neuralcore::lstm_forward(m.lstm2, c.l1.h_seq,
                                  neuralcore::LstmState::zero(m.cfg.hidden));
  c.h2_dropped = neuralcore::dropout(c.l2.final.h, m.cfg.dropout, training, m.rng,
                                     &c.drop_mask);
  c.a2 = m.head2_W * c.h2_dropped + m.head2_b;
  c.p2 = neuralcore::softmax(c.a2.cwiseMax(0.0));
  return c;
}

// Joint loss for one document: CE(head-1) + CE(head-2). Class labels are
// level-local indices.
inline double doc_loss(const ForwardCache& c, int y1, int y2) {
  return neuralcore::cross_entropy(c.p1, y1) + neuralcore::cross_entropy(c.p2, y2);
}

namespace detail {

// Softmax(ReLU(a)) + CE gradient wrt a.
inline Vec head_backward(const Vec& a, const Vec& p, int y) {
  Vec da = p;
  da(y) -= 1.0;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) <= 0.0) da(i) = 0.0;
  return da;
}

}  // namespace detail

inline Grads backward(Model& m, const ForwardCache& c, int y1, int y2) {
  const Vec da1 = detail::head_backward(c.a1, c.p1, y1);
  const Vec da2 = detail::head_backward(c.a2, c.p2, y2);

  const Vec dh2_drop = m.head2_W.transpose() * da2;
  const Vec dh2_final = dh2_drop.cwiseProduct(c.drop_mask);
  const Mat dh2_seq = Mat::Zero(c.T, m.cfg.hidden);
  const auto g2 = neuralcore::lstm_backward(m.lstm2, c.l2.cache, dh2_seq, dh2_final,
                                            Vec::Zero(m.cfg.hidden));

  Mat dh1_seq = g2.dx_seq;
  dh1_seq.row(c.T - 1) += (m.head1_W.transpose() * da1).transpose();
  const auto g1 = neuralcore::lstm_backward(m.lstm1, c.l1.cache, dh1_seq,
                                            Vec::Zero(m.cfg.hidden),
                                            Vec::Zero(m.cfg.hidden));

  Grads g;
  for (const auto* lg : {&g1, &g2}) {
    g.tensors.push_back(lg->dWf);
    g.tensors.push_back(lg->dWi);
    g.tensors.push_back(lg->dWc);
    g.tensors.push_back(lg->dWo);
    g.tensors.push_back(lg->dbf);
    g.tensors.push_back(lg->dbi);
    g.tensors.push_back(lg->dbc);
    g.tensors.push_back(lg->dbo);
  }
  g.tensors.push_back(da1 * c.l1.final.h.transpose());
  g.tensors.push_back(da1);
  g.tensors.push_back(da2 * c.h2_dropped.transpose());
  g.tensors.push_back(da2);
  return g;
}

struct EncodedDoc {
  std::vector<int> ids;  // vocabulary indices, truncated to max_seq_len
  int y1 = 0, y2 = 0;    // class indices within level 1 / level 2
};

inline std::vector<EncodedDoc> encode_dataset(const corpus::Dataset& ds,
                                              const embedding::Vocabulary& vocab,
                                              const preprocess::Options& opts,
                                              int max_seq_len) {
  const auto l1 = ds.taxonomy.level_ids(1);
  const auto l2 = ds.taxonomy.level_ids(2);
  std::vector<EncodedDoc> out;
  out.reserve(ds.documents.size());
  for (const auto& doc : ds.documents) {
    EncodedDoc e;
    const auto tokens = preprocess::preprocess_text(doc.text, opts);
    for (const auto& tok : tokens) {
      if (static_cast<int>(e.ids.size()) == max_seq_len) break;
      e.ids.push_back(vocab.lookup(tok));
    }
    const auto it1 = std::find(l1.begin(), l1.end(), doc.gold.at(0));
    const auto it2 = std::find(l2.begin(), l2.end(), doc.gold.at(1));
    if (it1 == l1.end() || it2 == l2.end())
      throw std::runtime_error("document '" + doc.id + "' has labels outside taxonomy");
    e.y1 = static_cast<int>(it1 - l1.begin());
    e.y2 = static_cast<int>(it2 - l2.begin());
    out.push_back(std::move(e));
  }
  return out;
}

// Average loss and gradients over a set of documents (no dropout); used by
// the gradient-check harness.
inline std::pair<double, Grads> loss_and_grads(Model& m,
                                               const std::vector<EncodedDoc>& docs) {
  Grads total = Grads::zeros_like(m);
  double loss = 0.0;
  for (const auto& d : docs) {
    const auto c = forward(m, d.ids, /*training=*/false);
    loss += doc_loss(c, d.y1, d.y2);
    total.accumulate(backward(m, c, d.y1, d.y2));
  }
  const double inv = 1.0 / static_cast<double>(docs.size());
  total.scale(inv);
  return {loss * inv, total};
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
};

using History = std::vector<EpochStats>;

namespace detail {

inline std::pair<double, double> eval_docs(Model& m, const std::vector<EncodedDoc>& docs) {
  if (docs.empty()) return {0.0, 0.0};
  double loss = 0.0;
  int exact = 0;
  for (const auto& d : docs) {
    const auto c = forward(m, d.ids, /*training=*/false);
    loss += doc_loss(c, d.y1, d.y2);
    Eigen::Index a1, a2;
    c.p1.maxCoeff(&a1);
    c.p2.maxCoeff(&a2);
    if (a1 == d.y1 && a2 == d.y2) ++exact;
  }
  const auto n = static_cast<double>(docs.size());
  return {loss / n, exact / n};
}

}  // namespace detail

// Mini-batch Adam training with a held-out validation slice and early
// stopping; the best-validation parameters are restored on return.
// Embeddings stay frozen throughout.
inline History train(Model& m, const std::vector<EncodedDoc>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("hmlstm::train: empty training set");
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), m.rng);
  const auto val_n = std::max<size_t>(
      1, static_cast<size_t>(std::llround(static_cast<double>(dataset.size()) *
                                          m.cfg.validation_fraction)));
  std::vector<EncodedDoc> val, tr;
  for (size_t i = 0; i < order.size(); ++i)
    (i < val_n ? val : tr).push_back(dataset[order[i]]);
  if (tr.empty()) throw std::invalid_argument("hmlstm::train: no training documents left");

  const neuralcore::AdamConfig adam_cfg{m.cfg.lr, 0.9, 0.999, 1e-8};
  History history;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<Mat> best_params;

  std::vector<size_t> idx(tr.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  for (int epoch = 1; epoch <= m.cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), m.rng);
    double train_loss = 0.0;
    int train_exact = 0;
    for (size_t start = 0; start < idx.size(); start += m.cfg.batch) {
      const size_t end = std::min(idx.size(), start + m.cfg.batch);
      Grads batch_grads = Grads::zeros_like(m);
      for (size_t k = start; k < end; ++k) {
        const auto& d = tr[idx[k]];
        const auto c = forward(m, d.ids, /*training=*/true);
        train_loss += doc_loss(c, d.y1, d.y2);
        Eigen::Index a1, a2;
        c.p1.maxCoeff(&a1);
        c.p2.maxCoeff(&a2);
        if (a1 == d.y1 && a2 == d.y2) ++train_exact;
        batch_grads.accumulate(backward(m, c, d.y1, d.y2));
      }
      batch_grads.scale(1.0 / static_cast<double>(end - start));
      neuralcore::adam_step(param_refs(m), batch_grads.tensors, m.adam, adam_cfg);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = train_loss / static_cast<double>(tr.size());
    st.train_acc = static_cast<double>(train_exact) / static_cast<double>(tr.size());
    std::tie(st.val_loss, st.val_acc) = detail::eval_docs(m, val);
    if (!std::isfinite(st.train_loss) || !std::isfinite(st.val_loss))
      throw std::runtime_error("hmlstm::train: non-finite loss");
    history.push_back(st);

    if (st.val_loss < best_val) {
      best_val = st.val_loss;
      since_best = 0;
      best_params.clear();
      for (const auto& p : param_refs(m)) best_params.push_back(p);
    } else if (++since_best >= m.cfg.patience) {
      break;
    }
  }
  if (!best_params.empty()) {
    auto refs = param_refs(m);
    for (size_t k = 0; k < refs.size(); ++k) refs[k] = best_params[k];
  }
  return history;
}

inline HierPrediction predict(Model& m, const std::vector<int>& ids,
                              ConsistencyMode mode) {
  const auto c = forward(m, ids, /*training=*/false);
  HierPrediction pred;
  pred.p1 = c.p1;
  pred.p2 = c.p2;
  Eigen::Index a1;
  c.p1.maxCoeff(&a1);
  pred.label1 = m.level1_ids[static_cast<size_t>(a1)];
  if (mode == ConsistencyMode::ArgmaxFree) {
    Eigen::Index a2;
    c.p2.maxCoeff(&a2);
    pred.label2 = m.level2_ids[static_cast<size_t>(a2)];
  } else {
    // restrict level 2 to children of the chosen level-1 label, renormalize
    Vec masked = Vec::Zero(c.p2.size());
    for (int k = 0; k < m.n_level2(); ++k)
      if (m.taxonomy.parent_of(m.level2_ids[k]) == pred.label1) masked(k) = c.p2(k);
    const double sum = masked.sum();
    if (sum > 0.0) masked /= sum;
    Eigen::Index a2;
    masked.maxCoeff(&a2);
    pred.p2 = masked;
    pred.label2 = m.level2_ids[static_cast<size_t>(a2)];
    pred.consistency_enforced = true;
  }
  return pred;
}

inline HierPrediction predict_text(Model& m, const std::string& text,
                                   const preprocess::Options& opts,
                                   ConsistencyMode mode) {
  const auto tokens = preprocess::preprocess_text(text, opts);
  std::vector<int> ids;
  for (const auto& tok : tokens) {
    if (static_cast<int>(ids.size()) == m.cfg.max_seq_len) break;
    ids.push_back(m.vocab.lookup(tok));
  }
  return predict(m, ids, mode);
}

// ---------------------------------------------------------------------------
// Checkpoint: magic, version, config, taxonomy, embeddings hash, parameter
// tensors as little-endian float32, FNV-1a checksum trailer.
// ---------------------------------------------------------------------------

namespace ckpt {
constexpr uint32_t kMagic = 0x4854434B;  // "HTCK"
constexpr uint32_t kVersion = 1;
using binio::fnv1a;
}  // namespace ckpt

inline void save_checkpoint(Model& m, const std::string& path) {
  std::ostringstream payload(std::ios::binary);
  namespace io = embedding::io;
  io::write_u32(payload, ckpt::kMagic);
  io::write_u32(payload, ckpt::kVersion);
  io::write_u32(payload, static_cast<uint32_t>(m.cfg.hidden));
  io::write_u32(payload, static_cast<uint32_t>(m.cfg.max_seq_len));
  io::write_u32(payload, static_cast<uint32_t>(m.cfg.batch));
  io::write_f32(payload, static_cast<float>(m.cfg.dropout));
  io::write_f32(payload, static_cast<float>(m.cfg.lr));
  io::write_u32(payload, static_cast<uint32_t>(m.cfg.epochs));
  io::write_u32(payload, static_cast<uint32_t>(m.cfg.patience));
  io::write_f32(payload, static_cast<float>(m.cfg.validation_fraction));
  io::write_u64(payload, m.cfg.seed);
  io::write_u32(payload, m.cfg.consistency == ConsistencyMode::Mask ? 0 : 1);
  io::write_u32(payload, static_cast<uint32_t>(m.taxonomy.nodes.size()));
  io::write_u32(payload, static_cast<uint32_t>(m.taxonomy.levels));
  for (const auto& n : m.taxonomy.nodes) {
    io::write_u32(payload, static_cast<uint32_t>(n.id));
    io::write_u32(payload, static_cast<uint32_t>(n.name.size()));
    payload.write(n.name.data(), static_cast<std::streamsize>(n.name.size()));
    io::write_u32(payload, static_cast<uint32_t>(n.parent));
    io::write_u32(payload, static_cast<uint32_t>(n.level));
  }
  io::write_u64(payload, m.emb_hash);
  io::write_u32(payload, static_cast<uint32_t>(m.embeddings.cols()));
  const auto refs = param_refs(m);
  io::write_u32(payload, static_cast<uint32_t>(refs.size()));
  for (const auto& p : refs) {
    io::write_u32(payload, static_cast<uint32_t>(p.rows()));
    io::write_u32(payload, static_cast<uint32_t>(p.cols()));
    for (Eigen::Index c = 0; c < p.cols(); ++c)
      for (Eigen::Index r = 0; r < p.rows(); ++r)
        io::write_f32(payload, static_cast<float>(p(r, c)));
  }
  const std::string bytes = payload.str();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  io::write_u64(out, ckpt::fnv1a(bytes));
}

// Loads the checkpoint and attaches the embeddings it was trained against;
// the stored hash must match.
inline Model load_checkpoint(const std::string& path, const embedding::Vocabulary& vocab,
                             const embedding::Matrix& embeddings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw std::runtime_error(path + ": truncated checkpoint");
  const std::string payload = bytes.substr(0, bytes.size() - 8);
  std::istringstream ps(payload, std::ios::binary);
  std::istringstream ts(bytes.substr(bytes.size() - 8), std::ios::binary);
  namespace io = embedding::io;
  if (io::read_u64(ts) != ckpt::fnv1a(payload))
    throw std::runtime_error(path + ": checksum mismatch");
  if (io::read_u32(ps) != ckpt::kMagic) throw std::runtime_error(path + ": bad magic");
  if (io::read_u32(ps) != ckpt::kVersion) throw std::runtime_error(path + ": bad version");
  Config cfg;
  cfg.hidden = static_cast<int>(io::read_u32(ps));
  cfg.max_seq_len = static_cast<int>(io::read_u32(ps));
  cfg.batch = static_cast<int>(io::read_u32(ps));
  cfg.dropout = io::read_f32(ps);
  cfg.lr = io::read_f32(ps);
  cfg.epochs = static_cast<int>(io::read_u32(ps));
  cfg.patience = static_cast<int>(io::read_u32(ps));
  cfg.validation_fraction = io::read_f32(ps);
  cfg.seed = io::read_u64(ps);
  cfg.consistency = io::read_u32(ps) == 0 ? ConsistencyMode::Mask : ConsistencyMode::ArgmaxFree;
  corpus::Taxonomy tax;
  const uint32_t n_nodes = io::read_u32(ps);
  tax.levels = static_cast<int>(io::read_u32(ps));
  for (uint32_t i = 0; i < n_nodes; ++i) {
    corpus::TaxNode n;
    n.id = static_cast<int>(io::read_u32(ps));
    const uint32_t len = io::read_u32(ps);
    n.name.resize(len);
    ps.read(n.name.data(), len);
    n.parent = static_cast<int>(io::read_u32(ps));
    n.level = static_cast<int>(io::read_u32(ps));
    tax.nodes.push_back(std::move(n));
  }
  const uint64_t emb_hash = io::read_u64(ps);
  const uint32_t dim = io::read_u32(ps);
  if (embeddings.cols() != static_cast<Eigen::Index>(dim))
    throw std::runtime_error(path + ": embedding dimension mismatch");
  if (emb_hash != embedding::embeddings_hash(vocab, embeddings))
    throw std::runtime_error(path + ": embeddings do not match checkpoint hash");

  Model m = build_model(tax, vocab, embeddings, cfg);
  auto refs = param_refs(m);
  const uint32_t n_tensors = io::read_u32(ps);
  if (n_tensors != refs.size()) throw std::runtime_error(path + ": tensor count mismatch");
  for (auto& p : refs) {
    const auto rows = static_cast<Eigen::Index>(io::read_u32(ps));
    const auto cols = static_cast<Eigen::Index>(io::read_u32(ps));
    if (rows != p.rows() || cols != p.cols())
      throw std::runtime_error(path + ": tensor shape mismatch");
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) p(r, c) = io::read_f32(ps);
  }
  if (!ps) throw std::runtime_error(path + ": truncated checkpoint");
  return m;
}

}  // namespace hiertext::hmlstm
