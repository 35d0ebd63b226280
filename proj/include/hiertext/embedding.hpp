#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "hiertext/binio.hpp"

namespace hiertext::embedding {

struct Vocabulary {
  static constexpr int kPad = 0;
  static constexpr int kOov = 1;

  std::vector<std::string> tokens;  // index -> token; [0]="<pad>", [1]="<oov>"
  std::vector<int64_t> counts;      // aligned with tokens; 0 for specials
  std::unordered_map<std::string, int> index;

  int size() const { return static_cast<int>(tokens.size()); }

  int lookup(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? kOov : it->second;
  }
};

using Matrix = Eigen::MatrixXd;  // rows = vocab size, cols = dimension

struct CbowParams {
  int dim = 100;
  int window = 5;
  int min_count = 5;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.025;  // linear decay to ~0 over all epochs
  double subsample = 1e-3;
  uint64_t seed = 1;
};

// Retains tokens with frequency >= min_count, ordered by descending
// frequency then lexicographic. Indices 0 and 1 are reserved for PAD/OOV.
inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                              int min_count) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::unordered_map<std::string, int64_t> freq;
  for (const auto& doc : corpus)
    for (const auto& tok : doc) ++freq[tok];
  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto& [tok, n] : freq)
    if (n >= min_count) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  vocab.tokens = {"<pad>", "<oov>"};
  vocab.counts = {0, 0};
  for (auto& [tok, n] : kept) {
    vocab.index[tok] = static_cast<int>(vocab.tokens.size());
    vocab.tokens.push_back(std::move(tok));
    vocab.counts.push_back(n);
  }
  return vocab;
}

struct CbowResult {
  Matrix matrix;                   // input vectors, the embedding output
  std::vector<double> epoch_loss;  // summed negative-sampling loss per epoch
};

// CBOW with negative sampling. Context vectors are averaged, scored by
// sigmoid against the target and `negatives` draws from the unigram^0.75
// table, and updated by SGD with a linearly decayed learning rate.
// Single-threaded; bitwise deterministic for a fixed seed.
inline CbowResult train_cbow(const std::vector<std::vector<std::string>>& corpus,
                             const Vocabulary& vocab, const CbowParams& params) {
  if (params.dim < 1 || params.window < 1 || params.negatives < 1 || params.epochs < 0)
    throw std::invalid_argument("train_cbow: invalid params");
  const int V = vocab.size();
  const int D = params.dim;
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CbowResult res;
  res.matrix.resize(V, D);
  {
    std::uniform_real_distribution<double> init(-0.5 / D, 0.5 / D);
    for (int r = 0; r < V; ++r)
      for (int c = 0; c < D; ++c) res.matrix(r, c) = init(rng);
    res.matrix.row(Vocabulary::kPad).setZero();
  }
  if (params.epochs == 0) return res;

  // sentence stream of in-vocab indices
  std::vector<std::vector<int>> stream;
  int64_t train_words = 0;
  for (const auto& doc : corpus) {
    std::vector<int> ids;
    for (const auto& tok : doc) {
      auto it = vocab.index.find(tok);
      if (it != vocab.index.end()) ids.push_back(it->second);
    }
    train_words += static_cast<int64_t>(ids.size());
    if (!ids.empty()) stream.push_back(std::move(ids));
  }
  if (train_words < 2) throw std::invalid_argument("train_cbow: fewer than 2 in-vocab tokens");

  // unigram^0.75 negative-sampling table
  constexpr int kTableSize = 1 << 17;
  std::vector<int> table(kTableSize);
  {
    double total = 0.0;
    for (int w = 2; w < V; ++w) total += std::pow(static_cast<double>(vocab.counts[w]), 0.75);
    int w = 2;
    double cum = std::pow(static_cast<double>(vocab.counts[w]), 0.75) / total;
    for (int i = 0; i < kTableSize; ++i) {
      table[i] = w;
      if (static_cast<double>(i + 1) / kTableSize > cum && w < V - 1) {
        ++w;
        cum += std::pow(static_cast<double>(vocab.counts[w]), 0.75) / total;
      }
    }
  }

  Matrix ctx = Matrix::Zero(V, D);  // output-side vectors
  Eigen::VectorXd neu1(D), neu1e(D);
  const double lr_floor = params.initial_lr * 1e-4;
  const auto total_words = static_cast<double>(train_words) * params.epochs + 1.0;
  int64_t words_done = 0;

  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    double loss = 0.0;
    for (const auto& sent : stream) {
      // frequency subsampling
      std::vector<int> kept;
      kept.reserve(sent.size());
      for (int w : sent) {
        ++words_done;
        if (params.subsample > 0) {
          const double f = static_cast<double>(vocab.counts[w]);
          const double thresh = params.subsample * static_cast<double>(train_words);
          const double keep = (std::sqrt(f / thresh) + 1.0) * thresh / f;
          if (keep < 1.0 && unit(rng) > keep) continue;
        }
        kept.push_back(w);
      }
      const double lr = std::max(
          lr_floor, params.initial_lr * (1.0 - static_cast<double>(words_done) / total_words));
      for (size_t pos = 0; pos < kept.size(); ++pos) {
        const int target = kept[pos];
        const int shrink = static_cast<int>(rng() % static_cast<uint64_t>(params.window));
        const int lo = std::max<int>(0, static_cast<int>(pos) - params.window + shrink);
        const int hi = std::min<int>(static_cast<int>(kept.size()) - 1,
                                     static_cast<int>(pos) + params.window - shrink);
        neu1.setZero();
        int cw = 0;
        for (int j = lo; j <= hi; ++j) {
          if (j == static_cast<int>(pos)) continue;
          neu1 += res.matrix.row(kept[j]).transpose();
          ++cw;
        }
        if (cw == 0) continue;
        neu1 /= cw;
        neu1e.setZero();
        for (int k = 0; k <= params.negatives; ++k) {
          int w;
          double label;
          if (k == 0) {
            w = target;
            label = 1.0;
          } else {
            w = table[rng() % kTableSize];
            if (w == target) continue;
            label = 0.0;
          }
          const double f = neu1.dot(ctx.row(w).transpose());
          const double p = sigmoid(f);
          loss -= label > 0.5 ? std::log(std::max(p, 1e-12))
                              : std::log(std::max(1.0 - p, 1e-12));
          const double g = (label - p) * lr;
          neu1e += g * ctx.row(w).transpose();
          ctx.row(w) += g * neu1.transpose();
        }
        for (int j = lo; j <= hi; ++j) {
          if (j == static_cast<int>(pos)) continue;
          res.matrix.row(kept[j]) += neu1e.transpose();
        }
      }
    }
    res.epoch_loss.push_back(loss);
    if (!res.matrix.allFinite()) throw std::runtime_error("train_cbow: non-finite embedding");
  }
  return res;
}

inline std::vector<int> to_ids(const Vocabulary& vocab, const std::vector<std::string>& tokens,
                               int max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  std::vector<int> ids;
  ids.reserve(max_len);
  for (const auto& tok : tokens) {
    if (static_cast<int>(ids.size()) == max_len) break;
    ids.push_back(vocab.lookup(tok));
  }
  while (static_cast<int>(ids.size()) < max_len) ids.push_back(Vocabulary::kPad);
  return ids;
}

// Rows are the embedded tokens: unknown tokens map to the OOV row, the
// sequence is truncated to max_len and right-padded with the PAD row.
inline Matrix embed_sequence(const Vocabulary& vocab, const Matrix& matrix,
                             const std::vector<std::string>& tokens, int max_len) {
  const auto ids = to_ids(vocab, tokens, max_len);
  Matrix out(max_len, matrix.cols());
  for (int i = 0; i < max_len; ++i) out.row(i) = matrix.row(ids[i]);
  return out;
}

// Mean over the first real_len rows (the non-PAD prefix); zero if empty.
inline Eigen::VectorXd doc_vector(const Matrix& seq, Eigen::Index real_len) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(seq.cols());
  real_len = std::min(real_len, seq.rows());
  if (real_len <= 0) return v;
  for (Eigen::Index i = 0; i < real_len; ++i) v += seq.row(i).transpose();
  return v / static_cast<double>(real_len);
}

inline Eigen::VectorXd doc_vector(const Vocabulary& vocab, const Matrix& matrix,
                                  const std::vector<std::string>& tokens) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(matrix.cols());
  if (tokens.empty()) return v;
  for (const auto& tok : tokens) v += matrix.row(vocab.lookup(tok)).transpose();
  return v / static_cast<double>(tokens.size());
}

namespace io {
using namespace ::hiertext::binio;
constexpr uint32_t kMagic = 0x48544542;  // "HTEB"
constexpr uint32_t kVersion = 1;
}  // namespace io

inline void save_embeddings(const Vocabulary& vocab, const Matrix& matrix,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embeddings: " + path);
  io::write_u32(out, io::kMagic);
  io::write_u32(out, io::kVersion);
  io::write_u32(out, static_cast<uint32_t>(vocab.size()));
  io::write_u32(out, static_cast<uint32_t>(matrix.cols()));
  for (int i = 0; i < vocab.size(); ++i) {
    io::write_u32(out, static_cast<uint32_t>(vocab.tokens[i].size()));
    out.write(vocab.tokens[i].data(), static_cast<std::streamsize>(vocab.tokens[i].size()));
    io::write_u64(out, static_cast<uint64_t>(vocab.counts[i]));
  }
  for (int r = 0; r < matrix.rows(); ++r)
    for (int c = 0; c < matrix.cols(); ++c)
      io::write_f32(out, static_cast<float>(matrix(r, c)));
}

inline std::pair<Vocabulary, Matrix> load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embeddings: " + path);
  if (io::read_u32(in) != io::kMagic) throw std::runtime_error(path + ": bad magic");
  if (io::read_u32(in) != io::kVersion) throw std::runtime_error(path + ": bad version");
  const uint32_t V = io::read_u32(in);
  const uint32_t D = io::read_u32(in);
  Vocabulary vocab;
  for (uint32_t i = 0; i < V; ++i) {
    const uint32_t len = io::read_u32(in);
    std::string tok(len, '\0');
    in.read(tok.data(), len);
    vocab.counts.push_back(static_cast<int64_t>(io::read_u64(in)));
    if (i >= 2) vocab.index[tok] = static_cast<int>(i);
    vocab.tokens.push_back(std::move(tok));
  }
  Matrix matrix(V, D);
  for (uint32_t r = 0; r < V; ++r)
    for (uint32_t c = 0; c < D; ++c) matrix(r, c) = io::read_f32(in);
  if (!in) throw std::runtime_error(path + ": truncated file");
  return {std::move(vocab), std::move(matrix)};
}

// Text interop format: token followed by space-separated floats, one per line.
inline void save_embeddings_text(const Vocabulary& vocab, const Matrix& matrix,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embeddings: " + path);
  out << vocab.size() << ' ' << matrix.cols() << '\n';
  for (int r = 0; r < vocab.size(); ++r) {
    out << vocab.tokens[r];
    for (int c = 0; c < matrix.cols(); ++c)
      out << ' ' << static_cast<float>(matrix(r, c));
    out << '\n';
  }
}

// FNV-1a over the binary layout; used as the checkpoint's vocabulary
// reference hash.
inline uint64_t embeddings_hash(const Vocabulary& vocab, const Matrix& matrix) {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (int i = 0; i < vocab.size(); ++i)
    mix(vocab.tokens[i].data(), vocab.tokens[i].size());
  for (int r = 0; r < matrix.rows(); ++r)
    for (int c = 0; c < matrix.cols(); ++c) {
      const auto f = static_cast<float>(matrix(r, c));
      mix(&f, sizeof f);
    }
  return h;
}

}  // namespace hiertext::embedding
