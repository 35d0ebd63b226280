#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "hiertext/binio.hpp"
#include "hiertext/neuralcore.hpp"

namespace hiertext::baselines {

using neuralcore::Mat;
using neuralcore::Vec;

enum class LearnerKind { Multiclass, Binary };

// Pluggable base learner for the hierarchy strategies. Multiclass learners
// emit one score per class; binary learners are fit with labels {0,1} and
// num_classes = 2, the positive-class score being scores(x)(1).
class BaseLearner {
 public:
  virtual ~BaseLearner() = default;
  virtual void fit(const std::vector<Vec>& X, const std::vector<int>& y,
                   int num_classes) = 0;
  virtual Vec scores(const Vec& x) const = 0;
  virtual LearnerKind kind() const = 0;
  virtual std::string type_name() const = 0;
  virtual void save(std::ostream& out) const = 0;
  virtual void load(std::istream& in) = 0;
  bool fitted() const { return fitted_; }

 protected:
  bool fitted_ = false;
};

using LearnerFactory = std::function<std::unique_ptr<BaseLearner>()>;

// ---------------------------------------------------------------------------
// Gaussian naive Bayes: per-class per-dimension mean and variance with a
// 1e-9 variance floor; scores are log prior + summed log densities.
// ---------------------------------------------------------------------------
class GaussianNb final : public BaseLearner {
 public:
  explicit GaussianNb(double var_floor = 1e-9) : var_floor_(var_floor) {}

  void fit(const std::vector<Vec>& X, const std::vector<int>& y, int num_classes) override {
    if (X.empty() || X.size() != y.size())
      throw std::invalid_argument("GaussianNb: bad training data");
    const auto d = X[0].size();
    means_.assign(num_classes, Vec::Zero(d));
    vars_.assign(num_classes, Vec::Zero(d));
    counts_.assign(num_classes, 0);
    for (size_t i = 0; i < X.size(); ++i) {
      if (y[i] < 0 || y[i] >= num_classes) throw std::invalid_argument("GaussianNb: bad label");
      means_[y[i]] += X[i];
      ++counts_[y[i]];
    }
    for (int k = 0; k < num_classes; ++k) {
      if (counts_[k] == 0)
        throw std::invalid_argument("GaussianNb: class " + std::to_string(k) +
                                    " absent from training data");
      means_[k] /= static_cast<double>(counts_[k]);
    }
    for (size_t i = 0; i < X.size(); ++i) {
      const Vec diff = X[i] - means_[y[i]];
      vars_[y[i]] += diff.cwiseProduct(diff);
    }
    log_priors_.resize(num_classes);
    for (int k = 0; k < num_classes; ++k) {
      vars_[k] = (vars_[k] / static_cast<double>(counts_[k])).cwiseMax(var_floor_);
      log_priors_(k) = std::log(static_cast<double>(counts_[k]) /
                                static_cast<double>(X.size()));
    }
    fitted_ = true;
  }

  Vec scores(const Vec& x) const override {
    if (!fitted_) throw std::logic_error("GaussianNb: predict before fit");
    Vec s(log_priors_.size());
    constexpr double kLog2Pi = 1.8378770664093453;
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      const Vec diff = x - means_[k];
      s(k) = log_priors_(k) -
             0.5 * (vars_[k].array().log() + kLog2Pi +
                    diff.array().square() / vars_[k].array())
                       .sum();
    }
    return s;
  }

  LearnerKind kind() const override { return LearnerKind::Multiclass; }
  std::string type_name() const override { return "nb"; }

  void save(std::ostream& out) const override {
    binio::write_f32(out, static_cast<float>(var_floor_));
    binio::write_u32(out, static_cast<uint32_t>(means_.size()));
    for (size_t k = 0; k < means_.size(); ++k) {
      binio::write_vec(out, means_[k]);
      binio::write_vec(out, vars_[k]);
      binio::write_u32(out, static_cast<uint32_t>(counts_[k]));
    }
    binio::write_vec(out, log_priors_);
  }

  void load(std::istream& in) override {
    var_floor_ = binio::read_f32(in);
    const uint32_t n = binio::read_u32(in);
    means_.clear();
    vars_.clear();
    counts_.clear();
    for (uint32_t k = 0; k < n; ++k) {
      means_.push_back(binio::read_vec(in));
      vars_.push_back(binio::read_vec(in));
      counts_.push_back(static_cast<int>(binio::read_u32(in)));
    }
    log_priors_ = binio::read_vec(in);
    fitted_ = true;
  }

 private:
  double var_floor_;
  std::vector<Vec> means_, vars_;
  std::vector<int> counts_;
  Vec log_priors_;
};

// ---------------------------------------------------------------------------
// One-vs-rest logistic regression trained by seeded mini-batch gradient
// descent with L2 regularization; scores are sigmoid probabilities.
// ---------------------------------------------------------------------------
class LogRegOvr final : public BaseLearner {
 public:
  struct Params {
    double l2 = 1e-4;
    int epochs = 100;
    double lr = 0.5;
    int batch = 32;
    uint64_t seed = 1;
  };

  LogRegOvr() : LogRegOvr(Params{}) {}
  explicit LogRegOvr(Params p) : p_(p) {}

  void fit(const std::vector<Vec>& X, const std::vector<int>& y, int num_classes) override {
    if (X.empty() || X.size() != y.size())
      throw std::invalid_argument("LogRegOvr: bad training data");
    const auto d = X[0].size();
    W_ = Mat::Zero(num_classes, d);
    b_ = Vec::Zero(num_classes);
    std::mt19937_64 rng(p_.seed);
    std::vector<size_t> idx(X.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int epoch = 0; epoch < p_.epochs; ++epoch) {
      std::shuffle(idx.begin(), idx.end(), rng);
      for (size_t start = 0; start < idx.size(); start += p_.batch) {
        const size_t end = std::min(idx.size(), start + p_.batch);
        Mat gW = Mat::Zero(num_classes, d);
        Vec gb = Vec::Zero(num_classes);
        for (size_t i = start; i < end; ++i) {
          const Vec& x = X[idx[i]];
          const Vec z = W_ * x + b_;
          for (int k = 0; k < num_classes; ++k) {
            const double target = y[idx[i]] == k ? 1.0 : 0.0;
            const double err = neuralcore::sigmoid(z(k)) - target;
            gW.row(k) += err * x.transpose();
            gb(k) += err;
          }
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        W_ -= p_.lr * (gW * inv + p_.l2 * W_);
        b_ -= p_.lr * (gb * inv);
      }
    }
    fitted_ = true;
  }

  Vec scores(const Vec& x) const override {
    if (!fitted_) throw std::logic_error("LogRegOvr: predict before fit");
    return neuralcore::sigmoid(W_ * x + b_);
  }

  LearnerKind kind() const override { return LearnerKind::Multiclass; }
  std::string type_name() const override { return "logreg"; }
  const Mat& weights() const { return W_; }

  void save(std::ostream& out) const override {
    binio::write_mat(out, W_);
    binio::write_vec(out, b_);
  }
  void load(std::istream& in) override {
    W_ = binio::read_mat(in);
    b_ = binio::read_vec(in);
    fitted_ = true;
  }

 private:
  Params p_;
  Mat W_;
  Vec b_;
};

// ---------------------------------------------------------------------------
// One-vs-rest linear SVM: L2-regularized hinge loss, seeded subgradient
// descent; scores are margins.
// ---------------------------------------------------------------------------
class LinearSvmOvr final : public BaseLearner {
 public:
  struct Params {
    double c = 1.0;
    int epochs = 100;
    double lr = 0.1;
    int batch = 32;
    uint64_t seed = 1;
  };

  LinearSvmOvr() : LinearSvmOvr(Params{}) {}
  explicit LinearSvmOvr(Params p) : p_(p) {}

  void fit(const std::vector<Vec>& X, const std::vector<int>& y, int num_classes) override {
    if (X.empty() || X.size() != y.size())
      throw std::invalid_argument("LinearSvmOvr: bad training data");
    const auto d = X[0].size();
    W_ = Mat::Zero(num_classes, d);
    b_ = Vec::Zero(num_classes);
    std::mt19937_64 rng(p_.seed);
    std::vector<size_t> idx(X.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (int epoch = 0; epoch < p_.epochs; ++epoch) {
      std::shuffle(idx.begin(), idx.end(), rng);
      for (size_t start = 0; start < idx.size(); start += p_.batch) {
        const size_t end = std::min(idx.size(), start + p_.batch);
        Mat gW = Mat::Zero(num_classes, d);  // hinge subgradient
        Vec gb = Vec::Zero(num_classes);
        for (size_t i = start; i < end; ++i) {
          const Vec& x = X[idx[i]];
          const Vec z = W_ * x + b_;
          for (int k = 0; k < num_classes; ++k) {
            const double s = y[idx[i]] == k ? 1.0 : -1.0;
            if (s * z(k) < 1.0) {
              gW.row(k) -= p_.c * s * x.transpose();
              gb(k) -= p_.c * s;
            }
          }
        }
        const double step = p_.lr / static_cast<double>(1 + epoch);
        const double inv = 1.0 / static_cast<double>(end - start);
        W_ -= step * (gW * inv + W_);  // + W_ from the 0.5||W||^2 term
        b_ -= step * (gb * inv);
      }
    }
    fitted_ = true;
  }

  Vec scores(const Vec& x) const override {
    if (!fitted_) throw std::logic_error("LinearSvmOvr: predict before fit");
    return W_ * x + b_;
  }

  LearnerKind kind() const override { return LearnerKind::Multiclass; }
  std::string type_name() const override { return "svm"; }
  const Mat& weights() const { return W_; }
  const Vec& bias() const { return b_; }

  void save(std::ostream& out) const override {
    binio::write_mat(out, W_);
    binio::write_vec(out, b_);
  }
  void load(std::istream& in) override {
    W_ = binio::read_mat(in);
    b_ = binio::read_vec(in);
    fitted_ = true;
  }

 private:
  Params p_;
  Mat W_;
  Vec b_;
};

// ---------------------------------------------------------------------------
// k-nearest neighbors, Euclidean distance. Majority vote; ties broken by
// summed inverse distance, then lowest class index.
// ---------------------------------------------------------------------------
class Knn final : public BaseLearner {
 public:
  explicit Knn(int k = 3) : k_(k) {}

  void fit(const std::vector<Vec>& X, const std::vector<int>& y, int num_classes) override {
    if (X.empty() || X.size() != y.size())
      throw std::invalid_argument("Knn: bad training data");
    if (k_ > static_cast<int>(X.size()))
      throw std::invalid_argument("Knn: k exceeds training set size");
    X_ = X;
    y_ = y;
    num_classes_ = num_classes;
    fitted_ = true;
  }

  // votes plus a sub-unit inverse-distance term, so argmax realizes the
  // vote / inverse-distance / lowest-index tie-break order
  Vec scores(const Vec& x) const override {
    if (!fitted_) throw std::logic_error("Knn: predict before fit");
    std::vector<std::pair<double, size_t>> dist(X_.size());
    for (size_t i = 0; i < X_.size(); ++i) dist[i] = {(X_[i] - x).norm(), i};
    std::partial_sort(dist.begin(), dist.begin() + k_, dist.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first < b.first;
                        return a.second < b.second;
                      });
    Vec votes = Vec::Zero(num_classes_);
    Vec inv = Vec::Zero(num_classes_);
    for (int j = 0; j < k_; ++j) {
      const int label = y_[dist[j].second];
      votes(label) += 1.0;
      inv(label) += dist[j].first > 0.0 ? 1.0 / dist[j].first : 1e12;
    }
    return votes + inv / (1.0 + inv.sum());
  }

  LearnerKind kind() const override { return LearnerKind::Multiclass; }
  std::string type_name() const override { return "knn"; }

  void save(std::ostream& out) const override {
    binio::write_u32(out, static_cast<uint32_t>(k_));
    binio::write_u32(out, static_cast<uint32_t>(num_classes_));
    binio::write_u32(out, static_cast<uint32_t>(X_.size()));
    for (size_t i = 0; i < X_.size(); ++i) {
      binio::write_vec(out, X_[i]);
      binio::write_u32(out, static_cast<uint32_t>(y_[i]));
    }
  }
  void load(std::istream& in) override {
    k_ = static_cast<int>(binio::read_u32(in));
    num_classes_ = static_cast<int>(binio::read_u32(in));
    const uint32_t n = binio::read_u32(in);
    X_.clear();
    y_.clear();
    for (uint32_t i = 0; i < n; ++i) {
      X_.push_back(binio::read_vec(in));
      y_.push_back(static_cast<int>(binio::read_u32(in)));
    }
    fitted_ = true;
  }

 private:
  int k_;
  int num_classes_ = 0;
  std::vector<Vec> X_;
  std::vector<int> y_;
};

// Factory for (de)serialization and CLI wiring.
inline std::unique_ptr<BaseLearner> make_learner(const std::string& type_name) {
  if (type_name == "nb") return std::make_unique<GaussianNb>();
  if (type_name == "logreg") return std::make_unique<LogRegOvr>();
  if (type_name == "svm") return std::make_unique<LinearSvmOvr>();
  if (type_name == "knn") return std::make_unique<Knn>();
  throw std::invalid_argument("unknown learner type: " + type_name);
}

inline int knn_predict(const std::vector<Vec>& train_X, const std::vector<int>& train_y,
                       const Vec& x, int k = 3) {
  if (train_X.empty()) throw std::invalid_argument("knn_predict: empty training set");
  int num_classes = 0;
  for (int label : train_y) num_classes = std::max(num_classes, label + 1);
  Knn knn(k);
  knn.fit(train_X, train_y, num_classes);
  Eigen::Index best;
  knn.scores(x).maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace hiertext::baselines
