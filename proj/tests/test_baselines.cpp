#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "hiertext/baselines.hpp"
#include "helpers.hpp"

using namespace hiertext;
using neuralcore::Vec;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

int argmax(const Vec& s) {
  Eigen::Index best;
  s.maxCoeff(&best);
  return static_cast<int>(best);
}

}  // namespace

TEST_CASE("gaussian nb separates two 1-d classes") {
  baselines::GaussianNb nb;
  nb.fit({v1(1.0), v1(1.2), v1(3.0), v1(3.2)}, {0, 0, 1, 1}, 2);
  REQUIRE(argmax(nb.scores(v1(1.1))) == 0);
  REQUIRE(argmax(nb.scores(v1(3.1))) == 1);
}

TEST_CASE("gaussian nb ties break to the lowest class index") {
  baselines::GaussianNb nb;
  nb.fit({v1(0.0), v1(2.0), v1(4.0), v1(6.0)}, {0, 0, 1, 1}, 2);
  // x = 3 is exactly between the class means with equal variances and priors
  const Vec s = nb.scores(v1(3.0));
  REQUIRE_THAT(s(0), Catch::Matchers::WithinAbs(s(1), 1e-12));
  REQUIRE(argmax(s) == 0);
}

TEST_CASE("gaussian nb floors single-sample variances") {
  baselines::GaussianNb nb;
  nb.fit({v1(1.0), v1(5.0)}, {0, 1}, 2);
  const Vec s = nb.scores(v1(1.0));
  REQUIRE(std::isfinite(s(0)));
  REQUIRE(argmax(s) == 0);
}

TEST_CASE("gaussian nb reports which class is absent") {
  baselines::GaussianNb nb;
  REQUIRE_THROWS_WITH(nb.fit({v1(1.0)}, {0}, 2),
                      Catch::Matchers::ContainsSubstring("class 1"));
}

TEST_CASE("logreg with zero training gives probability one half") {
  baselines::LogRegOvr::Params p;
  p.epochs = 0;
  baselines::LogRegOvr lr(p);
  lr.fit({v2(1, 0), v2(0, 1)}, {0, 1}, 2);
  const Vec s = lr.scores(v2(0.3, -0.8));
  REQUIRE(s(0) == 0.5);
  REQUIRE(s(1) == 0.5);
}

TEST_CASE("logreg fits a separable toy set perfectly") {
  std::vector<Vec> X = {v2(1, 1), v2(1.2, 0.9), v2(0.8, 1.1),
                        v2(-1, -1), v2(-1.1, -0.8), v2(-0.9, -1.2)};
  std::vector<int> y = {0, 0, 0, 1, 1, 1};
  baselines::LogRegOvr lr;
  lr.fit(X, y, 2);
  for (size_t i = 0; i < X.size(); ++i) REQUIRE(argmax(lr.scores(X[i])) == y[i]);
}

TEST_CASE("stronger l2 shrinks logreg weights") {
  std::vector<Vec> X = {v2(1, 1), v2(1.2, 0.9), v2(-1, -1), v2(-0.9, -1.2)};
  std::vector<int> y = {0, 0, 1, 1};
  std::vector<double> norms;
  for (double l2 : {0.0, 0.1, 1.0}) {
    baselines::LogRegOvr::Params p;
    p.l2 = l2;
    baselines::LogRegOvr lr(p);
    lr.fit(X, y, 2);
    norms.push_back(lr.weights().norm());
  }
  REQUIRE(norms[1] < norms[0]);
  REQUIRE(norms[2] < norms[1]);
}

TEST_CASE("svm achieves positive margins on a separable toy set") {
  std::vector<Vec> X = {v2(2, 2), v2(2.2, 1.8), v2(-2, -2), v2(-1.8, -2.2)};
  std::vector<int> y = {0, 0, 1, 1};
  baselines::LinearSvmOvr svm;
  svm.fit(X, y, 2);
  for (size_t i = 0; i < X.size(); ++i) {
    const Vec z = svm.scores(X[i]);
    for (int k = 0; k < 2; ++k) {
      const double s = y[i] == static_cast<int>(k) ? 1.0 : -1.0;
      REQUIRE(s * z(k) > 0.0);
    }
  }
}

TEST_CASE("svm with zero hinge weight decays toward zero weights") {
  std::vector<Vec> X = {v2(1, 0), v2(0, 1)};
  std::vector<int> y = {0, 1};
  baselines::LinearSvmOvr::Params p;
  p.c = 0.0;
  p.epochs = 200;
  baselines::LinearSvmOvr svm(p);
  svm.fit(X, y, 2);
  REQUIRE(svm.weights().norm() < 1e-6);
}

TEST_CASE("flipping all labels negates the svm weights") {
  std::vector<Vec> X = {v2(1, 2), v2(2, 1), v2(-1, -2), v2(-2, -1)};
  std::vector<int> y = {0, 0, 1, 1};
  std::vector<int> flipped = {1, 1, 0, 0};
  baselines::LinearSvmOvr a, b;
  a.fit(X, y, 2);
  b.fit(X, flipped, 2);
  REQUIRE((a.weights().row(0) - b.weights().row(1)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((a.weights().row(1) - b.weights().row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("knn returns the label of an exactly matching point for k=1") {
  REQUIRE(baselines::knn_predict({v2(0, 0), v2(5, 5)}, {1, 0}, v2(5, 5), 1) == 0);
}

TEST_CASE("knn majority vote wins over a nearer minority") {
  // nearest three: two of class 0, one of class 1
  std::vector<Vec> X = {v2(0, 0.1), v2(0, -0.1), v2(0, 0.05), v2(9, 9)};
  std::vector<int> y = {0, 0, 1, 1};
  REQUIRE(baselines::knn_predict(X, y, v2(0, 0), 3) == 0);
}

TEST_CASE("knn crafted five-point set matches an exhaustive sort") {
  std::vector<Vec> X = {v2(0, 0), v2(1, 0), v2(0, 1), v2(2, 2), v2(-1, -1)};
  std::vector<int> y = {0, 1, 1, 0, 2};
  const Vec q = v2(0.4, 0.4);
  // exhaustive: distances .57, .72, .72, 2.26, 1.98 -> neighbors {0,1,1} -> 1
  REQUIRE(baselines::knn_predict(X, y, q, 3) == 1);
}

TEST_CASE("knn vote ties break by summed inverse distance") {
  // k=2: one neighbor per class; class 1 is closer so it wins the tie
  std::vector<Vec> X = {v2(0, 1), v2(0, 0.5)};
  std::vector<int> y = {0, 1};
  REQUIRE(baselines::knn_predict(X, y, v2(0, 0), 2) == 1);
}

TEST_CASE("knn rejects k larger than the training set") {
  baselines::Knn knn(5);
  REQUIRE_THROWS_AS(knn.fit({v2(0, 0)}, {0}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(baselines::knn_predict({}, {}, v2(0, 0), 1),
                    std::invalid_argument);
}

TEST_CASE("knn agrees with a brute-force oracle on random instances") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec> X;
    std::vector<int> y;
    const int n = 8 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      Vec v(4);
      for (int d = 0; d < 4; ++d) v(d) = unit(rng);
      X.push_back(v);
      y.push_back(static_cast<int>(rng() % 3));
    }
    Vec q(4);
    for (int d = 0; d < 4; ++d) q(d) = unit(rng);

    // oracle: full stable sort by (distance, index), then vote with the
    // documented tie-break order
    std::vector<std::pair<double, int>> order;
    for (int i = 0; i < n; ++i) order.push_back({(X[i] - q).norm(), i});
    std::sort(order.begin(), order.end());
    std::vector<double> votes(3, 0), inv(3, 0);
    for (int j = 0; j < 3; ++j) {
      const int label = y[order[j].second];
      votes[label] += 1;
      inv[label] += order[j].first > 0 ? 1.0 / order[j].first : 1e12;
    }
    int expected = 0;
    for (int k = 1; k < 3; ++k) {
      if (votes[k] > votes[expected] ||
          (votes[k] == votes[expected] && inv[k] > inv[expected]))
        expected = k;
    }
    REQUIRE(baselines::knn_predict(X, y, q, 3) == expected);
  }
}

TEST_CASE("fits are deterministic for a fixed seed") {
  std::vector<Vec> X = {v2(1, 1), v2(1.1, 0.8), v2(-1, -1), v2(-0.8, -1.1)};
  std::vector<int> y = {0, 0, 1, 1};
  baselines::LogRegOvr a, b;
  a.fit(X, y, 2);
  b.fit(X, y, 2);
  REQUIRE((a.weights().array() == b.weights().array()).all());
  baselines::LinearSvmOvr c, d;
  c.fit(X, y, 2);
  d.fit(X, y, 2);
  REQUIRE((c.weights().array() == d.weights().array()).all());
}

TEST_CASE("learners refuse to score before fitting") {
  REQUIRE_THROWS_AS(baselines::GaussianNb().scores(v1(0)), std::logic_error);
  REQUIRE_THROWS_AS(baselines::LogRegOvr().scores(v1(0)), std::logic_error);
  REQUIRE_THROWS_AS(baselines::LinearSvmOvr().scores(v1(0)), std::logic_error);
  REQUIRE_THROWS_AS(baselines::Knn().scores(v1(0)), std::logic_error);
}

TEST_CASE("every learner round-trips through its binary form") {
  std::vector<Vec> X = {v2(1, 1), v2(1.1, 0.8), v2(-1, -1), v2(-0.8, -1.1)};
  std::vector<int> y = {0, 0, 1, 1};
  const Vec q = v2(0.4, 0.6);
  for (const char* name : {"nb", "logreg", "svm", "knn"}) {
    auto learner = baselines::make_learner(name);
    learner->fit(X, y, 2);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    learner->save(buf);
    auto restored = baselines::make_learner(name);
    restored->load(buf);
    const Vec before = learner->scores(q);
    const Vec after = restored->scores(q);
    // float32 storage: compare at storage precision
    for (int k = 0; k < 2; ++k)
      REQUIRE_THAT(after(k), Catch::Matchers::WithinRel(before(k), 1e-5));
  }
  REQUIRE_THROWS_AS(baselines::make_learner("mystery"), std::invalid_argument);
}
