#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "hiertext/baselines.hpp"
#include "hiertext/corpus.hpp"

namespace testutil {

// The 3x9 news taxonomy used throughout the tests.
inline hiertext::corpus::Taxonomy undhtc() {
  using hiertext::corpus::kRoot;
  hiertext::corpus::Taxonomy tax;
  tax.levels = 2;
  tax.nodes = {
      {0, "Sports", kRoot, 1},      {1, "Technology", kRoot, 1},
      {2, "Entertainment", kRoot, 1},
      {3, "Cricket", 0, 2},         {4, "Hockey", 0, 2},   {5, "Football", 0, 2},
      {6, "Applications", 1, 2},    {7, "Mobile", 1, 2},   {8, "Internet", 1, 2},
      {9, "Music", 2, 2},           {10, "Fashion", 2, 2}, {11, "Movies", 2, 2},
  };
  return tax;
}

// Learner stub emitting pre-set scores, for strategy-logic tests.
class FixedScoreLearner final : public hiertext::baselines::BaseLearner {
 public:
  explicit FixedScoreLearner(hiertext::neuralcore::Vec s) : s_(std::move(s)) {
    fitted_ = true;
  }
  void fit(const std::vector<hiertext::neuralcore::Vec>&, const std::vector<int>&,
           int) override {}
  hiertext::neuralcore::Vec scores(const hiertext::neuralcore::Vec&) const override {
    return s_;
  }
  hiertext::baselines::LearnerKind kind() const override {
    return hiertext::baselines::LearnerKind::Multiclass;
  }
  std::string type_name() const override { return "fixed"; }
  void save(std::ostream&) const override {}
  void load(std::istream&) override {}

 private:
  hiertext::neuralcore::Vec s_;
};

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const auto dir = std::filesystem::temp_directory_path() /
                   ("hiertext-test-" + tag + "-" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
