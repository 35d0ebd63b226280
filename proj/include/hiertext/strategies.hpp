#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiertext/baselines.hpp"
#include "hiertext/corpus.hpp"

namespace hiertext::strategies {

using baselines::BaseLearner;
using baselines::LearnerFactory;
using neuralcore::Vec;

enum class Strategy { Flat, Global, LocalPerNode, LocalPerParent, LocalPerLevel };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Flat: return "flat";
    case Strategy::Global: return "global";
    case Strategy::LocalPerNode: return "per-node";
    case Strategy::LocalPerParent: return "per-parent";
    case Strategy::LocalPerLevel: return "per-level";
  }
  return "?";
}

enum class LevelMode { ArgmaxFree, Mask };

// A trained hierarchy classifier. Learner keying depends on the strategy:
//   flat       -> one multiclass learner over leaves          (root slot)
//   global     -> one binary learner per label (all 12)       (by_node)
//   per-node   -> one binary learner per non-root node        (by_node)
//   per-parent -> one multiclass learner per internal node    (by_node, incl. root)
//   per-level  -> one multiclass learner per level            (by_level)
struct HierClassifier {
  Strategy strategy = Strategy::Flat;
  corpus::Taxonomy taxonomy;
  std::unique_ptr<BaseLearner> flat;
  std::map<int, std::unique_ptr<BaseLearner>> by_node;
  std::map<int, std::unique_ptr<BaseLearner>> by_level;
  LevelMode level_mode = LevelMode::ArgmaxFree;
  std::string features = "mean-embedding";  // feature pipeline reference
};

namespace detail {

inline bool path_contains(const std::vector<int>& path, int id) {
  return std::find(path.begin(), path.end(), id) != path.end();
}

// All root-to-leaf paths, ordered lexicographically by label ids (the
// tie-break order for score-sum resolution).
inline std::vector<std::vector<int>> all_paths(const corpus::Taxonomy& tax) {
  std::vector<std::vector<int>> paths;
  for (int leaf : tax.level_ids(tax.levels)) paths.push_back(tax.path_to(leaf));
  std::sort(paths.begin(), paths.end());
  return paths;
}

}  // namespace detail

inline HierClassifier train_hier(Strategy strategy, const LearnerFactory& factory,
                                 const std::vector<Vec>& X,
                                 const std::vector<std::vector<int>>& golds,
                                 const corpus::Taxonomy& taxonomy) {
  if (X.size() != golds.size() || X.empty())
    throw std::invalid_argument("train_hier: bad training data");
  HierClassifier clf;
  clf.strategy = strategy;
  clf.taxonomy = taxonomy;

  auto class_of = [&](const std::vector<int>& gold, int level) {
    const auto ids = taxonomy.level_ids(level);
    const auto it = std::find(ids.begin(), ids.end(), gold.at(level - 1));
    if (it == ids.end()) throw std::invalid_argument("train_hier: gold label off taxonomy");
    return static_cast<int>(it - ids.begin());
  };

  switch (strategy) {
    case Strategy::Flat: {
      std::vector<int> y;
      for (const auto& g : golds) y.push_back(class_of(g, taxonomy.levels));
      clf.flat = factory();
      clf.flat->fit(X, y, static_cast<int>(taxonomy.level_ids(taxonomy.levels).size()));
      break;
    }
    case Strategy::Global:
    case Strategy::LocalPerNode: {
      // one binary learner per non-root node; positives are the documents
      // whose gold path passes through the node, negatives all others
      for (const auto& node : taxonomy.nodes) {
        std::vector<int> y;
        for (const auto& g : golds)
          y.push_back(detail::path_contains(g, node.id) ? 1 : 0);
        auto learner = factory();
        learner->fit(X, y, 2);
        clf.by_node[node.id] = std::move(learner);
      }
      break;
    }
    case Strategy::LocalPerParent: {
      for (int parent : taxonomy.internal_ids()) {
        const auto children = parent == corpus::kRoot ? taxonomy.level_ids(1)
                                                      : taxonomy.children_of(parent);
        const int level = parent == corpus::kRoot ? 1 : taxonomy.find(parent)->level + 1;
        std::vector<Vec> subX;
        std::vector<int> y;
        std::vector<bool> seen(children.size(), false);
        for (size_t i = 0; i < X.size(); ++i) {
          if (parent != corpus::kRoot && !detail::path_contains(golds[i], parent)) continue;
          const int label = golds[i].at(level - 1);
          const auto it = std::find(children.begin(), children.end(), label);
          if (it == children.end())
            throw std::invalid_argument("train_hier: gold label off taxonomy");
          y.push_back(static_cast<int>(it - children.begin()));
          seen[static_cast<size_t>(y.back())] = true;
          subX.push_back(X[i]);
        }
        const auto present = std::count(seen.begin(), seen.end(), true);
        if (present < 2) {
          const std::string name =
              parent == corpus::kRoot ? "<root>" : taxonomy.find(parent)->name;
          throw std::runtime_error("train_hier: parent node '" + name +
                                   "' has fewer than 2 child classes in training data");
        }
        auto learner = factory();
        learner->fit(subX, y, static_cast<int>(children.size()));
        clf.by_node[parent] = std::move(learner);
      }
      break;
    }
    case Strategy::LocalPerLevel: {
      for (int level = 1; level <= taxonomy.levels; ++level) {
        std::vector<int> y;
        for (const auto& g : golds) y.push_back(class_of(g, level));
        auto learner = factory();
        learner->fit(X, y, static_cast<int>(taxonomy.level_ids(level).size()));
        clf.by_level[level] = std::move(learner);
      }
      break;
    }
  }
  return clf;
}

inline std::vector<int> predict_hier(const HierClassifier& clf, const Vec& x) {
  const auto& tax = clf.taxonomy;
  switch (clf.strategy) {
    case Strategy::Flat: {
      const Vec s = clf.flat->scores(x);
      Eigen::Index best;
      s.maxCoeff(&best);
      return tax.path_to(tax.level_ids(tax.levels)[static_cast<size_t>(best)]);
    }
    case Strategy::Global:
    case Strategy::LocalPerNode: {
      // maximize the summed positive-class score over root-to-leaf paths;
      // candidate paths are pre-sorted so ties keep the lexicographically
      // smallest label ids
      std::map<int, double> node_score;
      for (const auto& [id, learner] : clf.by_node)
        node_score[id] = learner->scores(x)(1);
      const auto paths = detail::all_paths(tax);
      size_t best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < paths.size(); ++i) {
        double s = 0.0;
        for (int id : paths[i]) s += node_score.at(id);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      return paths[best];
    }
    case Strategy::LocalPerParent: {
      std::vector<int> path;
      int parent = corpus::kRoot;
      while (true) {
        const auto it = clf.by_node.find(parent);
        if (it == clf.by_node.end()) break;
        const auto children = parent == corpus::kRoot ? tax.level_ids(1)
                                                      : tax.children_of(parent);
        const Vec s = it->second->scores(x);
        Eigen::Index best;
        s.maxCoeff(&best);
        parent = children[static_cast<size_t>(best)];
        path.push_back(parent);
      }
      return path;
    }
    case Strategy::LocalPerLevel: {
      std::vector<int> path;
      int prev = corpus::kRoot;
      for (int level = 1; level <= tax.levels; ++level) {
        const auto ids = tax.level_ids(level);
        const Vec s = clf.by_level.at(level)->scores(x);
        Eigen::Index best = 0;
        if (clf.level_mode == LevelMode::Mask && level > 1) {
          double best_score = -std::numeric_limits<double>::infinity();
          for (size_t k = 0; k < ids.size(); ++k) {
            if (tax.parent_of(ids[k]) != prev) continue;
            if (s(static_cast<Eigen::Index>(k)) > best_score) {
              best_score = s(static_cast<Eigen::Index>(k));
              best = static_cast<Eigen::Index>(k);
            }
          }
        } else {
          s.maxCoeff(&best);
        }
        prev = ids[static_cast<size_t>(best)];
        path.push_back(prev);
      }
      return path;
    }
  }
  throw std::logic_error("predict_hier: unknown strategy");
}

// ---------------------------------------------------------------------------
// Classifier persistence: magic, strategy, taxonomy, keyed learner blobs,
// FNV-1a checksum trailer.
// ---------------------------------------------------------------------------

namespace detail {
constexpr uint32_t kMagic = 0x48545343;  // "HTSC"
constexpr uint32_t kVersion = 1;

inline void write_taxonomy(std::ostream& out, const corpus::Taxonomy& tax) {
  binio::write_u32(out, static_cast<uint32_t>(tax.nodes.size()));
  binio::write_u32(out, static_cast<uint32_t>(tax.levels));
  for (const auto& n : tax.nodes) {
    binio::write_u32(out, static_cast<uint32_t>(n.id));
    binio::write_string(out, n.name);
    binio::write_u32(out, static_cast<uint32_t>(n.parent));
    binio::write_u32(out, static_cast<uint32_t>(n.level));
  }
}

inline corpus::Taxonomy read_taxonomy(std::istream& in) {
  corpus::Taxonomy tax;
  const uint32_t n = binio::read_u32(in);
  tax.levels = static_cast<int>(binio::read_u32(in));
  for (uint32_t i = 0; i < n; ++i) {
    corpus::TaxNode node;
    node.id = static_cast<int>(binio::read_u32(in));
    node.name = binio::read_string(in);
    node.parent = static_cast<int>(binio::read_u32(in));
    node.level = static_cast<int>(binio::read_u32(in));
    tax.nodes.push_back(std::move(node));
  }
  return tax;
}

inline void write_learner_map(std::ostream& out,
                              const std::map<int, std::unique_ptr<BaseLearner>>& m) {
  binio::write_u32(out, static_cast<uint32_t>(m.size()));
  for (const auto& [key, learner] : m) {
    binio::write_u32(out, static_cast<uint32_t>(key));
    binio::write_string(out, learner->type_name());
    learner->save(out);
  }
}

inline void read_learner_map(std::istream& in,
                             std::map<int, std::unique_ptr<BaseLearner>>& m) {
  const uint32_t n = binio::read_u32(in);
  for (uint32_t i = 0; i < n; ++i) {
    const int key = static_cast<int>(binio::read_u32(in));
    auto learner = baselines::make_learner(binio::read_string(in));
    learner->load(in);
    m[key] = std::move(learner);
  }
}
}  // namespace detail

inline void save_classifier(const HierClassifier& clf, const std::string& path) {
  std::ostringstream payload(std::ios::binary);
  binio::write_u32(payload, detail::kMagic);
  binio::write_u32(payload, detail::kVersion);
  binio::write_u32(payload, static_cast<uint32_t>(clf.strategy));
  binio::write_u32(payload, static_cast<uint32_t>(clf.level_mode));
  binio::write_string(payload, clf.features);
  detail::write_taxonomy(payload, clf.taxonomy);
  binio::write_u32(payload, clf.flat ? 1 : 0);
  if (clf.flat) {
    binio::write_string(payload, clf.flat->type_name());
    clf.flat->save(payload);
  }
  detail::write_learner_map(payload, clf.by_node);
  detail::write_learner_map(payload, clf.by_level);
  const std::string bytes = payload.str();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write classifier: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  binio::write_u64(out, binio::fnv1a(bytes));
}

inline HierClassifier load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open classifier: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16) throw std::runtime_error(path + ": truncated classifier");
  const std::string payload = bytes.substr(0, bytes.size() - 8);
  std::istringstream ts(bytes.substr(bytes.size() - 8), std::ios::binary);
  if (binio::read_u64(ts) != binio::fnv1a(payload))
    throw std::runtime_error(path + ": checksum mismatch");
  std::istringstream ps(payload, std::ios::binary);
  if (binio::read_u32(ps) != detail::kMagic) throw std::runtime_error(path + ": bad magic");
  if (binio::read_u32(ps) != detail::kVersion)
    throw std::runtime_error(path + ": bad version");
  HierClassifier clf;
  clf.strategy = static_cast<Strategy>(binio::read_u32(ps));
  clf.level_mode = static_cast<LevelMode>(binio::read_u32(ps));
  clf.features = binio::read_string(ps);
  clf.taxonomy = detail::read_taxonomy(ps);
  if (binio::read_u32(ps) == 1) {
    clf.flat = baselines::make_learner(binio::read_string(ps));
    clf.flat->load(ps);
  }
  detail::read_learner_map(ps, clf.by_node);
  detail::read_learner_map(ps, clf.by_level);
  if (!ps) throw std::runtime_error(path + ": truncated classifier");
  return clf;
}

}  // namespace hiertext::strategies
