#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hiertext/corpus.hpp"

namespace hiertext::eval {

struct ConfusionCounts {
  std::vector<int> labels;  // declared label set, ascending
  std::map<int, long> tp, fp, fn;
};

// Standard multi-label counting: per document, a label in both sets is a
// TP, predicted-only an FP, gold-only an FN.
inline ConfusionCounts confusion(const std::vector<std::set<int>>& preds,
                                 const std::vector<std::set<int>>& golds,
                                 const std::vector<int>& label_set) {
  if (preds.size() != golds.size())
    throw std::invalid_argument("confusion: length mismatch");
  ConfusionCounts counts;
  counts.labels = label_set;
  std::sort(counts.labels.begin(), counts.labels.end());
  for (int l : counts.labels) counts.tp[l] = counts.fp[l] = counts.fn[l] = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    for (int l : preds[i])
      if (!counts.tp.count(l))
        throw std::invalid_argument("confusion: unknown label " + std::to_string(l));
    for (int l : golds[i])
      if (!counts.tp.count(l))
        throw std::invalid_argument("confusion: unknown label " + std::to_string(l));
    for (int l : counts.labels) {
      const bool p = preds[i].count(l) > 0;
      const bool g = golds[i].count(l) > 0;
      if (p && g)
        ++counts.tp[l];
      else if (p)
        ++counts.fp[l];
      else if (g)
        ++counts.fn[l];
    }
  }
  return counts;
}

struct PRF {
  double precision = 0, recall = 0, f1 = 0;
};

namespace detail {
inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}  // namespace detail

// Pooled counts over all labels; 0/0 -> 0.
inline PRF micro_f1(const ConfusionCounts& c) {
  long tp = 0, fp = 0, fn = 0;
  for (int l : c.labels) {
    tp += c.tp.at(l);
    fp += c.fp.at(l);
    fn += c.fn.at(l);
  }
  PRF r;
  r.precision = detail::ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
  r.recall = detail::ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
  r.f1 = detail::ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

struct MacroResult {
  std::vector<double> per_label_f1;  // aligned with counts.labels
  double precision = 0, recall = 0, f1 = 0;
};

// Per-label P/R/F1 averaged over the declared label set; labels with no
// gold and no predictions contribute zero and still count in the average.
inline MacroResult macro_f1(const ConfusionCounts& c) {
  MacroResult r;
  for (int l : c.labels) {
    const auto tp = static_cast<double>(c.tp.at(l));
    const double p = detail::ratio(tp, tp + static_cast<double>(c.fp.at(l)));
    const double rec = detail::ratio(tp, tp + static_cast<double>(c.fn.at(l)));
    const double f1 = detail::ratio(2.0 * p * rec, p + rec);
    r.per_label_f1.push_back(f1);
    r.precision += p;
    r.recall += rec;
    r.f1 += f1;
  }
  const auto n = static_cast<double>(c.labels.size());
  if (n > 0) {
    r.precision /= n;
    r.recall /= n;
    r.f1 /= n;
  }
  return r;
}

struct LevelReport {
  int level = 0;
  PRF micro;
  MacroResult macro;
  double accuracy = 0;  // single-label accuracy at this level
};

// Combined report over all labels (each document contributes one label per
// level) plus per-level sub-reports. Accuracy is exact path match;
// label_slot_accuracy counts correct slots individually.
struct MetricsReport {
  double exact_match_accuracy = 0;
  double label_slot_accuracy = 0;
  PRF micro;          // combined label set
  MacroResult macro;  // combined label set
  ConfusionCounts combined_counts;
  std::vector<LevelReport> levels;
};

inline MetricsReport evaluate(const std::vector<std::vector<int>>& pred_paths,
                              const std::vector<std::vector<int>>& gold_paths,
                              const corpus::Taxonomy& taxonomy) {
  if (pred_paths.size() != gold_paths.size())
    throw std::invalid_argument("evaluate: length mismatch");
  const size_t n = pred_paths.size();
  MetricsReport report;

  std::vector<int> all_labels;
  for (const auto& node : taxonomy.nodes) all_labels.push_back(node.id);
  std::vector<std::set<int>> preds(n), golds(n);
  size_t exact = 0, slots_right = 0, slots_total = 0;
  for (size_t i = 0; i < n; ++i) {
    preds[i] = {pred_paths[i].begin(), pred_paths[i].end()};
    golds[i] = {gold_paths[i].begin(), gold_paths[i].end()};
    if (pred_paths[i] == gold_paths[i]) ++exact;
    const size_t L = std::min(pred_paths[i].size(), gold_paths[i].size());
    for (size_t k = 0; k < L; ++k)
      if (pred_paths[i][k] == gold_paths[i][k]) ++slots_right;
    slots_total += gold_paths[i].size();
  }
  report.exact_match_accuracy = n == 0 ? 0.0 : static_cast<double>(exact) / static_cast<double>(n);
  report.label_slot_accuracy =
      slots_total == 0 ? 0.0 : static_cast<double>(slots_right) / static_cast<double>(slots_total);
  report.combined_counts = confusion(preds, golds, all_labels);
  report.micro = micro_f1(report.combined_counts);
  report.macro = macro_f1(report.combined_counts);

  for (int level = 1; level <= taxonomy.levels; ++level) {
    LevelReport lr;
    lr.level = level;
    std::vector<std::set<int>> lp(n), lg(n);
    size_t right = 0;
    for (size_t i = 0; i < n; ++i) {
      if (static_cast<int>(pred_paths[i].size()) >= level) lp[i] = {pred_paths[i][level - 1]};
      if (static_cast<int>(gold_paths[i].size()) >= level) lg[i] = {gold_paths[i][level - 1]};
      if (!lp[i].empty() && lp[i] == lg[i]) ++right;
    }
    const auto counts = confusion(lp, lg, taxonomy.level_ids(level));
    lr.micro = micro_f1(counts);
    lr.macro = macro_f1(counts);
    lr.accuracy = n == 0 ? 0.0 : static_cast<double>(right) / static_cast<double>(n);
    report.levels.push_back(std::move(lr));
  }
  return report;
}

// Full-structure JSON report. Precision/Recall at the top level are the
// macro averages; micro P/R live under "micro".
inline nlohmann::json to_json(const MetricsReport& r, const corpus::Taxonomy& taxonomy) {
  nlohmann::json j;
  j["accuracy_exact_match"] = r.exact_match_accuracy;
  j["accuracy_label_slot"] = r.label_slot_accuracy;
  j["precision"] = r.macro.precision;
  j["recall"] = r.macro.recall;
  j["macro_f1"] = r.macro.f1;
  j["micro_f1"] = r.micro.f1;
  j["micro"] = {{"precision", r.micro.precision}, {"recall", r.micro.recall}, {"f1", r.micro.f1}};
  nlohmann::json per_label = nlohmann::json::array();
  for (size_t k = 0; k < r.combined_counts.labels.size(); ++k) {
    const int id = r.combined_counts.labels[k];
    per_label.push_back({{"label", taxonomy.find(id)->name},
                         {"tp", r.combined_counts.tp.at(id)},
                         {"fp", r.combined_counts.fp.at(id)},
                         {"fn", r.combined_counts.fn.at(id)},
                         {"f1", r.macro.per_label_f1[k]}});
  }
  j["per_label"] = per_label;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& lr : r.levels) {
    levels.push_back({{"level", lr.level},
                      {"accuracy", lr.accuracy},
                      {"precision", lr.macro.precision},
                      {"recall", lr.macro.recall},
                      {"macro_f1", lr.macro.f1},
                      {"micro_f1", lr.micro.f1}});
  }
  j["per_level"] = levels;
  return j;
}

inline std::string csv_header() {
  return "method,classes,accuracy,precision,recall,macro_f1,micro_f1";
}

inline std::string to_csv_row(const std::string& method, const MetricsReport& r,
                              const corpus::Taxonomy& taxonomy) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.4f,%.4f,%.4f,%.4f,%.4f", method.c_str(),
                taxonomy.nodes.size(), r.exact_match_accuracy, r.macro.precision,
                r.macro.recall, r.macro.f1, r.micro.f1);
  return buf;
}

}  // namespace hiertext::eval
