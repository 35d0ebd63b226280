#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hiertext/utf8.hpp"

namespace hiertext::corpus {

inline constexpr int kRoot = -1;

struct TaxNode {
  int id = 0;
  std::string name;
  int parent = kRoot;  // kRoot for top-level categories
  int level = 1;       // 1-based; root itself is not stored
};

struct Taxonomy {
  std::vector<TaxNode> nodes;
  int levels = 0;

  const TaxNode* find(int id) const {
    for (const auto& n : nodes)
      if (n.id == id) return &n;
    return nullptr;
  }

  int find_by_name(int level, const std::string& name) const {
    for (const auto& n : nodes)
      if (n.level == level && n.name == name) return n.id;
    return kRoot;
  }

  int parent_of(int id) const {
    const auto* n = find(id);
    return n ? n->parent : kRoot;
  }

  // Ids at a level, ascending. Position in this list is the class index
  // used by model heads and one-hot label rows.
  std::vector<int> level_ids(int level) const {
    std::vector<int> ids;
    for (const auto& n : nodes)
      if (n.level == level) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  int class_index(int id) const {
    const auto* n = find(id);
    if (!n) return -1;
    const auto ids = level_ids(n->level);
    const auto it = std::find(ids.begin(), ids.end(), id);
    return static_cast<int>(it - ids.begin());
  }

  std::vector<int> children_of(int id) const {
    std::vector<int> out;
    for (const auto& n : nodes)
      if (n.parent == id) out.push_back(n.id);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Root-to-node path of ids (one per level).
  std::vector<int> path_to(int id) const {
    std::vector<int> path;
    int cur = id;
    while (cur != kRoot) {
      path.push_back(cur);
      cur = parent_of(cur);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  // Internal nodes = root plus every node with children.
  std::vector<int> internal_ids() const {
    std::vector<int> out{kRoot};
    for (const auto& n : nodes)
      if (!children_of(n.id).empty()) out.push_back(n.id);
    std::sort(out.begin() + 1, out.end());
    return out;
  }
};

struct Document {
  std::string id;
  std::string text;
  std::vector<int> gold;  // one label id per level, root-to-leaf
};

struct Dataset {
  std::vector<Document> documents;
  Taxonomy taxonomy;
};

inline std::vector<std::string> validate_taxonomy(const Taxonomy& tax) {
  std::vector<std::string> violations;
  std::unordered_map<int, const TaxNode*> by_id;
  for (const auto& n : tax.nodes) {
    if (by_id.count(n.id)) {
      violations.push_back("not a tree: duplicate node id " + std::to_string(n.id));
      continue;
    }
    by_id[n.id] = &n;
  }
  for (const auto& n : tax.nodes) {
    if (n.parent == kRoot) {
      if (n.level != 1)
        violations.push_back("top-level node '" + n.name + "' has level " +
                             std::to_string(n.level) + ", expected 1");
    } else {
      auto it = by_id.find(n.parent);
      if (it == by_id.end()) {
        violations.push_back("node '" + n.name + "' has unknown parent id " +
                             std::to_string(n.parent));
      } else if (n.level != it->second->level + 1) {
        violations.push_back("node '" + n.name + "' level " +
                             std::to_string(n.level) + " != parent level + 1");
      }
    }
  }
  // cycle check via parent walk with step bound
  for (const auto& n : tax.nodes) {
    int cur = n.parent;
    size_t steps = 0;
    while (cur != kRoot && steps <= tax.nodes.size()) {
      auto it = by_id.find(cur);
      if (it == by_id.end()) break;
      cur = it->second->parent;
      ++steps;
    }
    if (steps > tax.nodes.size()) {
      violations.push_back("not a tree: cycle through node id " + std::to_string(n.id));
      break;
    }
  }
  // duplicate names within a level
  std::map<std::pair<int, std::string>, int> name_seen;
  for (const auto& n : tax.nodes) {
    if (++name_seen[{n.level, n.name}] == 2)
      violations.push_back("duplicate name '" + n.name + "' at level " +
                           std::to_string(n.level));
  }
  // uniform leaf depth
  int max_level = 0;
  for (const auto& n : tax.nodes) max_level = std::max(max_level, n.level);
  for (const auto& n : tax.nodes) {
    bool has_child = false;
    for (const auto& m : tax.nodes)
      if (m.parent == n.id) {
        has_child = true;
        break;
      }
    if (!has_child && n.level != max_level)
      violations.push_back("uneven leaf depth: leaf '" + n.name + "' at level " +
                           std::to_string(n.level) + " while depth is " +
                           std::to_string(max_level));
  }
  if (max_level != tax.levels && !tax.nodes.empty())
    violations.push_back("declared levels " + std::to_string(tax.levels) +
                         " != observed depth " + std::to_string(max_level));
  return violations;
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// Resolve a gold path of display names against a taxonomy, growing it when
// allowed. Throws on unknown labels (frozen taxonomy) or parent conflicts.
inline std::vector<int> resolve_path(Taxonomy& tax, const std::vector<std::string>& names,
                                     bool grow, size_t line_no) {
  std::vector<int> path;
  int parent = kRoot;
  for (size_t level = 1; level <= names.size(); ++level) {
    const auto& name = names[level - 1];
    if (name.empty())
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": empty label at level " + std::to_string(level));
    int id = tax.find_by_name(static_cast<int>(level), name);
    if (id == kRoot) {
      if (!grow)
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": unknown label '" + name + "'");
      id = tax.nodes.empty() ? 0 : tax.nodes.back().id + 1;
      tax.nodes.push_back({id, name, parent, static_cast<int>(level)});
      tax.levels = std::max(tax.levels, static_cast<int>(level));
    } else if (tax.parent_of(id) != parent) {
      const auto* p = tax.find(tax.parent_of(id));
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": inconsistent path: '" + name + "' belongs under '" +
                               (p ? p->name : "<root>") + "'");
    }
    path.push_back(id);
    parent = id;
  }
  return path;
}

}  // namespace detail

enum class Format { Tsv, Jsonl };

// TSV: header row naming id, text, then one column per level (category,
// subcategory, ...). JSONL: one object per line with the same keys.
// When `expected` is given the taxonomy is frozen and labels must match it;
// otherwise the taxonomy is inferred from the rows.
inline Dataset load_dataset(const std::string& path, Format format,
                            const Taxonomy* expected = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  Dataset ds;
  if (expected) ds.taxonomy = *expected;
  const bool grow = expected == nullptr;

  std::string line;
  size_t line_no = 0;
  if (format == Format::Tsv) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": no documents");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_line(line, '\t');
    if (header.size() < 3 || header[0] != "id" || header[1] != "text")
      throw std::runtime_error(path + ": header must be id, text, <level columns>");
    const size_t levels = header.size() - 2;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto cells = detail::split_line(line, '\t');
      if (cells.size() != header.size())
        throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(header.size()) + " columns, got " +
                                 std::to_string(cells.size()));
      std::vector<std::string> names(cells.begin() + 2, cells.end());
      auto gold = detail::resolve_path(ds.taxonomy, names, grow, line_no);
      ds.documents.push_back({cells[0], cells[1], std::move(gold)});
    }
    if (!grow && ds.taxonomy.levels != static_cast<int>(levels))
      throw std::runtime_error(path + ": column count does not match taxonomy depth");
  } else {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": malformed JSON: " + e.what());
      }
      if (!obj.contains("text"))
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing 'text'");
      std::vector<std::string> names;
      for (const char* key : {"category", "subcategory"})
        if (obj.contains(key)) names.push_back(obj[key].get<std::string>());
      int extra = 3;
      while (obj.contains("level" + std::to_string(extra)))
        names.push_back(obj["level" + std::to_string(extra++)].get<std::string>());
      if (names.empty())
        throw std::runtime_error("line " + std::to_string(line_no) + ": no label keys");
      auto gold = detail::resolve_path(ds.taxonomy, names, grow, line_no);
      std::string id = obj.contains("id") ? obj["id"].get<std::string>()
                                          : "doc-" + std::to_string(line_no);
      ds.documents.push_back({std::move(id), obj["text"].get<std::string>(), std::move(gold)});
    }
  }
  if (ds.documents.empty()) throw std::runtime_error(path + ": no documents");
  return ds;
}

inline void save_dataset_tsv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out << "id\ttext";
  static const char* kLevelNames[] = {"category", "subcategory"};
  for (int l = 1; l <= ds.taxonomy.levels; ++l) {
    if (l <= 2)
      out << '\t' << kLevelNames[l - 1];
    else
      out << "\tlevel" << l;
  }
  out << '\n';
  for (const auto& doc : ds.documents) {
    std::string text = doc.text;
    for (auto& c : text)
      if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    out << doc.id << '\t' << text;
    for (int id : doc.gold) out << '\t' << ds.taxonomy.find(id)->name;
    out << '\n';
  }
}

// Seeded uniform shuffle, then prefix = test, suffix = train.
// Test size is round(n * fraction).
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                         uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must be in (0, 1)");
  const size_t n = ds.documents.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto test_n = static_cast<size_t>(std::llround(static_cast<double>(n) * test_fraction));
  Dataset test{{}, ds.taxonomy}, train{{}, ds.taxonomy};
  for (size_t i = 0; i < n; ++i)
    (i < test_n ? test : train).documents.push_back(ds.documents[idx[i]]);
  return {std::move(train), std::move(test)};
}

struct SyntheticSpec {
  std::vector<int> branching = {3, 3};  // children per node, per level
  int docs_per_leaf = 50;
  int vocab_per_leaf = 20;
  int shared_vocab = 10;
  int doc_length = 30;
  double noise_rate = 0.0;
};

namespace detail {

// Tokens are spelled with Arabic letters so synthetic corpora survive the
// preprocessing whitelist unchanged.
inline std::string arabic_number(int v) {
  static const char32_t kDigits[] = {0x0627, 0x0628, 0x062A, 0x062B, 0x062C,
                                     0x062D, 0x062E, 0x062F, 0x0630, 0x0631};
  std::string out;
  std::string dec = std::to_string(v);
  for (char d : dec) utf8::append(out, kDigits[d - '0']);
  return out;
}

inline std::string sig_token(int leaf, int j) {
  std::string out;
  utf8::append(out, 0x0642);  // qaf marks signature tokens
  out += arabic_number(leaf);
  utf8::append(out, 0x0648);
  out += arabic_number(j);
  return out;
}

inline std::string shared_token(int j) {
  std::string out;
  utf8::append(out, 0x0634);  // sheen marks shared tokens
  out += arabic_number(j);
  return out;
}

}  // namespace detail

inline void validate_spec(const SyntheticSpec& spec) {
  if (spec.branching.empty()) throw std::invalid_argument("branching must be non-empty");
  for (int b : spec.branching)
    if (b < 1) throw std::invalid_argument("branching counts must be >= 1");
  if (spec.docs_per_leaf < 1 || spec.vocab_per_leaf < 1 || spec.doc_length < 1)
    throw std::invalid_argument("counts must be >= 1");
  if (spec.shared_vocab < 0) throw std::invalid_argument("shared_vocab must be >= 0");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0))
    throw std::invalid_argument("noise_rate must be in [0, 1]");
}

// Each leaf owns a disjoint signature vocabulary; a document samples
// doc_length tokens uniformly from signature ∪ shared, flipping each draw
// to a uniformly random other leaf's signature with probability noise_rate.
inline Dataset gen_synthetic(const SyntheticSpec& spec, uint64_t seed) {
  validate_spec(spec);
  Dataset ds;
  ds.taxonomy.levels = static_cast<int>(spec.branching.size());
  // breadth-first construction, level by level
  std::vector<int> prev_level{kRoot};
  int next_id = 0;
  for (size_t l = 0; l < spec.branching.size(); ++l) {
    std::vector<int> cur;
    for (int parent : prev_level) {
      for (int b = 0; b < spec.branching[l]; ++b) {
        std::string name = (parent == kRoot)
                               ? "cat" + std::to_string(b + 1)
                               : ds.taxonomy.find(parent)->name + "-sub" + std::to_string(b + 1);
        ds.taxonomy.nodes.push_back({next_id, name, parent, static_cast<int>(l + 1)});
        cur.push_back(next_id++);
      }
    }
    prev_level = std::move(cur);
  }
  const std::vector<int> leaves = prev_level;
  const int n_leaves = static_cast<int>(leaves.size());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_source(0, spec.vocab_per_leaf + spec.shared_vocab - 1);
  std::uniform_int_distribution<int> pick_sig(0, spec.vocab_per_leaf - 1);

  int doc_no = 0;
  for (int li = 0; li < n_leaves; ++li) {
    const auto path = ds.taxonomy.path_to(leaves[li]);
    for (int d = 0; d < spec.docs_per_leaf; ++d) {
      std::string text;
      for (int t = 0; t < spec.doc_length; ++t) {
        std::string tok;
        if (spec.noise_rate > 0.0 && n_leaves > 1 && unit(rng) < spec.noise_rate) {
          int other = static_cast<int>(rng() % static_cast<uint64_t>(n_leaves - 1));
          if (other >= li) ++other;
          tok = detail::sig_token(other, pick_sig(rng));
        } else {
          const int s = pick_source(rng);
          tok = s < spec.vocab_per_leaf ? detail::sig_token(li, s)
                                        : detail::shared_token(s - spec.vocab_per_leaf);
        }
        if (!text.empty()) text.push_back(' ');
        text += tok;
      }
      char buf[16];
      std::snprintf(buf, sizeof buf, "doc-%06d", ++doc_no);
      ds.documents.push_back({buf, std::move(text), path});
    }
  }
  return ds;
}

}  // namespace hiertext::corpus
