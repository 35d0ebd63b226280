#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hiertext/baselines.hpp"
#include "hiertext/config.hpp"
#include "hiertext/corpus.hpp"
#include "hiertext/embedding.hpp"
#include "hiertext/eval.hpp"
#include "hiertext/hmlstm.hpp"
#include "hiertext/preprocess.hpp"
#include "hiertext/strategies.hpp"

namespace hiertext::cli {

using config::ConfigError;

inline const std::map<std::string, std::set<std::string>> kSchema = {
    {"train", {"model", "seed", "features", "level-mode"}},
    {"preprocess", {"stopwords", "remove-stopwords"}},
    {"embedding", {"dim", "window", "min-count", "negatives", "epochs", "lr", "subsample"}},
    {"hmlstm",
     {"hidden", "max-seq-len", "batch", "dropout", "lr", "epochs", "patience",
      "validation-fraction", "consistency"}},
    {"logreg", {"l2", "epochs", "lr", "batch"}},
    {"svm", {"c", "epochs", "lr", "batch"}},
    {"knn", {"k"}},
};

namespace detail {

// Relative paths fall back to $HIERTEXT_DATA_DIR when they do not resolve
// from the working directory.
inline std::string resolve_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* dir = std::getenv("HIERTEXT_DATA_DIR")) {
    const auto candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

inline corpus::Format parse_format(const std::string& s) {
  if (s == "tsv") return corpus::Format::Tsv;
  if (s == "jsonl") return corpus::Format::Jsonl;
  throw ConfigError("unknown format '" + s + "' (expected tsv or jsonl)");
}

struct StopwordOpts {
  std::string path;
  bool disabled = false;
  preprocess::StopwordList list;

  preprocess::Options options() {
    preprocess::Options opts;
    if (!disabled && !path.empty()) {
      list = preprocess::load_stopwords(resolve_path(path));
      opts.stopwords = &list;
    }
    opts.remove_stopwords = !disabled;
    return opts;
  }
};

inline std::vector<int> parse_branching(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(std::stoi(part));
  return out;
}

inline hmlstm::Config hmlstm_config(const config::Config& cfg, uint64_t seed) {
  hmlstm::Config c;
  c.hidden = cfg.get_num("hmlstm", "hidden", c.hidden);
  c.max_seq_len = cfg.get_num("hmlstm", "max-seq-len", c.max_seq_len);
  c.batch = cfg.get_num("hmlstm", "batch", c.batch);
  c.dropout = cfg.get_num("hmlstm", "dropout", c.dropout);
  c.lr = cfg.get_num("hmlstm", "lr", c.lr);
  c.epochs = cfg.get_num("hmlstm", "epochs", c.epochs);
  c.patience = cfg.get_num("hmlstm", "patience", c.patience);
  c.validation_fraction = cfg.get_num("hmlstm", "validation-fraction", c.validation_fraction);
  const std::string mode = cfg.get("hmlstm", "consistency", "mask");
  if (mode == "mask")
    c.consistency = hmlstm::ConsistencyMode::Mask;
  else if (mode == "argmax-free")
    c.consistency = hmlstm::ConsistencyMode::ArgmaxFree;
  else
    throw ConfigError("[hmlstm] consistency: expected mask or argmax-free");
  c.seed = seed;
  return c;
}

inline baselines::LearnerFactory learner_factory(const std::string& name,
                                                 const config::Config& cfg, uint64_t seed) {
  if (name == "nb") {
    return [] { return std::make_unique<baselines::GaussianNb>(); };
  }
  if (name == "logreg") {
    baselines::LogRegOvr::Params p;
    p.l2 = cfg.get_num("logreg", "l2", p.l2);
    p.epochs = cfg.get_num("logreg", "epochs", p.epochs);
    p.lr = cfg.get_num("logreg", "lr", p.lr);
    p.batch = cfg.get_num("logreg", "batch", p.batch);
    p.seed = seed;
    return [p] { return std::make_unique<baselines::LogRegOvr>(p); };
  }
  if (name == "svm") {
    baselines::LinearSvmOvr::Params p;
    p.c = cfg.get_num("svm", "c", p.c);
    p.epochs = cfg.get_num("svm", "epochs", p.epochs);
    p.lr = cfg.get_num("svm", "lr", p.lr);
    p.batch = cfg.get_num("svm", "batch", p.batch);
    p.seed = seed;
    return [p] { return std::make_unique<baselines::LinearSvmOvr>(p); };
  }
  if (name == "knn") {
    const int k = cfg.get_num("knn", "k", 3);
    return [k] { return std::make_unique<baselines::Knn>(k); };
  }
  throw ConfigError("unknown learner '" + name + "' (expected nb, logreg, svm or knn)");
}

inline strategies::Strategy parse_strategy(const std::string& name) {
  if (name == "flat") return strategies::Strategy::Flat;
  if (name == "global") return strategies::Strategy::Global;
  if (name == "per-node") return strategies::Strategy::LocalPerNode;
  if (name == "per-parent") return strategies::Strategy::LocalPerParent;
  if (name == "per-level") return strategies::Strategy::LocalPerLevel;
  throw ConfigError("unknown strategy '" + name + "'");
}

inline neuralcore::Vec bow_vector(const embedding::Vocabulary& vocab,
                                  const std::vector<std::string>& tokens) {
  neuralcore::Vec v = neuralcore::Vec::Zero(vocab.size());
  for (const auto& tok : tokens) v(vocab.lookup(tok)) = 1.0;
  return v;
}

inline std::vector<neuralcore::Vec> featurize(const corpus::Dataset& ds,
                                              const embedding::Vocabulary& vocab,
                                              const embedding::Matrix& matrix,
                                              const preprocess::Options& opts,
                                              const std::string& features) {
  std::vector<neuralcore::Vec> X;
  X.reserve(ds.documents.size());
  for (const auto& doc : ds.documents) {
    const auto tokens = preprocess::preprocess_text(doc.text, opts);
    if (features == "bow")
      X.push_back(bow_vector(vocab, tokens));
    else
      X.push_back(embedding::doc_vector(vocab, matrix, tokens));
  }
  return X;
}

inline uint32_t sniff_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return binio::read_u32(in);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct PreprocessCmd {
  std::string input, output, format = "tsv";
  detail::StopwordOpts stop;

  int execute() {
    const auto ds =
        corpus::load_dataset(detail::resolve_path(input), detail::parse_format(format));
    const auto opts = stop.options();
    corpus::Dataset out = ds;
    size_t total_tokens = 0;
    for (auto& doc : out.documents) {
      const auto tokens = preprocess::preprocess_text(doc.text, opts);
      total_tokens += tokens.size();
      std::string joined;
      for (const auto& t : tokens) {
        if (!joined.empty()) joined.push_back(' ');
        joined += t;
      }
      doc.text = std::move(joined);
    }
    corpus::save_dataset_tsv(out, output);
    std::cout << "documents=" << out.documents.size() << " tokens=" << total_tokens << '\n';
    return 0;
  }
};

struct GenSyntheticCmd {
  std::string output;
  std::string branching = "3,3";
  corpus::SyntheticSpec spec;
  uint64_t seed = 1;

  int execute() {
    spec.branching = detail::parse_branching(branching);
    const auto ds = corpus::gen_synthetic(spec, seed);
    corpus::save_dataset_tsv(ds, output);
    std::cout << "documents=" << ds.documents.size()
              << " labels=" << ds.taxonomy.nodes.size()
              << " levels=" << ds.taxonomy.levels << '\n';
    return 0;
  }
};

struct TrainEmbeddingsCmd {
  std::string input, output, text_output, config_path, format = "tsv";
  detail::StopwordOpts stop;
  uint64_t seed = 1;
  bool seed_set = false;

  int execute() {
    config::Config cfg;
    if (!config_path.empty()) {
      cfg = config::load_config(detail::resolve_path(config_path));
      config::validate_schema(cfg, kSchema);
    }
    if (!seed_set) seed = cfg.get_num<uint64_t>("train", "seed", seed);
    const auto ds =
        corpus::load_dataset(detail::resolve_path(input), detail::parse_format(format));
    if (stop.path.empty()) stop.path = cfg.get("preprocess", "stopwords", "");
    const auto opts = stop.options();
    std::vector<std::vector<std::string>> corpus_tokens;
    for (const auto& doc : ds.documents)
      corpus_tokens.push_back(preprocess::preprocess_text(doc.text, opts));
    embedding::CbowParams params;
    params.dim = cfg.get_num("embedding", "dim", params.dim);
    params.window = cfg.get_num("embedding", "window", params.window);
    params.min_count = cfg.get_num("embedding", "min-count", params.min_count);
    params.negatives = cfg.get_num("embedding", "negatives", params.negatives);
    params.epochs = cfg.get_num("embedding", "epochs", params.epochs);
    params.initial_lr = cfg.get_num("embedding", "lr", params.initial_lr);
    params.subsample = cfg.get_num("embedding", "subsample", params.subsample);
    params.seed = seed;
    const auto vocab = embedding::build_vocab(corpus_tokens, params.min_count);
    const auto result = embedding::train_cbow(corpus_tokens, vocab, params);
    embedding::save_embeddings(vocab, result.matrix, output);
    if (!text_output.empty())
      embedding::save_embeddings_text(vocab, result.matrix, text_output);
    std::cout << "vocab=" << vocab.size() << " dim=" << params.dim;
    if (!result.epoch_loss.empty())
      std::cout << " final_loss=" << result.epoch_loss.back();
    std::cout << '\n';
    return 0;
  }
};

struct TrainCmd {
  std::string model, config_path, data, embeddings, out, history, format = "tsv";
  detail::StopwordOpts stop;
  uint64_t seed = 0;
  bool seed_set = false;

  int execute() {
    config::Config cfg;
    if (!config_path.empty()) {
      cfg = config::load_config(detail::resolve_path(config_path));
      config::validate_schema(cfg, kSchema);
    }
    if (model.empty()) model = cfg.get("train", "model", "hmlstm");
    if (!seed_set) seed = cfg.get_num<uint64_t>("train", "seed", 1);
    if (stop.path.empty()) stop.path = cfg.get("preprocess", "stopwords", "");
    const std::string data_path = detail::resolve_path(data);
    if (!std::filesystem::exists(data_path))
      throw std::runtime_error("data file not found: " + data);
    const auto ds = corpus::load_dataset(data_path, detail::parse_format(format));
    auto [vocab, matrix] = embedding::load_embeddings(detail::resolve_path(embeddings));
    const auto opts = stop.options();

    std::cout << "model = " << model << '\n' << "seed = " << seed << '\n';

    if (model == "hmlstm") {
      const auto mcfg = detail::hmlstm_config(cfg, seed);
      std::cout << "hidden = " << mcfg.hidden << '\n'
                << "max-seq-len = " << mcfg.max_seq_len << '\n'
                << "batch = " << mcfg.batch << '\n'
                << "dropout = " << mcfg.dropout << '\n'
                << "lr = " << mcfg.lr << '\n'
                << "epochs = " << mcfg.epochs << '\n';
      auto m = hmlstm::build_model(ds.taxonomy, vocab, matrix, mcfg);
      const auto encoded = hmlstm::encode_dataset(ds, vocab, opts, mcfg.max_seq_len);
      const auto hist = hmlstm::train(m, encoded);
      hmlstm::save_checkpoint(m, out);
      if (!history.empty()) {
        std::ofstream h(history);
        if (!h) throw std::runtime_error("cannot write history: " + history);
        h << "epoch,train_loss,train_acc,val_loss,val_acc\n";
        for (const auto& e : hist)
          h << e.epoch << ',' << e.train_loss << ',' << e.train_acc << ',' << e.val_loss
            << ',' << e.val_acc << '\n';
      }
      std::cout << "checkpoint = " << out << " epochs_run = " << hist.size() << '\n';
      return 0;
    }

    const auto colon = model.find(':');
    if (colon == std::string::npos)
      throw ConfigError("model must be hmlstm or <strategy>:<learner>, got '" + model + "'");
    const auto strategy = detail::parse_strategy(model.substr(0, colon));
    const auto factory = detail::learner_factory(model.substr(colon + 1), cfg, seed);
    const std::string features = cfg.get("train", "features", "mean-embedding");
    if (features != "mean-embedding" && features != "bow")
      throw ConfigError("[train] features: expected mean-embedding or bow");
    std::cout << "features = " << features << '\n';
    const auto X = detail::featurize(ds, vocab, matrix, opts, features);
    std::vector<std::vector<int>> golds;
    for (const auto& doc : ds.documents) golds.push_back(doc.gold);
    auto clf = strategies::train_hier(strategy, factory, X, golds, ds.taxonomy);
    clf.features = features;
    const std::string level_mode = cfg.get("train", "level-mode", "argmax-free");
    if (level_mode == "mask")
      clf.level_mode = strategies::LevelMode::Mask;
    else if (level_mode == "argmax-free")
      clf.level_mode = strategies::LevelMode::ArgmaxFree;
    else
      throw ConfigError("[train] level-mode: expected mask or argmax-free");
    strategies::save_classifier(clf, out);
    if (!history.empty()) {
      std::ofstream h(history);
      h << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    }
    std::cout << "checkpoint = " << out << '\n';
    return 0;
  }
};

struct EvaluateCmd {
  std::vector<std::string> checkpoints;
  std::string data, embeddings, out_json, out_csv, mode = "mask", format = "tsv";
  detail::StopwordOpts stop;

  int execute() {
    auto [vocab, matrix] = embedding::load_embeddings(detail::resolve_path(embeddings));
    const auto opts = stop.options();
    const std::string data_path = detail::resolve_path(data);
    nlohmann::json all_reports = nlohmann::json::object();
    std::vector<std::string> csv_rows;
    corpus::Taxonomy report_tax;

    for (const auto& ckpt_path : checkpoints) {
      const std::string path = detail::resolve_path(ckpt_path);
      const std::string name = std::filesystem::path(path).stem().string();
      const uint32_t magic = detail::sniff_magic(path);
      std::vector<std::vector<int>> preds, golds;
      corpus::Taxonomy tax;
      if (magic == hmlstm::ckpt::kMagic) {
        auto m = hmlstm::load_checkpoint(path, vocab, matrix);
        tax = m.taxonomy;
        const auto ds = corpus::load_dataset(data_path, detail::parse_format(format), &tax);
        const auto pmode = mode == "argmax-free" ? hmlstm::ConsistencyMode::ArgmaxFree
                                                 : hmlstm::ConsistencyMode::Mask;
        for (const auto& doc : ds.documents) {
          const auto p = hmlstm::predict_text(m, doc.text, opts, pmode);
          preds.push_back({p.label1, p.label2});
          golds.push_back(doc.gold);
        }
      } else {
        const auto clf = strategies::load_classifier(path);
        tax = clf.taxonomy;
        const auto ds = corpus::load_dataset(data_path, detail::parse_format(format), &tax);
        const auto X = detail::featurize(ds, vocab, matrix, opts, clf.features);
        for (size_t i = 0; i < X.size(); ++i) {
          preds.push_back(strategies::predict_hier(clf, X[i]));
          golds.push_back(ds.documents[i].gold);
        }
      }
      const auto report = eval::evaluate(preds, golds, tax);
      all_reports[name] = eval::to_json(report, tax);
      csv_rows.push_back(eval::to_csv_row(name, report, tax));
      report_tax = tax;
    }

    std::cout << eval::csv_header() << '\n';
    for (const auto& row : csv_rows) std::cout << row << '\n';
    if (!out_csv.empty()) {
      std::ofstream c(out_csv);
      if (!c) throw std::runtime_error("cannot write csv: " + out_csv);
      c << eval::csv_header() << '\n';
      for (const auto& row : csv_rows) c << row << '\n';
    }
    if (!out_json.empty()) {
      std::ofstream j(out_json);
      if (!j) throw std::runtime_error("cannot write json: " + out_json);
      j << all_reports.dump(2) << '\n';
    }
    return 0;
  }
};

struct PredictCmd {
  std::string checkpoint, embeddings, text, input, output, mode = "mask";
  detail::StopwordOpts stop;

  int execute() {
    auto [vocab, matrix] = embedding::load_embeddings(detail::resolve_path(embeddings));
    const auto opts = stop.options();
    const std::string path = detail::resolve_path(checkpoint);
    const uint32_t magic = detail::sniff_magic(path);

    std::vector<std::string> texts;
    if (!text.empty()) {
      texts.push_back(text);
    } else if (!input.empty()) {
      std::ifstream in(detail::resolve_path(input));
      if (!in) throw std::runtime_error("cannot open input: " + input);
      std::string line;
      while (std::getline(in, line)) texts.push_back(line);
    } else {
      throw ConfigError("predict requires --text or --input");
    }

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!output.empty()) {
      file.open(output);
      if (!file) throw std::runtime_error("cannot write output: " + output);
      out = &file;
    }

    if (magic == hmlstm::ckpt::kMagic) {
      auto m = hmlstm::load_checkpoint(path, vocab, matrix);
      const auto pmode = mode == "argmax-free" ? hmlstm::ConsistencyMode::ArgmaxFree
                                               : hmlstm::ConsistencyMode::Mask;
      for (const auto& t : texts) {
        const auto p = hmlstm::predict_text(m, t, opts, pmode);
        nlohmann::json j;
        j["category"] = m.taxonomy.find(p.label1)->name;
        j["subcategory"] = m.taxonomy.find(p.label2)->name;
        j["consistency_enforced"] = p.consistency_enforced;
        nlohmann::json p1 = nlohmann::json::object(), p2 = nlohmann::json::object();
        for (int k = 0; k < m.n_level1(); ++k)
          p1[m.taxonomy.find(m.level1_ids[k])->name] = p.p1(k);
        for (int k = 0; k < m.n_level2(); ++k)
          p2[m.taxonomy.find(m.level2_ids[k])->name] = p.p2(k);
        j["level1_probs"] = p1;
        j["level2_probs"] = p2;
        *out << j.dump() << '\n';
      }
    } else {
      const auto clf = strategies::load_classifier(path);
      for (const auto& t : texts) {
        const auto tokens = preprocess::preprocess_text(t, opts);
        const auto x = clf.features == "bow" ? detail::bow_vector(vocab, tokens)
                                             : embedding::doc_vector(vocab, matrix, tokens);
        const auto p = strategies::predict_hier(clf, x);
        nlohmann::json j = nlohmann::json::object();
        nlohmann::json labels = nlohmann::json::array();
        for (int id : p) labels.push_back(clf.taxonomy.find(id)->name);
        j["path"] = labels;
        *out << j.dump() << '\n';
      }
    }
    return 0;
  }
};

struct GradCheckCmd {
  int docs = 3, tokens = 8, hidden = 8, dim = 8;
  uint64_t seed = 1;
  double eps = 1e-3, threshold = 1e-4;

  int execute() {
    corpus::SyntheticSpec spec;
    spec.branching = {3, 3};
    spec.docs_per_leaf = 1;
    spec.vocab_per_leaf = 4;
    spec.shared_vocab = 2;
    spec.doc_length = tokens;
    const auto ds = corpus::gen_synthetic(spec, seed);

    std::vector<std::vector<std::string>> corpus_tokens;
    for (const auto& doc : ds.documents)
      corpus_tokens.push_back(preprocess::tokenize(doc.text));
    const auto vocab = embedding::build_vocab(corpus_tokens, 1);
    embedding::CbowParams ep;
    ep.dim = dim;
    ep.epochs = 0;
    ep.seed = seed;
    const auto emb = embedding::train_cbow(corpus_tokens, vocab, ep);

    hmlstm::Config cfg;
    cfg.hidden = hidden;
    cfg.max_seq_len = tokens;
    cfg.dropout = 0.0;
    cfg.seed = seed;
    auto m = hmlstm::build_model(ds.taxonomy, vocab, emb.matrix, cfg);
    // keep head pre-activations away from the ReLU kink, where central
    // differences measure the subgradient poorly
    for (auto* b : {&m.head1_b, &m.head2_b})
      for (Eigen::Index i = 0; i < b->size(); ++i) (*b)(i) = i % 2 ? -0.3 : 0.3;
    auto encoded = hmlstm::encode_dataset(ds, vocab, {}, tokens);
    encoded.resize(std::min<size_t>(encoded.size(), static_cast<size_t>(docs)));

    const auto [loss, grads] = hmlstm::loss_and_grads(m, encoded);
    auto loss_fn = [&]() { return hmlstm::loss_and_grads(m, encoded).first; };
    const double max_rel =
        neuralcore::grad_check(loss_fn, hmlstm::param_refs(m), grads.tensors, eps);
    std::cout << "loss=" << loss << " max_relative_error=" << max_rel << '\n';
    if (max_rel >= threshold) {
      std::cerr << "error[runtime]: gradient check failed (>= " << threshold << ")\n";
      return 1;
    }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline void add_stopword_flags(CLI::App* cmd, detail::StopwordOpts& stop) {
  cmd->add_option("--stopwords", stop.path, "Stopword file (one token per line)");
  cmd->add_flag("--no-stopwords", stop.disabled, "Disable stopword removal");
}

inline int run(std::vector<std::string> args) {
  CLI::App app{"Hierarchical text classification toolkit"};
  app.require_subcommand(1);

  PreprocessCmd pre;
  auto* c_pre = app.add_subcommand("preprocess", "Clean and tokenize a dataset");
  c_pre->add_option("--input", pre.input, "Input dataset")->required();
  c_pre->add_option("--format", pre.format, "tsv or jsonl");
  c_pre->add_option("--output", pre.output, "Tokenized TSV output")->required();
  add_stopword_flags(c_pre, pre.stop);

  GenSyntheticCmd gen;
  auto* c_gen = app.add_subcommand("gen-synthetic", "Generate a synthetic labeled corpus");
  c_gen->add_option("--output", gen.output, "Output TSV")->required();
  c_gen->add_option("--branching", gen.branching, "Children per level, e.g. 3,3");
  c_gen->add_option("--docs-per-leaf", gen.spec.docs_per_leaf, "");
  c_gen->add_option("--vocab-per-leaf", gen.spec.vocab_per_leaf, "");
  c_gen->add_option("--shared-vocab", gen.spec.shared_vocab, "");
  c_gen->add_option("--doc-length", gen.spec.doc_length, "");
  c_gen->add_option("--noise-rate", gen.spec.noise_rate, "");
  c_gen->add_option("--seed", gen.seed, "");

  TrainEmbeddingsCmd temb;
  auto* c_temb = app.add_subcommand("train-embeddings", "Train CBOW word vectors");
  c_temb->add_option("--input", temb.input, "Training dataset")->required();
  c_temb->add_option("--format", temb.format, "tsv or jsonl");
  c_temb->add_option("--output", temb.output, "Binary embeddings output")->required();
  c_temb->add_option("--text-output", temb.text_output, "Optional text-format output");
  c_temb->add_option("--config", temb.config_path, "Config file");
  c_temb->add_option("--seed", temb.seed, "");
  add_stopword_flags(c_temb, temb.stop);

  TrainCmd train;
  auto* c_train = app.add_subcommand("train", "Train a model");
  c_train->add_option("--model", train.model, "hmlstm or <strategy>:<learner>");
  c_train->add_option("--config", train.config_path, "Config file");
  c_train->add_option("--data", train.data, "Training dataset")->required();
  c_train->add_option("--format", train.format, "tsv or jsonl");
  c_train->add_option("--embeddings", train.embeddings, "Trained embeddings")->required();
  c_train->add_option("--out", train.out, "Checkpoint output")->required();
  c_train->add_option("--history", train.history, "Per-epoch history CSV");
  c_train->add_option("--seed", train.seed, "");
  add_stopword_flags(c_train, train.stop);

  EvaluateCmd evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Evaluate checkpoints on a test set");
  c_eval->add_option("--checkpoint", evaluate.checkpoints, "Checkpoint(s)")->required();
  c_eval->add_option("--data", evaluate.data, "Test dataset")->required();
  c_eval->add_option("--format", evaluate.format, "tsv or jsonl");
  c_eval->add_option("--embeddings", evaluate.embeddings, "Trained embeddings")->required();
  c_eval->add_option("--out-json", evaluate.out_json, "JSON report output");
  c_eval->add_option("--out-csv", evaluate.out_csv, "CSV report output");
  c_eval->add_option("--mode", evaluate.mode, "mask or argmax-free");
  add_stopword_flags(c_eval, evaluate.stop);

  PredictCmd predict;
  auto* c_pred = app.add_subcommand("predict", "Predict labels for text");
  c_pred->add_option("--checkpoint", predict.checkpoint, "Checkpoint")->required();
  c_pred->add_option("--embeddings", predict.embeddings, "Trained embeddings")->required();
  c_pred->add_option("--text", predict.text, "Single input text");
  c_pred->add_option("--input", predict.input, "File with one text per line");
  c_pred->add_option("--output", predict.output, "Output file (default stdout)");
  c_pred->add_option("--mode", predict.mode, "mask or argmax-free");
  add_stopword_flags(c_pred, predict.stop);

  GradCheckCmd gc;
  auto* c_gc = app.add_subcommand("grad-check", "Finite-difference gradient check");
  c_gc->add_option("--docs", gc.docs, "");
  c_gc->add_option("--tokens", gc.tokens, "");
  c_gc->add_option("--hidden", gc.hidden, "");
  c_gc->add_option("--dim", gc.dim, "");
  c_gc->add_option("--seed", gc.seed, "");
  c_gc->add_option("--eps", gc.eps, "");
  c_gc->add_option("--threshold", gc.threshold, "");

  // CLI11 wants argv in reverse order without the program name
  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error[usage]: " << e.what() << '\n';
    return 2;
  }

  temb.seed_set = c_temb->count("--seed") > 0;
  train.seed_set = c_train->count("--seed") > 0;

  try {
    if (*c_pre) return pre.execute();
    if (*c_gen) return gen.execute();
    if (*c_temb) return temb.execute();
    if (*c_train) return train.execute();
    if (*c_eval) return evaluate.execute();
    if (*c_pred) return predict.execute();
    if (*c_gc) return gc.execute();
  } catch (const ConfigError& e) {
    std::cerr << "error[config]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

inline int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv, argv + argc));
}

}  // namespace hiertext::cli
