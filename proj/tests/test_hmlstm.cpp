#include <catch2/catch_amalgamated.hpp>

#include "hiertext/corpus.hpp"
#include "hiertext/embedding.hpp"
#include "hiertext/hmlstm.hpp"
#include "helpers.hpp"

using namespace hiertext;
using neuralcore::Mat;
using neuralcore::Vec;

namespace {

struct Fixture {
  corpus::Dataset ds;
  embedding::Vocabulary vocab;
  embedding::Matrix matrix;
  std::vector<hmlstm::EncodedDoc> docs;

  explicit Fixture(corpus::SyntheticSpec spec = {{3, 3}, 4, 4, 2, 8, 0.0},
                   int dim = 6, uint64_t seed = 1) {
    ds = corpus::gen_synthetic(spec, seed);
    std::vector<std::vector<std::string>> corpus_tokens;
    for (const auto& doc : ds.documents)
      corpus_tokens.push_back(preprocess::tokenize(doc.text));
    vocab = embedding::build_vocab(corpus_tokens, 1);
    embedding::CbowParams params;
    params.dim = dim;
    params.epochs = 0;
    params.seed = seed;
    matrix = embedding::train_cbow(corpus_tokens, vocab, params).matrix;
    docs = hmlstm::encode_dataset(ds, vocab, {}, 16);
  }
};

hmlstm::Config tiny_config() {
  hmlstm::Config cfg;
  cfg.hidden = 6;
  cfg.max_seq_len = 16;
  cfg.batch = 8;
  cfg.dropout = 0.0;
  cfg.epochs = 2;
  cfg.seed = 7;
  return cfg;
}

void zero_params(hmlstm::Model& m) {
  for (auto& p : hmlstm::param_refs(m)) p.setZero();
}

}  // namespace

TEST_CASE("model heads match the taxonomy level widths") {
  Fixture fx;
  const auto m = [&] {
    auto model = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
    return model;
  }();
  REQUIRE(m.n_level1() == 3);
  REQUIRE(m.n_level2() == 9);
  REQUIRE(m.head1_W.rows() == 3);
  REQUIRE(m.head2_W.rows() == 9);
  REQUIRE(m.lstm1.input == fx.matrix.cols());
  REQUIRE(m.lstm2.input == m.cfg.hidden);
}

TEST_CASE("model construction rejects bad shapes") {
  Fixture fx;
  auto one_level = corpus::gen_synthetic({{3}, 2, 3, 1, 4, 0.0}, 1);
  REQUIRE_THROWS_AS(
      hmlstm::build_model(one_level.taxonomy, fx.vocab, fx.matrix, tiny_config()),
      std::invalid_argument);
  embedding::Matrix wrong_rows = fx.matrix.topRows(fx.matrix.rows() - 1);
  REQUIRE_THROWS_AS(
      hmlstm::build_model(fx.ds.taxonomy, fx.vocab, wrong_rows, tiny_config()),
      std::invalid_argument);
}

TEST_CASE("identical seeds give identical initial parameters") {
  Fixture fx;
  auto a = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
  auto b = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
  auto ra = hmlstm::param_refs(a), rb = hmlstm::param_refs(b);
  for (size_t k = 0; k < ra.size(); ++k)
    REQUIRE((ra[k].array() == rb[k].array()).all());
}

TEST_CASE("zero parameters give uniform heads") {
  Fixture fx;
  auto m = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
  zero_params(m);
  const auto c = hmlstm::forward(m, fx.docs[0].ids, false);
  for (int k = 0; k < 3; ++k)
    REQUIRE_THAT(c.p1(k), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
  for (int k = 0; k < 9; ++k)
    REQUIRE_THAT(c.p2(k), Catch::Matchers::WithinAbs(1.0 / 9.0, 1e-15));
  // empty sequence runs as a single PAD step
  const auto empty = hmlstm::forward(m, {}, false);
  REQUIRE(empty.T == 1);
  REQUIRE_THAT(empty.p1(0), Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("inference-mode forward is deterministic") {
  Fixture fx;
  auto m = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
  const auto a = hmlstm::forward(m, fx.docs[0].ids, false);
  const auto b = hmlstm::forward(m, fx.docs[0].ids, false);
  REQUIRE((a.p1 - b.p1).isZero(0));
  REQUIRE((a.p2 - b.p2).isZero(0));
}

TEST_CASE("joint loss gradients pass the finite-difference check") {
  Fixture fx({{2, 2}, 1, 3, 1, 5, 0.0}, 4);
  auto cfg = tiny_config();
  cfg.hidden = 4;
  auto m = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, cfg);
  // push head pre-activations away from the ReLU kink (both branches are
  // still exercised); central differences straddle the kink otherwise
  m.head1_b << 0.3, -0.3;
  m.head2_b << 0.3, -0.3, 0.3, -0.3;
  std::vector<hmlstm::EncodedDoc> docs(fx.docs.begin(),
                                       fx.docs.begin() + std::min<size_t>(2, fx.docs.size()));
  const auto [loss, grads] = hmlstm::loss_and_grads(m, docs);
  REQUIRE(std::isfinite(loss));
  const double err = neuralcore::grad_check(
      [&] { return hmlstm::loss_and_grads(m, docs).first; }, hmlstm::param_refs(m),
      grads.tensors, 1e-3);
  REQUIRE(err < 1e-4);
}

TEST_CASE("one training epoch moves every parameter group") {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.epochs = 1;
  cfg.patience = 5;
  auto m = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, cfg);
  std::vector<Mat> before;
  for (const auto& p : hmlstm::param_refs(m)) before.push_back(p);
  const auto history = hmlstm::train(m, fx.docs);
  REQUIRE(history.size() == 1);
  auto refs = hmlstm::param_refs(m);
  for (size_t k = 0; k < refs.size(); ++k)
    REQUIRE(!(refs[k] - before[k]).isZero(0));
}

TEST_CASE("training is deterministic and keeps embeddings frozen") {
  Fixture fx;
  auto cfg = tiny_config();
  cfg.dropout = 0.3;
  auto a = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, cfg);
  auto b = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, cfg);
  const embedding::Matrix frozen = a.embeddings;
  const auto ha = hmlstm::train(a, fx.docs);
  const auto hb = hmlstm::train(b, fx.docs);
  REQUIRE(ha.size() == hb.size());
  for (size_t e = 0; e < ha.size(); ++e) {
    REQUIRE(ha[e].train_loss == hb[e].train_loss);
    REQUIRE(ha[e].val_loss == hb[e].val_loss);
    REQUIRE(std::isfinite(ha[e].train_loss));
  }
  REQUIRE((a.embeddings.array() == frozen.array()).all());
}

TEST_CASE("training rejects an empty dataset") {
  Fixture fx;
  auto m = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
  REQUIRE_THROWS_AS(hmlstm::train(m, {}), std::invalid_argument);
}

TEST_CASE("validation improves on a separable corpus") {
  // informative (trained) embeddings; untrained ones leave nothing to learn
  const auto ds = corpus::gen_synthetic({{2, 2}, 12, 4, 2, 10, 0.0}, 3);
  std::vector<std::vector<std::string>> corpus_tokens;
  for (const auto& doc : ds.documents)
    corpus_tokens.push_back(preprocess::tokenize(doc.text));
  const auto vocab = embedding::build_vocab(corpus_tokens, 1);
  embedding::CbowParams ep;
  ep.dim = 8;
  ep.min_count = 1;
  ep.epochs = 10;
  ep.subsample = 0;
  ep.seed = 3;
  const auto emb = embedding::train_cbow(corpus_tokens, vocab, ep);

  auto cfg = tiny_config();
  cfg.hidden = 8;
  cfg.epochs = 8;
  cfg.patience = 8;
  cfg.lr = 0.01;
  auto m = hmlstm::build_model(ds.taxonomy, vocab, emb.matrix, cfg);
  const auto history = hmlstm::train(m, hmlstm::encode_dataset(ds, vocab, {}, 16));
  REQUIRE(history.back().val_loss < history.front().val_loss);
}

TEST_CASE("mask mode restricts level two to children of the level-one pick") {
  // Crafted head biases over the news taxonomy: level 1 favors Sports, the
  // unrestricted level-2 argmax is Mobile (a Technology child) and the best
  // Sports child is Cricket.
  Fixture fx;
  corpus::Dataset named;
  named.taxonomy = testutil::undhtc();
  auto m = hmlstm::build_model(named.taxonomy, fx.vocab, fx.matrix, tiny_config());
  zero_params(m);
  m.head1_b << 2.0, 1.0, 0.5;              // Sports, Technology, Entertainment
  Vec b2 = Vec::Zero(9);
  b2(4) = 3.0;                             // Mobile (id 7, class index 4)
  b2(0) = 2.0;                             // Cricket (id 3, class index 0)
  m.head2_b = b2;

  const auto free = hmlstm::predict(m, fx.docs[0].ids, hmlstm::ConsistencyMode::ArgmaxFree);
  REQUIRE(named.taxonomy.find(free.label1)->name == "Sports");
  REQUIRE(named.taxonomy.find(free.label2)->name == "Mobile");
  REQUIRE(!free.consistency_enforced);

  const auto masked = hmlstm::predict(m, fx.docs[0].ids, hmlstm::ConsistencyMode::Mask);
  REQUIRE(named.taxonomy.find(masked.label1)->name == "Sports");
  REQUIRE(named.taxonomy.find(masked.label2)->name == "Cricket");
  REQUIRE(masked.consistency_enforced);
  REQUIRE_THAT(masked.p2.sum(), Catch::Matchers::WithinAbs(1.0, 1e-12));
  // masked distribution only covers Sports children
  for (int k = 0; k < 9; ++k)
    if (named.taxonomy.parent_of(m.level2_ids[k]) != masked.label1)
      REQUIRE(masked.p2(k) == 0.0);
}

TEST_CASE("modes agree when the free argmax is already consistent") {
  Fixture fx;
  corpus::Dataset named;
  named.taxonomy = testutil::undhtc();
  auto m = hmlstm::build_model(named.taxonomy, fx.vocab, fx.matrix, tiny_config());
  zero_params(m);
  m.head1_b << 2.0, 1.0, 0.5;
  Vec b2 = Vec::Zero(9);
  b2(1) = 3.0;  // Hockey, a Sports child
  m.head2_b = b2;
  const auto free = hmlstm::predict(m, fx.docs[0].ids, hmlstm::ConsistencyMode::ArgmaxFree);
  const auto masked = hmlstm::predict(m, fx.docs[0].ids, hmlstm::ConsistencyMode::Mask);
  REQUIRE(free.label1 == masked.label1);
  REQUIRE(free.label2 == masked.label2);
}

TEST_CASE("checkpoints round-trip bit-exactly against float32 storage") {
  Fixture fx;
  auto m = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
  hmlstm::train(m, fx.docs);
  const auto dir = testutil::temp_dir("ckpt");
  const auto path = (dir / "m.ckpt").string();

  // narrow to storage precision first so save/load is an exact round-trip
  for (auto& p : hmlstm::param_refs(m))
    p = p.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  hmlstm::save_checkpoint(m, path);
  auto back = hmlstm::load_checkpoint(path, fx.vocab, fx.matrix);

  REQUIRE(back.cfg.hidden == m.cfg.hidden);
  REQUIRE(back.taxonomy.nodes.size() == m.taxonomy.nodes.size());
  for (size_t i = 0; i < m.taxonomy.nodes.size(); ++i)
    REQUIRE(back.taxonomy.nodes[i].name == m.taxonomy.nodes[i].name);
  auto ra = hmlstm::param_refs(m), rb = hmlstm::param_refs(back);
  for (size_t k = 0; k < ra.size(); ++k)
    REQUIRE((ra[k].array() == rb[k].array()).all());
  const auto p1 = hmlstm::predict(m, fx.docs[0].ids, hmlstm::ConsistencyMode::Mask);
  const auto p2 = hmlstm::predict(back, fx.docs[0].ids, hmlstm::ConsistencyMode::Mask);
  REQUIRE(p1.label1 == p2.label1);
  REQUIRE(p1.label2 == p2.label2);
}

TEST_CASE("corrupted checkpoints and wrong embeddings are rejected") {
  Fixture fx;
  auto m = hmlstm::build_model(fx.ds.taxonomy, fx.vocab, fx.matrix, tiny_config());
  const auto dir = testutil::temp_dir("ckpt");
  const auto path = (dir / "m.ckpt").string();
  hmlstm::save_checkpoint(m, path);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  REQUIRE_THROWS_WITH(hmlstm::load_checkpoint(path, fx.vocab, fx.matrix),
                      Catch::Matchers::ContainsSubstring("checksum"));

  hmlstm::save_checkpoint(m, path);
  embedding::Matrix other = fx.matrix;
  other(1, 0) += 1.0;
  REQUIRE_THROWS_WITH(hmlstm::load_checkpoint(path, fx.vocab, other),
                      Catch::Matchers::ContainsSubstring("hash"));
}

TEST_CASE("encode_dataset maps gold labels to level-local class indices") {
  Fixture fx;
  const auto l1 = fx.ds.taxonomy.level_ids(1);
  const auto l2 = fx.ds.taxonomy.level_ids(2);
  for (size_t i = 0; i < fx.docs.size(); ++i) {
    REQUIRE(l1[fx.docs[i].y1] == fx.ds.documents[i].gold[0]);
    REQUIRE(l2[fx.docs[i].y2] == fx.ds.documents[i].gold[1]);
    REQUIRE(fx.docs[i].ids.size() <= 16);
  }
}
