#include <doctest.h>

#include <Eigen/QR>
#include <filesystem>
#include <fstream>
#include <random>

#include "canto/embedding.hpp"
#include "canto/mapping.hpp"
#include "canto/skipgram.hpp"

using namespace canto;

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

// Synthetic corpus where A and B always co-occur while C lives elsewhere.
std::vector<std::vector<std::string>> cooccurrence_corpus(std::mt19937_64& rng) {
  std::vector<std::vector<std::string>> out;
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < 1000; ++i) {
    if (coin(rng)) {
      out.push_back({"A", "B", "A", "B"});
    } else {
      out.push_back({"C", "D", "E", "D", "C"});
    }
  }
  return out;
}

EmbeddingMatrix random_embedding(std::mt19937_64& rng, int v, int d) {
  EmbeddingMatrix m;
  for (int i = 0; i < v; ++i) m.vocab.add("tok" + std::to_string(i), v - i);
  m.vectors.resize(m.vocab.size(), d);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < m.vectors.rows(); ++i)
    for (int j = 0; j < d; ++j) m.vectors(i, j) = dist(rng);
  return m;
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, int d) {
  Eigen::MatrixXd a(d, d);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  // Fix signs so Q is unique given A.
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

}  // namespace

TEST_CASE("sgns gradients match central finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist(0.0, 0.5);
  const int d = 7;
  Eigen::VectorXd v(d), u_pos(d);
  std::vector<Eigen::VectorXd> u_negs(3, Eigen::VectorXd(d));
  for (int i = 0; i < d; ++i) {
    v(i) = dist(rng);
    u_pos(i) = dist(rng);
    for (auto& u : u_negs) u(i) = dist(rng);
  }

  Eigen::VectorXd gv, gp;
  std::vector<Eigen::VectorXd> gn;
  sgns_example(v, u_pos, u_negs, &gv, &gp, &gn);

  const double eps = 1e-6;
  auto loss_at = [&](const Eigen::VectorXd& vv, const Eigen::VectorXd& up,
                     const std::vector<Eigen::VectorXd>& un) {
    return sgns_example(vv, up, un, nullptr, nullptr, nullptr);
  };
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd vp = v, vm = v;
    vp(i) += eps;
    vm(i) -= eps;
    double fd = (loss_at(vp, u_pos, u_negs) - loss_at(vm, u_pos, u_negs)) /
                (2 * eps);
    CHECK(std::abs(fd - gv(i)) / std::max(1.0, std::abs(fd)) < 1e-4);

    Eigen::VectorXd pp = u_pos, pm = u_pos;
    pp(i) += eps;
    pm(i) -= eps;
    fd = (loss_at(v, pp, u_negs) - loss_at(v, pm, u_negs)) / (2 * eps);
    CHECK(std::abs(fd - gp(i)) / std::max(1.0, std::abs(fd)) < 1e-4);

    auto nn = u_negs;
    nn[1](i) += eps;
    double up_loss = loss_at(v, u_pos, nn);
    nn[1](i) -= 2 * eps;
    double dn_loss = loss_at(v, u_pos, nn);
    fd = (up_loss - dn_loss) / (2 * eps);
    CHECK(std::abs(fd - gn[1](i)) / std::max(1.0, std::abs(fd)) < 1e-4);
  }
}

TEST_CASE("skipgram output has the contracted shape and is finite") {
  std::mt19937_64 rng(1);
  auto corpus = cooccurrence_corpus(rng);
  SkipgramConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 1;
  cfg.seed = 5;
  EmbeddingMatrix emb = SkipgramTrainer::from_sentences(corpus, cfg).train();
  CHECK(emb.vectors.rows() == emb.vocab.size());
  CHECK(emb.dim() == 16);
  CHECK(emb.all_finite());
}

TEST_CASE("skipgram separates co-occurring tokens from disjoint ones") {
  for (std::uint64_t seed : {11ull, 22ull, 33ull, 44ull, 55ull}) {
    std::mt19937_64 rng(seed);
    auto corpus = cooccurrence_corpus(rng);
    SkipgramConfig cfg;
    cfg.dim = 24;
    cfg.window = 2;
    cfg.epochs = 3;
    cfg.seed = seed;
    EmbeddingMatrix emb = SkipgramTrainer::from_sentences(corpus, cfg).train();
    int a = emb.vocab.id("A"), b = emb.vocab.id("B"), c = emb.vocab.id("C");
    double ab = cosine(emb.vectors.row(a), emb.vectors.row(b));
    double ac = cosine(emb.vectors.row(a), emb.vectors.row(c));
    CHECK(ab > ac);
  }
}

TEST_CASE("skipgram epoch loss decreases between first and last epoch") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    std::mt19937_64 rng(seed);
    auto corpus = cooccurrence_corpus(rng);
    SkipgramConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 5;
    cfg.seed = seed;
    SkipgramReport report;
    SkipgramTrainer::from_sentences(corpus, cfg).train(&report);
    REQUIRE(report.epoch_mean_loss.size() == 5);
    CHECK(report.epoch_mean_loss[4] < report.epoch_mean_loss[0]);
  }
}

TEST_CASE("skipgram is deterministic given a seed") {
  std::mt19937_64 rng(9);
  auto corpus = cooccurrence_corpus(rng);
  SkipgramConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 1;
  cfg.seed = 77;
  EmbeddingMatrix a = SkipgramTrainer::from_sentences(corpus, cfg).train();
  EmbeddingMatrix b = SkipgramTrainer::from_sentences(corpus, cfg).train();
  CHECK(a.vectors == b.vectors);
}

TEST_CASE("skipgram rejects an empty vocabulary") {
  SkipgramConfig cfg;
  CHECK_THROWS(SkipgramTrainer::from_sentences({}, cfg));
}

TEST_CASE("anchor dictionary from identical surface tokens") {
  Vocabulary a, b;
  a.add("朋友", 10);
  a.add("三", 5);
  a.add("唯一", 2);
  b.add("朋友", 9);
  b.add("三", 50);
  b.add("另外", 1);
  AnchorDictionary dict = build_anchor_dict(a, b);
  REQUIRE(dict.pairs.size() == 2);
  // Sorted by descending joint frequency: 三 (55) before 朋友 (19).
  CHECK(a.token(dict.pairs[0].first) == "三");
  CHECK(a.token(dict.pairs[1].first) == "朋友");
}

TEST_CASE("anchor dictionary errors on disjoint vocabularies") {
  Vocabulary a, b;
  a.add("甲", 1);
  b.add("乙", 1);
  CHECK_THROWS_WITH(build_anchor_dict(a, b), "no anchors");
}

TEST_CASE("anchor dictionary on identical vocabularies covers all tokens") {
  Vocabulary a;
  for (int i = 0; i < 20; ++i) a.add("t" + std::to_string(i), 20 - i);
  AnchorDictionary dict = build_anchor_dict(a, a);
  CHECK(dict.pairs.size() == 20);
}

TEST_CASE("learn_mapping identity recovery") {
  std::mt19937_64 rng(41);
  EmbeddingMatrix x = random_embedding(rng, 50, 8);
  AnchorDictionary anchors = build_anchor_dict(x.vocab, x.vocab);
  MappingMatrix w = learn_mapping(x, x, anchors);
  CHECK((w.w - Eigen::MatrixXd::Identity(8, 8)).norm() < 1e-6);
  CHECK(w.orthogonality_error() < 1e-5);
}

TEST_CASE("learn_mapping recovers a random rotation") {
  std::mt19937_64 rng(42);
  const int d = 16;
  EmbeddingMatrix x = random_embedding(rng, 200, d);
  Eigen::MatrixXd r = random_orthogonal(rng, d);
  EmbeddingMatrix y = x;
  // Rows transform on the right; normalization commutes with rotation.
  y.vectors = x.vectors * r;
  AnchorDictionary anchors = build_anchor_dict(x.vocab, y.vocab);
  MappingMatrix w = learn_mapping(x, y, anchors);
  CHECK((w.w - r).norm() < 1e-4);
  CHECK(w.orthogonality_error() < 1e-5);
}

TEST_CASE("learn_mapping 2-d single anchor carries x to y") {
  EmbeddingMatrix x, y;
  x.vocab.add("a", 1);
  y.vocab.add("a", 1);
  // Two extra rows keep the reserved rows from being the only mass after
  // mean-centering; anchor only pairs "a".
  x.vectors = Eigen::MatrixXd::Zero(x.vocab.size(), 2);
  y.vectors = Eigen::MatrixXd::Zero(y.vocab.size(), 2);
  x.vectors.row(x.vocab.id("a")) << 1.0, 0.0;
  y.vectors.row(y.vocab.id("a")) << 0.0, 1.0;

  AnchorDictionary anchors;
  anchors.pairs = {{x.vocab.id("a"), y.vocab.id("a")}};
  MappingMatrix w = learn_mapping(x, y, anchors);
  // Compare in the normalized space the solve ran in.
  Eigen::MatrixXd xn = normalize_rows(x.vectors);
  Eigen::MatrixXd yn = normalize_rows(y.vectors);
  Eigen::RowVectorXd mapped = xn.row(x.vocab.id("a")) * w.w;
  CHECK((mapped - yn.row(y.vocab.id("a"))).norm() < 1e-6);
  CHECK(w.orthogonality_error() < 1e-5);
}

TEST_CASE("learn_mapping input validation") {
  std::mt19937_64 rng(1);
  EmbeddingMatrix x = random_embedding(rng, 10, 4);
  EmbeddingMatrix y = random_embedding(rng, 10, 6);
  AnchorDictionary anchors;
  anchors.pairs = {{5, 5}};
  CHECK_THROWS(learn_mapping(x, y, anchors));
  EmbeddingMatrix y2 = random_embedding(rng, 10, 4);
  AnchorDictionary empty;
  CHECK_THROWS(learn_mapping(x, y2, empty));
}

TEST_CASE("self-learning objective is non-increasing per induced dictionary") {
  std::mt19937_64 rng(43);
  const int d = 8;
  EmbeddingMatrix x = random_embedding(rng, 80, d);
  EmbeddingMatrix y = x;
  y.vectors = x.vectors * random_orthogonal(rng, d);
  // Perturb y so the initial solve is not already optimal.
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int i = 0; i < y.vectors.rows(); ++i)
    for (int j = 0; j < d; ++j) y.vectors(i, j) += noise(rng);

  AnchorDictionary anchors = build_anchor_dict(x.vocab, y.vocab);
  // Thin anchors: every 4th pair only.
  AnchorDictionary sparse;
  for (std::size_t i = 0; i < anchors.pairs.size(); i += 4)
    sparse.pairs.push_back(anchors.pairs[i]);

  MappingReport report;
  learn_mapping(x, y, sparse, 4, &report);
  for (const auto& [before, after] : report.objective_before_after)
    CHECK(after <= before + 1e-12);
}

TEST_CASE("nearest neighbor precision at 1 on a relabeled clone") {
  // Vocabulary B is a byte-identical clone of A with relabeled tokens and an
  // identically-distributed corpus; >= 50 anchors drive the mapping.
  std::mt19937_64 rng(44);
  const int d = 16;
  const int v = 120;
  EmbeddingMatrix x = random_embedding(rng, v, d);
  EmbeddingMatrix y;
  for (int i = 0; i < v; ++i) y.vocab.add("clone" + std::to_string(i), v - i);
  Eigen::MatrixXd r = random_orthogonal(rng, d);
  y.vectors = x.vectors * r;

  AnchorDictionary anchors;
  for (int i = 0; i < 50; ++i)
    anchors.pairs.push_back({Vocabulary::kNumReserved + i,
                             Vocabulary::kNumReserved + i});
  MappingMatrix w = learn_mapping(x, y, anchors);

  Eigen::MatrixXd xn = normalize_rows(x.vectors);
  Eigen::MatrixXd yn = normalize_rows(y.vectors);
  Eigen::MatrixXd scores = csls_scores(xn * w.w, yn, 10);
  int correct = 0, total = 0;
  for (int i = Vocabulary::kNumReserved; i < v; ++i) {
    int best;
    scores.row(i).maxCoeff(&best);
    if (best == i) ++correct;
    ++total;
  }
  CHECK(static_cast<double>(correct) / total >= 0.9);
}

TEST_CASE("pivot-private concatenation contract") {
  std::mt19937_64 rng(45);
  EmbeddingMatrix shared = random_embedding(rng, 30, 256);
  // Private side: one token overlapping with shared, one private-only token.
  EmbeddingMatrix private_lang;
  private_lang.vocab.add("tok5", 1);      // present in shared too
  private_lang.vocab.add("privonly", 1);  // missing from shared
  private_lang.vectors = Eigen::MatrixXd::Ones(private_lang.vocab.size(), 256);

  PivotPrivateResult result = compose_pivot_private(shared, private_lang);
  CHECK(result.embedding.dim() == 512);
  int id = result.embedding.vocab.id("tok5");
  CHECK(result.embedding.vectors.row(id).head(256) ==
        shared.vectors.row(shared.vocab.id("tok5")));
  CHECK(result.embedding.vectors.row(id).tail(256) ==
        private_lang.vectors.row(private_lang.vocab.id("tok5")));

  int pid = result.embedding.vocab.id("privonly");
  CHECK(result.embedding.vectors.row(pid).head(256).norm() == 0.0);
  CHECK(result.missing_shared > 0);
}

TEST_CASE("pivot-private rejects non-256 halves") {
  std::mt19937_64 rng(46);
  EmbeddingMatrix shared = random_embedding(rng, 10, 128);
  EmbeddingMatrix priv = random_embedding(rng, 10, 256);
  CHECK_THROWS(compose_pivot_private(shared, priv));
}

TEST_CASE("pivot-private shared half raises cross-language similarity") {
  // Same surface tokens, same contexts in both corpora: the shared half ties
  // the two output spaces together even when private halves are unrelated.
  std::mt19937_64 rng(47);
  std::vector<std::vector<std::string>> l1, l2;
  for (int i = 0; i < 300; ++i) {
    l1.push_back({"x", "y", "z", "w"});
    l2.push_back({"x", "y", "z", "w"});
  }
  SkipgramConfig cfg;
  cfg.dim = 256;
  cfg.window = 2;
  cfg.epochs = 2;
  cfg.negatives = 3;

  std::vector<std::vector<std::string>> all = l1;
  all.insert(all.end(), l2.begin(), l2.end());
  cfg.seed = 1;
  EmbeddingMatrix shared = SkipgramTrainer::from_sentences(all, cfg).train();
  cfg.seed = 2;
  EmbeddingMatrix p1 = SkipgramTrainer::from_sentences(l1, cfg).train();
  cfg.seed = 3;
  EmbeddingMatrix p2 = SkipgramTrainer::from_sentences(l2, cfg).train();

  PivotPrivatePair pair = compose_pivot_private(shared, p1, p2);
  double with_shared = 0.0, private_only = 0.0;
  int count = 0;
  for (const std::string& tok : {"x", "y", "z", "w"}) {
    Eigen::VectorXd a =
        pair.l1.embedding.vectors.row(pair.l1.embedding.vocab.id(tok));
    Eigen::VectorXd b =
        pair.l2.embedding.vectors.row(pair.l2.embedding.vocab.id(tok));
    with_shared += cosine(a, b);
    Eigen::VectorXd ap = a.tail(256), bp = b.tail(256);
    private_only += cosine(ap, bp);
    ++count;
  }
  CHECK(with_shared / count >= private_only / count);
}

TEST_CASE("embedding text format round trips at 6 decimals") {
  std::mt19937_64 rng(48);
  EmbeddingMatrix emb = random_embedding(rng, 12, 5);
  // Snap to the serialized precision so the round trip is exact.
  for (int i = 0; i < emb.vectors.rows(); ++i)
    for (int j = 0; j < emb.vectors.cols(); ++j)
      emb.vectors(i, j) = std::round(emb.vectors(i, j) * 1e6) / 1e6;
  auto path = std::filesystem::temp_directory_path() / "canto_emb_test.vec";
  emb.save(path);
  EmbeddingMatrix loaded = EmbeddingMatrix::load(path);
  CHECK(loaded.vocab.size() == emb.vocab.size());
  CHECK(loaded.vectors == emb.vectors);
  // And a second save produces identical bytes.
  auto path2 = std::filesystem::temp_directory_path() / "canto_emb_test2.vec";
  loaded.save(path2);
  std::ifstream a(path), b(path2);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("embedding load rejects malformed files") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path();
  {
    std::ofstream out(dir / "emb_v0.vec");
    out << "0 4\n";
  }
  CHECK_THROWS(EmbeddingMatrix::load(dir / "emb_v0.vec"));
  {
    std::ofstream out(dir / "emb_dmis.vec");
    out << "6 3\n<PAD> 0 0 0\n<UNK> 0 0 0\n<EOS> 0 0 0\n<BOS_L1> 0 0 0\n"
        << "<BOS_L2> 0 0 0\ntok 1.0 2.0\n";
  }
  CHECK_THROWS(EmbeddingMatrix::load(dir / "emb_dmis.vec"));
}
