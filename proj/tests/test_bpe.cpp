#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "canto/bpe.hpp"
#include "canto/unicode.hpp"

using namespace canto;

namespace {

// Brute-force oracle: re-derives every pair count from scratch each
// iteration. Independent of the library's incremental bookkeeping.
using Pair = std::pair<std::string, std::string>;

std::vector<std::string> oracle_split(const std::string& word) {
  auto cps = *uni::decode_utf8(word);
  std::vector<std::string> syms;
  for (char32_t cp : cps) syms.push_back(uni::encode_utf8(cp));
  syms.back() += std::string(kSubwordEndMarker);
  return syms;
}

std::vector<Pair> oracle_learn(const std::map<std::string, std::uint64_t>& words,
                               std::size_t num_merges) {
  std::vector<std::pair<std::vector<std::string>, std::uint64_t>> state;
  for (const auto& [w, f] : words) state.push_back({oracle_split(w), f});

  std::vector<Pair> merges;
  std::set<Pair> seen;
  while (merges.size() < num_merges) {
    std::map<Pair, std::uint64_t> counts;
    for (const auto& [syms, freq] : state)
      for (std::size_t i = 0; i + 1 < syms.size(); ++i)
        counts[{syms[i], syms[i + 1]}] += freq;
    if (counts.empty()) break;
    Pair best;
    std::uint64_t best_count = 0;
    for (const auto& [p, c] : counts) {
      if (c > best_count) {
        best_count = c;
        best = p;
      }
    }
    if (seen.insert(best).second) merges.push_back(best);
    for (auto& [syms, freq] : state) {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < syms.size();) {
        if (i + 1 < syms.size() && syms[i] == best.first &&
            syms[i + 1] == best.second) {
          out.push_back(best.first + best.second);
          i += 2;
        } else {
          out.push_back(syms[i]);
          ++i;
        }
      }
      syms = std::move(out);
    }
  }
  return merges;
}

// Random toy corpus over a small CJK alphabet.
WordCounts random_corpus(std::mt19937_64& rng, int max_distinct_words) {
  static const std::u32string alphabet = U"低碳朋友好天氣開心今日者意思中";
  std::uniform_int_distribution<int> n_words(3, max_distinct_words);
  std::uniform_int_distribution<int> word_len(1, 6);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<std::uint64_t> freq(1, 50);
  WordCounts counts;
  int n = n_words(rng);
  for (int i = 0; i < n; ++i) {
    std::string w;
    int len = word_len(rng);
    for (int k = 0; k < len; ++k) w += uni::encode_utf8(alphabet[pick(rng)]);
    counts[w] += freq(rng);
  }
  return counts;
}

}  // namespace

TEST_CASE("learn_bpe single hand-counted merge") {
  WordCounts counts;
  counts["低碳"] = 3;
  auto tables = learn_bpe({counts}, 1, BpeMode::Joint);
  REQUIRE(tables.size() == 1);
  REQUIRE(tables[0].merges.size() == 1);
  CHECK(tables[0].merges[0] == Pair{"低", std::string("碳") + "</w>"});
}

TEST_CASE("learn_bpe zero merges gives character splitting") {
  WordCounts counts;
  counts["朋友"] = 1;
  auto tables = learn_bpe({counts}, 0, BpeMode::Joint);
  CHECK(tables[0].merges.empty());
  BpeApplier applier(tables[0]);
  CHECK(applier.split_word("朋友") ==
        std::vector<std::string>{"朋", "友</w>"});
}

TEST_CASE("joint mode on identical corpora equals separate mode") {
  std::mt19937_64 rng(11);
  WordCounts corpus = random_corpus(rng, 40);
  auto joint = learn_bpe({corpus, corpus}, 50, BpeMode::Joint);
  auto separate = learn_bpe({corpus}, 50, BpeMode::Separate);
  CHECK(joint[0].merges == separate[0].merges);
}

TEST_CASE("separate mode learns one table per corpus") {
  WordCounts a, b;
  a["低碳"] = 5;
  b["朋友"] = 5;
  auto tables = learn_bpe({a, b}, 1, BpeMode::Separate);
  REQUIRE(tables.size() == 2);
  CHECK(tables[0].merges[0].first == "低");
  CHECK(tables[1].merges[0].first == "朋");
}

TEST_CASE("apply_bpe follows the learned merge") {
  WordCounts counts;
  counts["低碳"] = 3;
  auto tables = learn_bpe({counts}, 1, BpeMode::Joint);
  BpeApplier applier(tables[0]);
  CHECK(applier.split_word("低碳") ==
        std::vector<std::string>{std::string("低碳") + "</w>"});
}

TEST_CASE("apply_bpe passes unseen single characters through") {
  auto tables = learn_bpe({WordCounts{{"低碳", 2}}}, 5, BpeMode::Joint);
  BpeApplier applier(tables[0]);
  CHECK(applier.split_word("嘅") == std::vector<std::string>{"嘅</w>"});
}

TEST_CASE("apply_bpe is position independent") {
  std::mt19937_64 rng(5);
  WordCounts corpus = random_corpus(rng, 60);
  auto tables = learn_bpe({corpus}, 80, BpeMode::Joint);
  BpeApplier applier(tables[0]);
  TokenizedSentence words;
  words.scheme = TokenScheme::Word;
  words.tokens = {"低碳", "朋友", "低碳"};
  auto out = applier.apply(words);
  auto first = applier.split_word("低碳");
  std::vector<std::string> head(out.tokens.begin(),
                                out.tokens.begin() + first.size());
  std::vector<std::string> tail(out.tokens.end() - first.size(),
                                out.tokens.end());
  CHECK(head == first);
  CHECK(tail == first);
}

TEST_CASE("bpe losslessness over a random corpus") {
  std::mt19937_64 rng(17);
  WordCounts corpus = random_corpus(rng, 80);
  auto tables = learn_bpe({corpus}, 120, BpeMode::Joint);
  BpeApplier applier(tables[0]);
  for (const auto& [word, freq] : corpus) {
    TokenizedSentence t;
    t.scheme = TokenScheme::Bpe;
    t.tokens = applier.split_word(word);
    CHECK(detokenize(t).text == word);
  }
}

TEST_CASE("learned merges match the brute-force oracle on random corpora") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 8; ++trial) {
    WordCounts corpus = random_corpus(rng, 100);
    std::uniform_int_distribution<std::size_t> merges_dist(1, 200);
    std::size_t n = merges_dist(rng);
    auto tables = learn_bpe({corpus}, n, BpeMode::Joint);
    auto oracle = oracle_learn(corpus, n);
    CHECK(tables[0].merges == oracle);
  }
}

TEST_CASE("vocabulary is bounded by alphabet plus merges") {
  std::mt19937_64 rng(29);
  WordCounts corpus = random_corpus(rng, 50);
  const std::size_t n_merges = 64;
  auto tables = learn_bpe({corpus}, n_merges, BpeMode::Joint);
  BpeApplier applier(tables[0]);

  std::set<std::string> alphabet, subwords;
  for (const auto& [word, freq] : corpus) {
    for (const auto& s : oracle_split(word)) alphabet.insert(s);
    for (const auto& s : applier.split_word(word)) subwords.insert(s);
  }
  CHECK(subwords.size() <= alphabet.size() + n_merges);
}

TEST_CASE("merge table round trips through its file format") {
  std::mt19937_64 rng(31);
  WordCounts corpus = random_corpus(rng, 40);
  auto tables = learn_bpe({corpus}, 30, BpeMode::Joint);
  auto path = std::filesystem::temp_directory_path() / "canto_merges_test.txt";
  tables[0].save(path);
  MergeTable loaded = MergeTable::load(path);
  CHECK(loaded.merges == tables[0].merges);
  CHECK(loaded.mode == BpeMode::Joint);
}

TEST_CASE("merge table load requires the version header") {
  auto path = std::filesystem::temp_directory_path() / "canto_merges_bad.txt";
  {
    std::ofstream out(path);
    out << "低 碳</w>\n";
  }
  CHECK_THROWS(MergeTable::load(path));
}
