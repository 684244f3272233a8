#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "canto/corpus.hpp"
#include "canto/unicode.hpp"

using namespace canto;
namespace fs = std::filesystem;

namespace {

Sentence sent(const std::string& text) {
  return {text, "test", LanguageLabel::Ambiguous};
}

std::vector<std::string> texts(const std::vector<Sentence>& sents) {
  std::vector<std::string> out;
  for (const auto& s : sents) out.push_back(s.text);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("canto_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cut_sentences splits at cut punctuation and keeps it") {
  auto out = cut_sentences({"doc", "你好。我係學生。"});
  CHECK(texts(out) == std::vector<std::string>{"你好。", "我係學生。"});
}

TEST_CASE("cut_sentences on empty input") {
  CHECK(cut_sentences({"doc", ""}).empty());
}

TEST_CASE("cut_sentences treats newline as a cut point") {
  auto out = cut_sentences({"doc", "天氣好\n出去玩"});
  CHECK(texts(out) == std::vector<std::string>{"天氣好", "出去玩"});
}

TEST_CASE("cut_sentences covers the full cut set") {
  auto out = cut_sentences({"doc", "一。二．三.\n四!五！六?七？八"});
  CHECK(texts(out) == std::vector<std::string>{"一。", "二．", "三.", "四!",
                                               "五！", "六?", "七？", "八"});
}

TEST_CASE("cut_sentences protects dots inside tokens") {
  auto out = cut_sentences({"doc", "見 a.example 再見. 完"});
  CHECK(texts(out) == std::vector<std::string>{"見 a.example 再見.", "完"});
}

TEST_CASE("cut_sentences concatenation reproduces input minus whitespace") {
  std::string text = "你好。 我係學生！\n出去玩?天氣 好.";
  auto out = cut_sentences({"doc", text});
  std::string joined;
  for (const auto& s : out) joined += s.text;
  std::string joined_nospace, text_nospace;
  for (char c : joined)
    if (c != ' ') joined_nospace += c;
  for (char c : text)
    if (c != ' ' && c != '\n') text_nospace += c;
  CHECK(joined_nospace == text_nospace);
}

TEST_CASE("strip_noise removes url, hashtag and emoji") {
  CHECK(strip_noise(sent("睇下 https://a.example #fun 😀")).text == "睇下");
}

TEST_CASE("strip_noise identity on clean text") {
  CHECK(strip_noise(sent("身邊有兩位好友")).text == "身邊有兩位好友");
}

TEST_CASE("strip_noise empties a noise-only sentence") {
  CHECK(strip_noise(sent("#tag")).text == "");
  CHECK(strip_noise(sent("😀😀")).text == "");
  CHECK(strip_noise(sent("www.example.com/page")).text == "");
}

TEST_CASE("strip_noise collapses whitespace runs") {
  CHECK(strip_noise(sent("你  好   嗎")).text == "你 好 嗎");
}

TEST_CASE("strip_noise removes cjk hashtags but keeps following punctuation") {
  CHECK(strip_noise(sent("今日#開心，完")).text == "今日，完");
}

TEST_CASE("classify_language by marker majority") {
  CHECK(classify_language(sent("我哋今朝9點有個meeting。")) ==
        LanguageLabel::Cantonese);
  CHECK(classify_language(sent("他是我的朋友")) == LanguageLabel::Mandarin);
  CHECK(classify_language(sent("三項發明")) == LanguageLabel::Ambiguous);
}

TEST_CASE("classify_language tie goes to ambiguous") {
  // One marker each: 係 (Cantonese) and 是 (Mandarin).
  CHECK(classify_language(sent("係是")) == LanguageLabel::Ambiguous);
}

TEST_CASE("classify_language counts simplified 说 as Mandarin") {
  CHECK(classify_language(sent("说好")) == LanguageLabel::Mandarin);
}

TEST_CASE("classify_language is permutation invariant") {
  std::string base = "我哋睇咗戲然後佢話好好睇";
  auto cps = *uni::decode_utf8(base);
  std::mt19937_64 rng(7);
  LanguageLabel expected = classify_language(sent(base));
  for (int i = 0; i < 20; ++i) {
    std::shuffle(cps.begin(), cps.end(), rng);
    CHECK(classify_language(sent(uni::encode_utf8(cps))) == expected);
  }
}

TEST_CASE("foreign_filter drops non-CJK text") {
  CHECK_FALSE(foreign_filter_keep(sent("Привет как дела")));
  CHECK(foreign_filter_keep(sent("身邊有兩位好友")));
}

TEST_CASE("foreign_filter threshold arithmetic") {
  // 1 CJK + 29 Latin = 1/30 < 5% -> drop.
  std::string s29(29, 'a');
  CHECK_FALSE(foreign_filter_keep(sent("好" + s29)));
  // Exactly 5%: 1 CJK + 19 Latin = 1/20 -> keep.
  std::string s19(19, 'a');
  CHECK(foreign_filter_keep(sent("好" + s19)));
}

TEST_CASE("downsample_balanced full sample returns the identical multiset") {
  std::vector<Sentence> corpus;
  for (int i = 0; i < 1000; ++i)
    corpus.push_back(sent(std::string(1 + i % 30, 'x')));
  auto out = downsample_balanced(corpus, 1000, 1);
  REQUIRE(out.size() == corpus.size());
  CHECK(texts(out) == texts(corpus));
}

TEST_CASE("downsample_balanced uniform corpus accepts any subset") {
  std::vector<Sentence> corpus(10000, sent("一二三"));
  auto out = downsample_balanced(corpus, 1000, 2);
  CHECK(out.size() == 1000);
}

TEST_CASE("downsample_balanced preserves a two-bucket split") {
  std::vector<Sentence> corpus;
  for (int i = 0; i < 8000; ++i) corpus.push_back(sent("四字词语"));  // bucket 0
  for (int i = 0; i < 2000; ++i)
    corpus.push_back(sent(std::string(24, 'x')));  // bucket 4
  auto out = downsample_balanced(corpus, 5000, 3);
  REQUIRE(out.size() == 5000);
  std::size_t short_count = 0;
  for (const auto& s : out)
    if (uni::codepoint_count(s.text) < 5) ++short_count;
  double share = static_cast<double>(short_count) / static_cast<double>(out.size());
  CHECK(share > 0.78);
  CHECK(share < 0.82);
}

TEST_CASE("downsample_balanced is reproducible and errors on oversampling") {
  std::vector<Sentence> corpus;
  for (int i = 0; i < 100; ++i)
    corpus.push_back(sent(std::string(1 + i % 9, 'y') + std::to_string(i)));
  auto a = downsample_balanced(corpus, 37, 99);
  auto b = downsample_balanced(corpus, 37, 99);
  CHECK(texts(a) == texts(b));
  CHECK_THROWS_WITH(downsample_balanced(corpus, 101, 1), "insufficient data");
}

TEST_CASE("run_pipeline on empty input") {
  fs::path dir = fresh_dir("empty");
  std::ofstream(dir / "in.txt").close();
  PipelineResult res = run_pipeline({{dir / "in.txt"}, dir / "out"});
  CHECK(res.stats.retained() == 0);
  CHECK(res.stats.sentences_cut == 0);
  CHECK(slurp(res.cantonese_path).empty());
}

TEST_CASE("run_pipeline routes a small crafted fixture") {
  fs::path dir = fresh_dir("routing");
  {
    std::ofstream out(dir / "in.txt", std::ios::binary);
    out << "我哋去玩。佢話好。\n";         // two Cantonese sentences
    out << "他是我的朋友。她说好。\n";     // two Mandarin sentences
    out << "Это не по-китайски\n";         // foreign, dropped
    out << "#tag https://x.example 😀\n";  // noise only, dropped
  }
  PipelineResult res = run_pipeline({{dir / "in.txt"}, dir / "out"});
  CHECK(res.stats.input_documents == 4);
  CHECK(res.stats.sentences_cut == 6);
  CHECK(res.stats.label_cantonese == 2);
  CHECK(res.stats.label_mandarin == 2);
  CHECK(res.stats.dropped_foreign == 1);
  CHECK(res.stats.dropped_empty_after_strip == 1);
  CHECK(res.stats.retained() == 4);
  CHECK(slurp(res.cantonese_path) == "我哋去玩。\n佢話好。\n");
  CHECK(slurp(res.mandarin_path) == "他是我的朋友。\n她说好。\n");

  std::uint64_t total = 0;
  for (auto c : res.stats.length_histogram) total += c;
  CHECK(total == res.stats.retained());
}

TEST_CASE("run_pipeline is deterministic and idempotent") {
  fs::path dir = fresh_dir("idem");
  {
    std::ofstream out(dir / "in.txt", std::ios::binary);
    out << "我哋去玩。佢話好,喺屋企。\n他是我的朋友。\n天氣發明都好\n";
  }
  PipelineResult a = run_pipeline({{dir / "in.txt"}, dir / "a"});
  PipelineResult b = run_pipeline({{dir / "in.txt"}, dir / "b"});
  CHECK(slurp(a.cantonese_path) == slurp(b.cantonese_path));
  CHECK(slurp(dir / "a/stats.txt") == slurp(dir / "b/stats.txt"));

  // Feeding a label file back through the pipeline reproduces it.
  PipelineResult c = run_pipeline({{a.cantonese_path}, dir / "c"});
  CHECK(slurp(c.cantonese_path) == slurp(a.cantonese_path));
  CHECK(c.stats.label_mandarin == 0);
  CHECK(c.stats.label_ambiguous == 0);

  PipelineResult d = run_pipeline({{a.ambiguous_path}, dir / "d"});
  CHECK(slurp(d.ambiguous_path) == slurp(a.ambiguous_path));
}

TEST_CASE("run_pipeline drops invalid utf8 lines and counts them") {
  fs::path dir = fresh_dir("badutf8");
  {
    std::ofstream out(dir / "in.txt", std::ios::binary);
    out << "他是我的朋友。\n";
    out << "\xFF\xFE broken\n";
  }
  PipelineResult res = run_pipeline({{dir / "in.txt"}, dir / "out"});
  CHECK(res.stats.invalid_utf8_dropped == 1);
  CHECK(res.stats.label_mandarin == 1);
}

TEST_CASE("run_pipeline errors on unreadable input") {
  fs::path dir = fresh_dir("noinput");
  CHECK_THROWS(run_pipeline({{dir / "missing.txt"}, dir / "out"}));
}

TEST_CASE("length buckets") {
  CHECK(length_bucket(0) == 0);
  CHECK(length_bucket(4) == 0);
  CHECK(length_bucket(5) == 1);
  CHECK(length_bucket(99) == 19);
  CHECK(length_bucket(100) == 20);
  CHECK(length_bucket(5000) == 20);
  CHECK(bucket_low(20) == 100);
}
