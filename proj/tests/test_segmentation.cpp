#include <doctest.h>

#include <random>

#include "canto/bpe.hpp"
#include "canto/segmentation.hpp"
#include "canto/unicode.hpp"

using namespace canto;

namespace {

Sentence sent(const std::string& text) {
  return {text, "test", LanguageLabel::Ambiguous};
}

}  // namespace

TEST_CASE("char_tokenize keeps code-switching runs whole") {
  auto t = char_tokenize(sent("我哋今朝9點有個meeting。"));
  CHECK(t.tokens == std::vector<std::string>{"我", "哋", "今", "朝", "9", "點",
                                             "有", "個", "meeting", "。"});
}

TEST_CASE("char_tokenize single latin run") {
  CHECK(char_tokenize(sent("a")).tokens == std::vector<std::string>{"a"});
}

TEST_CASE("char_tokenize run boundaries") {
  CHECK(char_tokenize(sent("開open開")).tokens ==
        std::vector<std::string>{"開", "open", "開"});
  CHECK(char_tokenize(sent("abc123def")).tokens ==
        std::vector<std::string>{"abc", "123", "def"});
}

TEST_CASE("char_tokenize drops whitespace") {
  CHECK(char_tokenize(sent("天氣 好  wow")).tokens ==
        std::vector<std::string>{"天", "氣", "好", "wow"});
}

TEST_CASE("word_tokenize greedy maximum matching") {
  Lexicon lex({"朋友"});
  CHECK(word_tokenize(sent("我的朋友"), lex).tokens ==
        std::vector<std::string>{"我", "的", "朋友"});
}

TEST_CASE("word_tokenize empty lexicon equals char fallback") {
  Lexicon lex;
  auto w = word_tokenize(sent("我哋有個meeting"), lex);
  auto c = char_tokenize(sent("我哋有個meeting"));
  CHECK(w.tokens == c.tokens);
}

TEST_CASE("word_tokenize greedy left-to-right is not globally optimal") {
  Lexicon lex({"中意", "意思"});
  CHECK(word_tokenize(sent("中意思"), lex).tokens ==
        std::vector<std::string>{"中意", "思"});
}

TEST_CASE("word_tokenize token count bound") {
  Lexicon lex({"朋友", "今朝", "meeting"});
  for (const std::string& text :
       {std::string("我哋今朝9點有個meeting。"), std::string("朋友朋友abc")}) {
    auto w = word_tokenize(sent(text), lex);
    auto c = char_tokenize(sent(text));
    CHECK(w.tokens.size() <= c.tokens.size());
  }
}

TEST_CASE("detokenize round trips char scheme minus whitespace") {
  for (const std::string& text :
       {std::string("我 哋 去玩"), std::string("開open開 123"),
        std::string("天氣好。")}) {
    auto t = char_tokenize(sent(text));
    std::u32string cps = *uni::decode_utf8(text);
    std::string expect;
    for (char32_t cp : cps)
      if (!uni::is_space(cp)) expect += uni::encode_utf8(cp);
    CHECK(detokenize(t).text == expect);
  }
}

TEST_CASE("detokenize joins simple tokens") {
  TokenizedSentence t;
  t.scheme = TokenScheme::Char;
  t.tokens = {"我", "哋"};
  CHECK(detokenize(t).text == "我哋");
}

TEST_CASE("detokenize reverses bpe end markers") {
  TokenizedSentence t;
  t.scheme = TokenScheme::Bpe;
  t.tokens = {"朋", "友</w>", "好</w>"};
  CHECK(detokenize(t).text == "朋友好");
}

TEST_CASE("detokenize rejects dangling continuations") {
  TokenizedSentence t;
  t.scheme = TokenScheme::Bpe;
  t.tokens = {"朋", "友"};
  CHECK_THROWS_WITH(detokenize(t), "dangling continuation");
}

TEST_CASE("bpe round trip through apply") {
  WordCounts counts;
  counts["朋友"] = 3;
  auto tables = learn_bpe({counts}, 10, BpeMode::Joint);
  BpeApplier applier(tables[0]);
  TokenizedSentence words;
  words.scheme = TokenScheme::Word;
  words.tokens = {"朋友"};
  auto bpe = applier.apply(words);
  CHECK(detokenize(bpe).text == "朋友");
}

TEST_CASE("lexicon counts entry lengths in characters") {
  Lexicon lex({"一二三四五六"});
  CHECK(lex.max_entry_len() == 6);
  CHECK(lex.contains(U"一二三四五六"));
}
