// Character-level and dictionary-based word-level tokenization.
#pragma once

#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "canto/text.hpp"

namespace canto {

enum class TokenScheme { Char, Word, Bpe };

struct TokenizedSentence {
  std::vector<std::string> tokens;
  TokenScheme scheme = TokenScheme::Char;

  std::string joined() const;  // tokens separated by single spaces
};

// Dictionary for greedy forward maximum matching. Every single CJK character
// is an implicit fallback entry.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& entries);
  static Lexicon load(const std::filesystem::path& path);

  bool contains(const std::u32string& word) const;
  std::size_t max_entry_len() const { return max_entry_len_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::u32string> entries_;
  std::size_t max_entry_len_ = 1;
};

// One token per CJK codepoint; maximal runs of ASCII letters or of digits
// each form a single token (code-switching stays whole); whitespace separates
// and emits nothing; anything else is a single-codepoint token.
TokenizedSentence char_tokenize(const Sentence& s);

// Greedy forward maximum matching against the lexicon; where nothing matches
// it falls back to one char_tokenize unit (so Latin runs stay whole).
TokenizedSentence word_tokenize(const Sentence& s, const Lexicon& lex);

// Inverse of tokenization: plain concatenation for char/word; the bpe scheme
// reverses the end-of-word marker convention first. Throws
// std::invalid_argument("dangling continuation") on a malformed bpe sequence.
Sentence detokenize(const TokenizedSentence& t);

}  // namespace canto
