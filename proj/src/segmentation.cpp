#include "canto/segmentation.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "canto/bpe.hpp"
#include "canto/unicode.hpp"

namespace canto {

std::string TokenizedSentence::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Lexicon::Lexicon(const std::vector<std::string>& entries) {
  for (const auto& e : entries) {
    auto decoded = uni::decode_utf8(e);
    if (!decoded || decoded->empty()) continue;
    max_entry_len_ = std::max(max_entry_len_, decoded->size());
    entries_.insert(*decoded);
  }
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("lexicon: cannot read " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) entries.push_back(line);
  }
  return Lexicon(entries);
}

bool Lexicon::contains(const std::u32string& word) const {
  return entries_.count(word) > 0;
}

namespace {

// Length of the char-scheme unit starting at position i: a full ASCII
// letter run, a full digit run, or a single codepoint.
std::size_t unit_len(const std::u32string& cps, std::size_t i) {
  const std::size_t n = cps.size();
  if (uni::is_ascii_letter(cps[i])) {
    std::size_t j = i + 1;
    while (j < n && uni::is_ascii_letter(cps[j])) ++j;
    return j - i;
  }
  if (uni::is_ascii_digit(cps[i])) {
    std::size_t j = i + 1;
    while (j < n && uni::is_ascii_digit(cps[j])) ++j;
    return j - i;
  }
  return 1;
}

}  // namespace

TokenizedSentence char_tokenize(const Sentence& s) {
  auto decoded = uni::decode_utf8(s.text);
  if (!decoded) throw std::invalid_argument("char_tokenize: invalid UTF-8");
  const std::u32string& cps = *decoded;

  TokenizedSentence out;
  out.scheme = TokenScheme::Char;
  for (std::size_t i = 0; i < cps.size();) {
    if (uni::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t len = unit_len(cps, i);
    out.tokens.push_back(uni::encode_utf8(cps.substr(i, len)));
    i += len;
  }
  return out;
}

TokenizedSentence word_tokenize(const Sentence& s, const Lexicon& lex) {
  auto decoded = uni::decode_utf8(s.text);
  if (!decoded) throw std::invalid_argument("word_tokenize: invalid UTF-8");
  const std::u32string& cps = *decoded;
  const std::size_t n = cps.size();

  TokenizedSentence out;
  out.scheme = TokenScheme::Word;
  for (std::size_t i = 0; i < n;) {
    if (uni::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t best = 0;
    std::size_t max_len = std::min(lex.max_entry_len(), n - i);
    for (std::size_t len = max_len; len >= 1; --len) {
      if (lex.contains(cps.substr(i, len))) {
        best = len;
        break;
      }
    }
    if (best == 0) best = unit_len(cps, i);
    out.tokens.push_back(uni::encode_utf8(cps.substr(i, best)));
    i += best;
  }
  return out;
}

Sentence detokenize(const TokenizedSentence& t) {
  Sentence out;
  if (t.scheme != TokenScheme::Bpe) {
    for (const auto& tok : t.tokens) out.text += tok;
    return out;
  }
  const std::string marker(kSubwordEndMarker);
  bool open_word = false;
  for (const auto& tok : t.tokens) {
    if (tok.size() >= marker.size() &&
        tok.compare(tok.size() - marker.size(), marker.size(), marker) == 0) {
      out.text += tok.substr(0, tok.size() - marker.size());
      open_word = false;
    } else {
      out.text += tok;
      open_word = true;
    }
  }
  if (open_word) throw std::invalid_argument("dangling continuation");
  return out;
}

}  // namespace canto
