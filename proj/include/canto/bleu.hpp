// Corpus-level character BLEU-4 and the character-set-conversion baseline.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "canto/text.hpp"

namespace canto {

struct BleuReport {
  double bleu = 0.0;  // 0..100
  std::array<double, 4> precisions{};
  double brevity_penalty = 1.0;
  std::uint64_t hypothesis_length = 0;
  std::uint64_t reference_length = 0;

  std::string report() const;  // machine-parsable key<TAB>value lines
};

// Both sides are tokenized with char_tokenize. Brevity penalty is
// exp(1 - r/h) when h < r, else 1. Add-1 smoothing applies to an n-gram
// precision only for n >= 2 and only when that precision would otherwise be
// zero. strip_punct removes punctuation tokens first (non-default).
BleuReport char_bleu(const std::vector<Sentence>& hypotheses,
                     const std::vector<Sentence>& references,
                     bool strip_punct = false);

// One-to-one character conversion table (identity for unmapped characters).
class ConversionTable {
 public:
  ConversionTable() = default;
  // Two-column file: source<TAB>target per line. Validates injectivity and
  // idempotence (a target maps nowhere else).
  static ConversionTable load(const std::filesystem::path& path);
  static ConversionTable from_pairs(
      const std::vector<std::pair<std::string, std::string>>& pairs);

  std::size_t size() const { return map_.size(); }
  char32_t convert(char32_t cp) const;

 private:
  void insert(char32_t from, char32_t to);
  std::unordered_map<char32_t, char32_t> map_;
};

Sentence convert_charset(const Sentence& s, const ConversionTable& table);

// Baseline: the converted source is the hypothesis, scored against the
// converted reference. Throws on misaligned files.
BleuReport baseline_evaluate(const std::vector<Sentence>& test_src,
                             const std::vector<Sentence>& test_ref,
                             const ConversionTable& table);

}  // namespace canto
