// Byte-pair encoding over word-tokenized corpora.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "canto/segmentation.hpp"

namespace canto {

inline constexpr std::string_view kSubwordEndMarker = "</w>";

enum class BpeMode { Joint, Separate };

using WordCounts = std::map<std::string, std::uint64_t>;

WordCounts count_words(const std::vector<std::vector<std::string>>& sentences);

struct MergeTable {
  std::vector<std::pair<std::string, std::string>> merges;
  BpeMode mode = BpeMode::Joint;
  std::string end_marker = std::string(kSubwordEndMarker);

  void save(const std::filesystem::path& path) const;
  static MergeTable load(const std::filesystem::path& path);
};

// Standard BPE: each word starts as its character sequence with the end
// marker attached to the final character; the most frequent adjacent pair is
// merged each round, ties broken by lexicographic pair order. Joint mode sums
// pair counts over all corpora and returns a single table; separate mode
// learns one table per corpus. Stops early when no pairs remain.
std::vector<MergeTable> learn_bpe(const std::vector<WordCounts>& corpora,
                                  std::size_t num_merges, BpeMode mode);

// Applies a merge table to word-tokenized text. Splits are cached per word
// type; unseen characters pass through as singleton subwords.
class BpeApplier {
 public:
  explicit BpeApplier(MergeTable table);

  std::vector<std::string> split_word(const std::string& word) const;
  TokenizedSentence apply(const TokenizedSentence& words) const;

  const MergeTable& table() const { return table_; }

 private:
  MergeTable table_;
  std::map<std::pair<std::string, std::string>, std::size_t> rank_;
  mutable std::unordered_map<std::string, std::vector<std::string>> cache_;
};

}  // namespace canto
