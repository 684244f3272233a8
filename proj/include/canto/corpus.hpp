// Corpus pipeline: sentence cutting, noise stripping, language routing,
// foreign-text filtering and length-balanced downsampling.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "canto/text.hpp"

namespace canto {

// Cuts a document into sentences at 。 ． . ! ！ ? ？ and newlines. The cut
// punctuation stays at the end of its sentence; newlines are dropped.
// A half-width '.' cuts only when followed by whitespace or end of text, so
// dotted tokens like "a.example" or "3.14" stay intact.
std::vector<Sentence> cut_sentences(const RawDocument& doc);

// Removes URL spans ("scheme://..." or "www."-prefixed), emoji codepoints and
// '#'-prefixed hashtag tokens, then collapses whitespace runs and trims.
// A sentence may come back empty; the pipeline drops and counts those.
Sentence strip_noise(const Sentence& s);

// Majority vote over the marker character lists. Ties (including 0-0)
// classify as Ambiguous.
LanguageLabel classify_language(const Sentence& s);

int count_cantonese_markers(const std::string& text);
int count_mandarin_markers(const std::string& text);

// Keep iff CJK ideographs make up at least 5% of the codepoints.
bool foreign_filter_keep(const Sentence& s);

// Length histogram buckets: width 5 characters, final open bucket at >= 100.
int length_bucket(std::size_t n_chars);
constexpr int kNumLengthBuckets = 21;  // [0,5), [5,10), ..., [95,100), [100,inf)
int bucket_low(int bucket);

struct PipelineStats {
  std::uint64_t input_documents = 0;
  std::uint64_t invalid_utf8_dropped = 0;
  std::uint64_t sentences_cut = 0;
  std::uint64_t sentences_noise_stripped = 0;  // strip changed the text
  std::uint64_t dropped_empty_after_strip = 0;
  std::uint64_t dropped_foreign = 0;
  std::uint64_t label_cantonese = 0;
  std::uint64_t label_mandarin = 0;
  std::uint64_t label_ambiguous = 0;
  std::vector<std::uint64_t> length_histogram =
      std::vector<std::uint64_t>(kNumLengthBuckets, 0);

  std::uint64_t retained() const {
    return label_cantonese + label_mandarin + label_ambiguous;
  }
  void merge(const PipelineStats& other);
  std::string report() const;           // flat key:value lines
  std::string histogram_table() const;  // bucket_low<TAB>count lines
};

// Stratified downsampling that preserves the sentence length distribution
// over width-5 buckets. Output keeps the input order. Throws
// std::invalid_argument("insufficient data") when target_size > corpus size.
std::vector<Sentence> downsample_balanced(const std::vector<Sentence>& corpus,
                                          std::size_t target_size,
                                          std::uint64_t seed);

struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out_dir;
};

struct PipelineResult {
  PipelineStats stats;
  std::filesystem::path cantonese_path;
  std::filesystem::path mandarin_path;
  std::filesystem::path ambiguous_path;
};

// cut -> strip -> foreign-filter -> classify, one sentence per line per label
// file, stats report and histogram table written alongside.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace canto
