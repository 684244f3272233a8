// Flat key = value experiment configuration with full-schema validation.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "canto/bpe.hpp"
#include "canto/model.hpp"
#include "canto/trainer.hpp"

namespace canto {

enum class EmbedRoute { Mapping, Concat, PivotPrivate };

std::string_view to_string(EmbedRoute route);

struct ConfigError : std::runtime_error {
  explicit ConfigError(std::vector<std::string> violations);
  std::vector<std::string> violations;
};

struct ExperimentConfig {
  std::filesystem::path config_dir;  // base for relative paths
  std::uint64_t seed = 42;

  // Inputs: either raw text for the pipeline or pre-cleaned corpora.
  std::optional<std::filesystem::path> l1_raw, l2_raw;
  std::optional<std::filesystem::path> l1_corpus, l2_corpus;
  std::string pipeline_l1_label = "cantonese";
  std::string pipeline_l2_label = "mandarin";
  std::uint64_t balanced_target = 0;  // downsample L2 to this size; 0 = off

  TokenScheme scheme = TokenScheme::Char;
  std::optional<std::filesystem::path> lexicon_l1, lexicon_l2;

  std::uint64_t bpe_num_merges = 50000;
  BpeMode bpe_mode = BpeMode::Joint;

  EmbedRoute embed_route = EmbedRoute::Concat;
  int embed_dim = 512;
  int embed_window = 5;
  int embed_negatives = 5;
  int embed_epochs = 5;
  double embed_lr = 0.025;
  std::uint64_t embed_min_count = 1;
  int embed_self_learning = 0;

  ModelConfig model;
  TrainingSchedule train;

  std::optional<std::filesystem::path> eval_test_src, eval_test_ref;
  Lang eval_src_lang = Lang::L1;
  int eval_beam = 1;
  int eval_max_len = 0;  // 0 = model.max_len
  std::optional<std::filesystem::path> eval_baseline_table;
  bool eval_strip_punct = false;

  std::vector<std::string> warnings;          // paper-pairing advisories
  std::map<std::string, std::string> entries; // raw key -> value, as parsed

  // Canonical "key = value" text of a key subset (missing keys skipped).
  std::string subset_canonical(const std::vector<std::string>& keys) const;
};

// Parses "key = value" lines ('#' comments, blank lines allowed). Duplicate
// keys are violations.
std::map<std::string, std::string> parse_flat_kv(const std::string& text);

// Full validation: types, ranges, unknown keys, path existence, cross-field
// constraints. Throws ConfigError listing every violation.
ExperimentConfig validate_config(const std::filesystem::path& path);
ExperimentConfig validate_config_text(const std::string& text,
                                      const std::filesystem::path& config_dir);

}  // namespace canto
