// End-to-end experiment runner: pipeline -> tokenize -> (bpe) -> embeddings
// -> train -> evaluate, with content-hash stage caching and a run manifest.
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "canto/config.hpp"

namespace canto {

inline constexpr std::string_view kToolVersion = "0.1.0";

struct StageRecord {
  std::string name;
  std::string inputs_hash;
  std::string status;  // "run" | "cached" | "skipped"
  std::map<std::string, std::string> outputs;  // relpath -> sha256
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version{kToolVersion};
  std::string created_unix;
  std::vector<StageRecord> stages;

  std::string serialized() const;  // flat key=value text, sorted within stages
  static RunManifest parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);

  const StageRecord* find_stage(const std::string& name) const;
  // All artifact relpaths across stages.
  std::vector<std::string> artifacts() const;
};

struct ExperimentResult {
  RunManifest manifest;
  std::filesystem::path out_dir;
  std::vector<std::string> stage_statuses;  // "name:status" in run order
};

// Holds an exclusive directory lock for the run; the manifest is written
// last. Stages whose inputs (config subset + input file hashes) match the
// previous manifest and whose outputs still exist are skipped as cache hits.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir);

}  // namespace canto
