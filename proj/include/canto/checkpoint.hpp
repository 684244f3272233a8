// Versioned binary checkpoint container: a string manifest plus named tensor
// blobs. Loaders validate the hashes recorded in the manifest.
#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace canto {

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> manifest;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;

  const Eigen::MatrixXd* find_tensor(const std::string& name) const;
  const std::string& manifest_at(const std::string& key) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace canto
