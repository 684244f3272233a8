// Dense token embeddings with fixed-precision text serialization.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "canto/vocab.hpp"

namespace canto {

struct EmbeddingMatrix {
  Vocabulary vocab;
  Eigen::MatrixXd vectors;  // vocab.size() x dim, row per token

  int dim() const { return static_cast<int>(vectors.cols()); }

  // Header "V d", then one "token v1 ... vd" row per token, 6 decimal
  // digits. Round-trips exactly at that precision.
  void save(const std::filesystem::path& path) const;
  static EmbeddingMatrix load(const std::filesystem::path& path);

  bool all_finite() const;
};

// Per language, each token's vector is [shared half | private half]; a half
// missing from its source matrix stays zero and is counted.
struct PivotPrivateResult {
  EmbeddingMatrix embedding;
  std::size_t missing_shared = 0;
  std::size_t missing_private = 0;
};

// Both halves must be 256-dimensional (the published configuration).
PivotPrivateResult compose_pivot_private(const EmbeddingMatrix& shared,
                                         const EmbeddingMatrix& private_lang);

struct PivotPrivatePair {
  PivotPrivateResult l1, l2;
};

PivotPrivatePair compose_pivot_private(const EmbeddingMatrix& shared,
                                       const EmbeddingMatrix& private_l1,
                                       const EmbeddingMatrix& private_l2);

}  // namespace canto
