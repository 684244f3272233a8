// Cross-lingual embedding alignment: identical-token anchors, orthogonal
// Procrustes solve, CSLS retrieval and self-learning refinement.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "canto/embedding.hpp"

namespace canto {

struct AnchorDictionary {
  std::vector<std::pair<int, int>> pairs;  // (id in A, id in B)

  void save(const std::filesystem::path& path, const Vocabulary& vocab_a,
            const Vocabulary& vocab_b) const;
};

// Tokens with identical surface strings in both vocabularies, sorted by
// descending joint frequency (sum of both sides), ties by token string.
// Reserved control tokens are not anchors. Throws
// std::invalid_argument("no anchors") on an empty intersection.
AnchorDictionary build_anchor_dict(const Vocabulary& vocab_a,
                                   const Vocabulary& vocab_b);

// Rows are vectors: a source row x maps to x * W. Orthogonal within 1e-5.
struct MappingMatrix {
  Eigen::MatrixXd w;  // d x d

  double orthogonality_error() const;  // max |WtW - I|
};

struct MappingReport {
  std::size_t anchors_used = 0;
  bool few_anchors_warning = false;  // |anchors| < d
  // Procrustes objective per self-learning iteration, evaluated on that
  // iteration's induced dictionary before and after the re-solve.
  std::vector<std::pair<double, double>> objective_before_after;
};

// Rows are length-normalized then mean-centered before the solve. W minimizes
// sum ||x_i W - y_i||^2 over orthogonal matrices (closed form via SVD of the
// anchor cross-covariance). self_learning_iters > 0 alternates CSLS (k=10)
// dictionary induction with re-solving.
MappingMatrix learn_mapping(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                            const AnchorDictionary& anchors,
                            int self_learning_iters = 0,
                            MappingReport* report = nullptr);

// Normalization used by learn_mapping, exposed for retrieval-side callers:
// length-normalize rows, then mean-center.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m);

// CSLS scores of all mapped source rows against all target rows.
// csls(i, j) = 2 cos(x_i, y_j) - r_y(x_i) - r_x(y_j), k-NN means with k=10.
Eigen::MatrixXd csls_scores(const Eigen::MatrixXd& mapped_x,
                            const Eigen::MatrixXd& y, int k = 10);

// Applies W to every row of x (rows are vectors): out = x * W^T.
EmbeddingMatrix apply_mapping(const EmbeddingMatrix& x, const MappingMatrix& w);

}  // namespace canto
