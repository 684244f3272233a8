// Skip-gram with negative sampling, serial and seed-deterministic.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "canto/embedding.hpp"
#include "canto/vocab.hpp"

namespace canto {

struct SkipgramConfig {
  int dim = 512;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double lr = 0.025;
  std::uint64_t min_count = 1;
  std::uint64_t seed = 1;
};

// Loss and gradients of one SGNS example:
//   L = -log sigmoid(u_pos . v) - sum_k log sigmoid(-u_neg_k . v)
// grad_v, grad_pos and grad_negs receive the analytic gradients. Returns L.
// Exposed so the training update shares one code path with the oracle tests.
double sgns_example(const Eigen::VectorXd& v, const Eigen::VectorXd& u_pos,
                    const std::vector<Eigen::VectorXd>& u_negs,
                    Eigen::VectorXd* grad_v, Eigen::VectorXd* grad_pos,
                    std::vector<Eigen::VectorXd>* grad_negs);

struct SkipgramReport {
  std::vector<double> epoch_mean_loss;  // one entry per epoch
  std::uint64_t examples = 0;
};

class SkipgramTrainer {
 public:
  SkipgramTrainer(std::vector<std::vector<int>> corpus_ids, Vocabulary vocab,
                  SkipgramConfig config);

  // Builds the trainer from tokenized text lines (tokens already split).
  static SkipgramTrainer from_sentences(
      const std::vector<std::vector<std::string>>& sentences,
      const SkipgramConfig& config);

  EmbeddingMatrix train(SkipgramReport* report = nullptr);

  const Vocabulary& vocab() const { return vocab_; }

 private:
  int sample_negative(std::mt19937_64& rng) const;

  std::vector<std::vector<int>> corpus_;
  Vocabulary vocab_;
  SkipgramConfig cfg_;
  std::vector<double> unigram_cdf_;  // unigram^0.75 cumulative distribution
};

}  // namespace canto
