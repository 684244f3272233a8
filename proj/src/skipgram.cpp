#include "canto/skipgram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canto {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double sgns_example(const Eigen::VectorXd& v, const Eigen::VectorXd& u_pos,
                    const std::vector<Eigen::VectorXd>& u_negs,
                    Eigen::VectorXd* grad_v, Eigen::VectorXd* grad_pos,
                    std::vector<Eigen::VectorXd>* grad_negs) {
  const double s_pos = sigmoid(u_pos.dot(v));
  double loss = -std::log(std::max(s_pos, 1e-300));
  // dL/d(u.v) for the positive term is (s_pos - 1).
  Eigen::VectorXd gv = (s_pos - 1.0) * u_pos;
  if (grad_pos) *grad_pos = (s_pos - 1.0) * v;
  if (grad_negs) grad_negs->assign(u_negs.size(), Eigen::VectorXd());
  for (std::size_t k = 0; k < u_negs.size(); ++k) {
    const double s_neg = sigmoid(u_negs[k].dot(v));
    loss -= std::log(std::max(1.0 - s_neg, 1e-300));
    gv += s_neg * u_negs[k];
    if (grad_negs) (*grad_negs)[k] = s_neg * v;
  }
  if (grad_v) *grad_v = gv;
  return loss;
}

SkipgramTrainer::SkipgramTrainer(std::vector<std::vector<int>> corpus_ids,
                                 Vocabulary vocab, SkipgramConfig config)
    : corpus_(std::move(corpus_ids)), vocab_(std::move(vocab)), cfg_(config) {
  if (vocab_.size() <= Vocabulary::kNumReserved)
    throw std::invalid_argument("skipgram: empty vocabulary");
  if (cfg_.dim < 1 || cfg_.window < 1 || cfg_.negatives < 1)
    throw std::invalid_argument("skipgram: bad hyperparameters");

  // Unigram^0.75 distribution over learned tokens (reserved ids excluded).
  unigram_cdf_.assign(vocab_.size(), 0.0);
  double total = 0.0;
  for (int i = Vocabulary::kNumReserved; i < vocab_.size(); ++i)
    total += std::pow(static_cast<double>(vocab_.frequency(i)), 0.75);
  if (total <= 0.0) throw std::invalid_argument("skipgram: empty vocabulary");
  double acc = 0.0;
  for (int i = 0; i < vocab_.size(); ++i) {
    if (i >= Vocabulary::kNumReserved)
      acc += std::pow(static_cast<double>(vocab_.frequency(i)), 0.75) / total;
    unigram_cdf_[i] = acc;
  }
  unigram_cdf_.back() = 1.0;
}

SkipgramTrainer SkipgramTrainer::from_sentences(
    const std::vector<std::vector<std::string>>& sentences,
    const SkipgramConfig& config) {
  Vocabulary vocab = Vocabulary::build(sentences, config.min_count);
  std::vector<std::vector<int>> ids;
  ids.reserve(sentences.size());
  for (const auto& sent : sentences) {
    std::vector<int> row;
    row.reserve(sent.size());
    for (const auto& tok : sent) {
      int id = vocab.id(tok);
      if (id != Vocabulary::kUnk) row.push_back(id);
    }
    if (!row.empty()) ids.push_back(std::move(row));
  }
  return SkipgramTrainer(std::move(ids), std::move(vocab), config);
}

int SkipgramTrainer::sample_negative(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double r = uni(rng);
  auto it = std::lower_bound(unigram_cdf_.begin(), unigram_cdf_.end(), r);
  int id = static_cast<int>(it - unigram_cdf_.begin());
  return std::max(id, Vocabulary::kNumReserved);
}

EmbeddingMatrix SkipgramTrainer::train(SkipgramReport* report) {
  const int v = vocab_.size();
  const int d = cfg_.dim;
  std::mt19937_64 rng(cfg_.seed);

  Eigen::MatrixXd syn0(v, d);  // input vectors, the published embedding
  Eigen::MatrixXd syn1 = Eigen::MatrixXd::Zero(v, d);
  {
    std::uniform_real_distribution<double> init(-0.5 / d, 0.5 / d);
    for (int i = 0; i < v; ++i)
      for (int j = 0; j < d; ++j) syn0(i, j) = init(rng);
  }

  std::uint64_t total_positions = 0;
  for (const auto& sent : corpus_) total_positions += sent.size();
  const std::uint64_t total_updates =
      std::max<std::uint64_t>(1, total_positions * cfg_.epochs);

  if (report) report->epoch_mean_loss.clear();

  Eigen::VectorXd grad_v(d), grad_pos(d);
  std::vector<Eigen::VectorXd> grad_negs;
  std::vector<Eigen::VectorXd> u_negs;
  std::vector<int> neg_ids;

  std::uint64_t processed = 0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::uint64_t epoch_examples = 0;
    for (const auto& sent : corpus_) {
      const int n = static_cast<int>(sent.size());
      for (int pos = 0; pos < n; ++pos) {
        const double progress =
            static_cast<double>(processed) / static_cast<double>(total_updates);
        const double lr = cfg_.lr * std::max(1.0 - progress, 1e-4);
        ++processed;

        const int center = sent[pos];
        for (int off = -cfg_.window; off <= cfg_.window; ++off) {
          if (off == 0) continue;
          const int ctx_pos = pos + off;
          if (ctx_pos < 0 || ctx_pos >= n) continue;
          const int context = sent[ctx_pos];

          neg_ids.clear();
          u_negs.clear();
          for (int k = 0; k < cfg_.negatives; ++k) {
            int neg = sample_negative(rng);
            if (neg == context) continue;  // skip accidental hits
            neg_ids.push_back(neg);
            u_negs.push_back(syn1.row(neg));
          }

          const Eigen::VectorXd v_center = syn0.row(center);
          const Eigen::VectorXd u_ctx = syn1.row(context);
          const double loss =
              sgns_example(v_center, u_ctx, u_negs, &grad_v, &grad_pos, &grad_negs);
          epoch_loss += loss;
          ++epoch_examples;

          syn0.row(center) -= lr * grad_v.transpose();
          syn1.row(context) -= lr * grad_pos.transpose();
          for (std::size_t k = 0; k < neg_ids.size(); ++k)
            syn1.row(neg_ids[k]) -= lr * grad_negs[k].transpose();
        }
      }
    }
    if (report) {
      report->epoch_mean_loss.push_back(
          epoch_examples ? epoch_loss / static_cast<double>(epoch_examples) : 0.0);
      report->examples += epoch_examples;
    }
  }

  EmbeddingMatrix out;
  out.vocab = vocab_;
  out.vectors = std::move(syn0);
  if (!out.all_finite())
    throw std::runtime_error("skipgram: non-finite embedding values");
  return out;
}

}  // namespace canto
