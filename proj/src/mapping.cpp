#include "canto/mapping.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace canto {

namespace {

// Rows are vectors throughout: solve argmin_W ||Xa W - Ya||_F^2 over
// orthogonal W, i.e. maximize tr(W^T C) with C = Xa^T Ya; W = U V^T for
// C = U S V^T.
Eigen::MatrixXd procrustes(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& ya) {
  Eigen::MatrixXd c = xa.transpose() * ya;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

double objective(const Eigen::MatrixXd& w, const Eigen::MatrixXd& xa,
                 const Eigen::MatrixXd& ya) {
  return (xa * w - ya).squaredNorm();
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
  Eigen::MatrixXd out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i]);
  return out;
}

// Mean cosine to the k nearest rows of `other`, per row of `rows`.
// Inputs are length-normalized, so cosine is a plain dot product.
Eigen::VectorXd knn_mean_cos(const Eigen::MatrixXd& rows,
                             const Eigen::MatrixXd& other, int k) {
  Eigen::MatrixXd cos = rows * other.transpose();
  const int n = static_cast<int>(cos.rows());
  const int m = static_cast<int>(cos.cols());
  const int kk = std::min(k, m);
  Eigen::VectorXd out(n);
  std::vector<double> row(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) row[j] = cos(i, j);
    std::nth_element(row.begin(), row.begin() + (kk - 1), row.end(),
                     std::greater<double>());
    double sum = 0.0;
    for (int j = 0; j < kk; ++j) sum += row[j];
    out(i) = sum / kk;
  }
  return out;
}

Eigen::MatrixXd length_normalize(Eigen::MatrixXd m) {
  for (int i = 0; i < m.rows(); ++i) {
    double norm = m.row(i).norm();
    if (norm > 0) m.row(i) /= norm;
  }
  return m;
}

}  // namespace

void AnchorDictionary::save(const std::filesystem::path& path,
                            const Vocabulary& vocab_a,
                            const Vocabulary& vocab_b) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("anchors: cannot write " + path.string());
  for (const auto& [a, b] : pairs)
    out << vocab_a.token(a) << "\t" << vocab_b.token(b) << "\n";
}

AnchorDictionary build_anchor_dict(const Vocabulary& vocab_a,
                                   const Vocabulary& vocab_b) {
  if (vocab_a.size() <= Vocabulary::kNumReserved ||
      vocab_b.size() <= Vocabulary::kNumReserved)
    throw std::invalid_argument("build_anchor_dict: empty vocabulary");

  struct Entry {
    std::uint64_t joint_freq;
    std::string token;
    int id_a, id_b;
  };
  std::vector<Entry> entries;
  for (int a = Vocabulary::kNumReserved; a < vocab_a.size(); ++a) {
    const std::string& tok = vocab_a.token(a);
    if (!vocab_b.contains(tok)) continue;
    int b = vocab_b.id(tok);
    if (b < Vocabulary::kNumReserved) continue;
    entries.push_back({vocab_a.frequency(a) + vocab_b.frequency(b), tok, a, b});
  }
  if (entries.empty()) throw std::invalid_argument("no anchors");

  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    if (x.joint_freq != y.joint_freq) return x.joint_freq > y.joint_freq;
    return x.token < y.token;
  });

  AnchorDictionary dict;
  dict.pairs.reserve(entries.size());
  for (const auto& e : entries) dict.pairs.push_back({e.id_a, e.id_b});
  return dict;
}

double MappingMatrix::orthogonality_error() const {
  Eigen::MatrixXd wtw = w.transpose() * w;
  return (wtw - Eigen::MatrixXd::Identity(w.rows(), w.cols()))
      .cwiseAbs()
      .maxCoeff();
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = length_normalize(m);
  Eigen::RowVectorXd mean = out.colwise().mean();
  out.rowwise() -= mean;
  return out;
}

Eigen::MatrixXd csls_scores(const Eigen::MatrixXd& mapped_x,
                            const Eigen::MatrixXd& y, int k) {
  Eigen::MatrixXd xn = length_normalize(mapped_x);
  Eigen::MatrixXd yn = length_normalize(y);
  Eigen::VectorXd r_x = knn_mean_cos(xn, yn, k);  // hubness of each source row
  Eigen::VectorXd r_y = knn_mean_cos(yn, xn, k);
  Eigen::MatrixXd cos = xn * yn.transpose();
  Eigen::MatrixXd out = 2.0 * cos;
  out.colwise() -= r_x;
  out.rowwise() -= r_y.transpose();
  return out;
}

MappingMatrix learn_mapping(const EmbeddingMatrix& x, const EmbeddingMatrix& y,
                            const AnchorDictionary& anchors,
                            int self_learning_iters, MappingReport* report) {
  if (x.dim() != y.dim())
    throw std::invalid_argument("learn_mapping: dimension mismatch");
  if (anchors.pairs.empty())
    throw std::invalid_argument("learn_mapping: no anchors");

  const int d = x.dim();
  Eigen::MatrixXd xn = normalize_rows(x.vectors);
  Eigen::MatrixXd yn = normalize_rows(y.vectors);

  std::vector<int> ia, ib;
  for (const auto& [a, b] : anchors.pairs) {
    if (a < 0 || a >= x.vocab.size() || b < 0 || b >= y.vocab.size())
      throw std::invalid_argument("learn_mapping: anchor id out of range");
    ia.push_back(a);
    ib.push_back(b);
  }

  if (report) {
    report->anchors_used = anchors.pairs.size();
    report->few_anchors_warning = static_cast<int>(anchors.pairs.size()) < d;
    report->objective_before_after.clear();
  }

  MappingMatrix mapping;
  mapping.w = procrustes(gather_rows(xn, ia), gather_rows(yn, ib));

  for (int iter = 0; iter < self_learning_iters; ++iter) {
    // Induce a fresh dictionary with CSLS over the mapped space.
    Eigen::MatrixXd mapped = xn * mapping.w;
    Eigen::MatrixXd scores = csls_scores(mapped, yn, 10);
    std::vector<int> ja, jb;
    for (int i = Vocabulary::kNumReserved; i < scores.rows(); ++i) {
      int best;
      scores.row(i).maxCoeff(&best);
      if (best < Vocabulary::kNumReserved) continue;
      ja.push_back(i);
      jb.push_back(best);
    }
    if (ja.empty()) break;
    Eigen::MatrixXd xa = gather_rows(xn, ja);
    Eigen::MatrixXd ya = gather_rows(yn, jb);
    double before = objective(mapping.w, xa, ya);
    mapping.w = procrustes(xa, ya);
    double after = objective(mapping.w, xa, ya);
    if (report) report->objective_before_after.push_back({before, after});
  }
  return mapping;
}

EmbeddingMatrix apply_mapping(const EmbeddingMatrix& x, const MappingMatrix& w) {
  EmbeddingMatrix out;
  out.vocab = x.vocab;
  // The solve ran on normalized rows, so mapped vectors live in that space;
  // the target side must be normalized the same way by the consumer.
  out.vectors = normalize_rows(x.vectors) * w.w;
  return out;
}

}  // namespace canto
