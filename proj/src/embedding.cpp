#include "canto/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace canto {

void EmbeddingMatrix::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("embedding: cannot write " + path.string());
  const int v = vocab.size();
  const int d = dim();
  out << v << " " << d << "\n";
  char buf[32];
  for (int i = 0; i < v; ++i) {
    out << vocab.token(i);
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), " %.6f", vectors(i, j));
      out << buf;
    }
    out << "\n";
  }
}

EmbeddingMatrix EmbeddingMatrix::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("embedding: cannot read " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("embedding: empty file " + path.string());
  std::istringstream hs(header);
  long long v = -1, d = -1;
  if (!(hs >> v >> d) || v <= 0 || d <= 0)
    throw std::runtime_error("embedding: malformed header in " + path.string());

  EmbeddingMatrix m;
  m.vectors.resize(v, d);
  std::string line;
  long long row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= v) throw std::runtime_error("embedding: more rows than header declares");
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    for (long long j = 0; j < d; ++j) {
      double x;
      if (!(ls >> x))
        throw std::runtime_error("embedding: row length mismatch at token " + token);
      m.vectors(row, j) = x;
    }
    double extra;
    if (ls >> extra)
      throw std::runtime_error("embedding: row length mismatch at token " + token);
    if (row < Vocabulary::kNumReserved) {
      if (token != m.vocab.token(static_cast<int>(row)))
        throw std::runtime_error("embedding: reserved token mismatch: " + token);
    } else {
      m.vocab.add(token);
    }
    ++row;
  }
  if (row != v)
    throw std::runtime_error("embedding: fewer rows than header declares");
  return m;
}

bool EmbeddingMatrix::all_finite() const {
  return vectors.allFinite();
}

PivotPrivateResult compose_pivot_private(const EmbeddingMatrix& shared,
                                         const EmbeddingMatrix& private_lang) {
  if (shared.dim() != 256 || private_lang.dim() != 256)
    throw std::invalid_argument("pivot-private: both halves must be 256-dim");

  PivotPrivateResult result;
  // Output vocabulary is the union, private tokens first then shared-only.
  Vocabulary& vocab = result.embedding.vocab;
  for (int i = Vocabulary::kNumReserved; i < private_lang.vocab.size(); ++i)
    vocab.add(private_lang.vocab.token(i), private_lang.vocab.frequency(i));
  for (int i = Vocabulary::kNumReserved; i < shared.vocab.size(); ++i)
    if (!vocab.contains(shared.vocab.token(i)))
      vocab.add(shared.vocab.token(i), shared.vocab.frequency(i));

  result.embedding.vectors = Eigen::MatrixXd::Zero(vocab.size(), 512);
  for (int i = 0; i < vocab.size(); ++i) {
    const std::string& tok = vocab.token(i);
    if (shared.vocab.contains(tok)) {
      result.embedding.vectors.row(i).head(256) =
          shared.vectors.row(shared.vocab.id(tok));
    } else {
      ++result.missing_shared;
    }
    if (private_lang.vocab.contains(tok)) {
      result.embedding.vectors.row(i).tail(256) =
          private_lang.vectors.row(private_lang.vocab.id(tok));
    } else {
      ++result.missing_private;
    }
  }
  return result;
}

PivotPrivatePair compose_pivot_private(const EmbeddingMatrix& shared,
                                       const EmbeddingMatrix& private_l1,
                                       const EmbeddingMatrix& private_l2) {
  return {compose_pivot_private(shared, private_l1),
          compose_pivot_private(shared, private_l2)};
}

}  // namespace canto
