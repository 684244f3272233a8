#include "canto/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace canto::ad {

int Tape::push(Mat value, bool requires_grad) {
  Node n;
  n.storage = std::move(value);
  n.value = &n.storage;
  n.requires_grad = grad_enabled_ && requires_grad;
  nodes_.push_back(std::move(n));
  // Re-point at the stored matrix after the move into the deque.
  nodes_.back().value = &nodes_.back().storage;
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::push_ref(const Mat* value, bool requires_grad) {
  Node n;
  n.value = value;
  n.requires_grad = grad_enabled_ && requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Mat& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value->rows(), n.value->cols());
  return n.grad;
}

const Mat* Tape::grad_if_any(int id) const {
  const Node& n = nodes_[id];
  return n.grad.size() == 0 ? nullptr : &n.grad;
}

void Tape::backward_from(int id) {
  if (!grad_enabled_) throw std::logic_error("backward on a no-grad tape");
  if (value(id).size() != 1)
    throw std::logic_error("backward_from requires a scalar node");
  grad(id)(0, 0) = 1.0;
  for (int i = id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward();
  }
}

Var constant(Tape& t, Mat value) { return {&t, t.push(std::move(value), false)}; }

Var leaf(Tape& t, Mat value, bool requires_grad) {
  return {&t, t.push(std::move(value), requires_grad)};
}

Var leaf_ref(Tape& t, const Mat* value, bool requires_grad) {
  return {&t, t.push_ref(value, requires_grad)};
}

namespace {

// Shared boilerplate: value push + requires_grad propagation + closure wiring.
template <typename Backward>
Var unary(Var a, Mat value, Backward bw) {
  Tape& t = *a.tape();
  bool rg = a.requires_grad();
  Var out{&t, t.push(std::move(value), rg)};
  if (t.grad_enabled() && rg) {
    t.set_backward(out.id(), [a, out, bw]() { bw(a, out); });
  }
  return out;
}

template <typename Backward>
Var binary(Var a, Var b, Mat value, Backward bw) {
  Tape& t = *a.tape();
  bool rg = a.requires_grad() || b.requires_grad();
  Var out{&t, t.push(std::move(value), rg)};
  if (t.grad_enabled() && rg) {
    t.set_backward(out.id(), [a, b, out, bw]() { bw(a, b, out); });
  }
  return out;
}

}  // namespace

Var add(Var a, Var b) {
  return binary(a, b, a.val() + b.val(), [](Var a, Var b, Var out) {
    const Mat& g = out.grad();
    if (a.requires_grad()) a.grad() += g;
    if (b.requires_grad()) b.grad() += g;
  });
}

Var sub(Var a, Var b) {
  return binary(a, b, a.val() - b.val(), [](Var a, Var b, Var out) {
    const Mat& g = out.grad();
    if (a.requires_grad()) a.grad() += g;
    if (b.requires_grad()) b.grad() -= g;
  });
}

Var mul(Var a, Var b) {
  return binary(a, b, a.val().cwiseProduct(b.val()), [](Var a, Var b, Var out) {
    const Mat& g = out.grad();
    if (a.requires_grad()) a.grad() += g.cwiseProduct(b.val());
    if (b.requires_grad()) b.grad() += g.cwiseProduct(a.val());
  });
}

Var scale(Var a, double s) {
  return unary(a, a.val() * s, [s](Var a, Var out) {
    a.grad() += out.grad() * s;
  });
}

Var add_rowvec(Var a, Var row) {
  Mat v = a.val();
  v.rowwise() += Eigen::RowVectorXd(row.val().row(0));
  return binary(a, row, std::move(v), [](Var a, Var row, Var out) {
    const Mat& g = out.grad();
    if (a.requires_grad()) a.grad() += g;
    if (row.requires_grad()) row.grad() += g.colwise().sum();
  });
}

Var matmul(Var a, Var b) {
  return binary(a, b, a.val() * b.val(), [](Var a, Var b, Var out) {
    const Mat& g = out.grad();
    if (a.requires_grad()) a.grad() += g * b.val().transpose();
    if (b.requires_grad()) b.grad() += a.val().transpose() * g;
  });
}

Var matmul_nt(Var a, Var b) {
  return binary(a, b, a.val() * b.val().transpose(), [](Var a, Var b, Var out) {
    const Mat& g = out.grad();
    if (a.requires_grad()) a.grad() += g * b.val();
    if (b.requires_grad()) b.grad() += g.transpose() * a.val();
  });
}

Var sigmoid(Var a) {
  Mat v = a.val().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return unary(a, std::move(v), [](Var a, Var out) {
    const Mat& y = out.val();
    a.grad() += out.grad().cwiseProduct(
        y.cwiseProduct(Mat::Ones(y.rows(), y.cols()) - y));
  });
}

Var tanh_(Var a) {
  Mat v = a.val().unaryExpr([](double x) { return std::tanh(x); });
  return unary(a, std::move(v), [](Var a, Var out) {
    const Mat& y = out.val();
    a.grad() += out.grad().cwiseProduct(
        Mat::Ones(y.rows(), y.cols()) - y.cwiseProduct(y));
  });
}

Var relu(Var a) {
  Mat v = a.val().cwiseMax(0.0);
  return unary(a, std::move(v), [](Var a, Var out) {
    const Mat& x = a.val();
    a.grad() += out.grad().cwiseProduct(
        x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  });
}

Var softmax_rows(Var a) {
  Mat v = a.val();
  for (int i = 0; i < v.rows(); ++i) {
    double m = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - m).exp();
    v.row(i) /= v.row(i).sum();
  }
  return unary(a, std::move(v), [](Var a, Var out) {
    const Mat& y = out.val();
    const Mat& g = out.grad();
    Mat gy = g.cwiseProduct(y);
    Eigen::VectorXd row_dot = gy.rowwise().sum();
    a.grad() += gy - y.cwiseProduct(row_dot.replicate(1, y.cols()));
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty");
  Tape& t = *rows.front().tape();
  const long cols = rows.front().cols();
  Mat v(static_cast<long>(rows.size()), cols);
  bool rg = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.row(static_cast<long>(i)) = rows[i].val().row(0);
    rg = rg || rows[i].requires_grad();
  }
  Var out{&t, t.push(std::move(v), rg)};
  if (t.grad_enabled() && rg) {
    std::vector<Var> captured = rows;
    t.set_backward(out.id(), [captured, out]() {
      const Mat& g = out.grad();
      for (std::size_t i = 0; i < captured.size(); ++i)
        if (captured[i].requires_grad())
          captured[i].grad() += g.row(static_cast<long>(i));
    });
  }
  return out;
}

Var slice_rows(Var a, int first, int count) {
  Mat v = a.val().middleRows(first, count);
  return unary(a, std::move(v), [first, count](Var a, Var out) {
    a.grad().middleRows(first, count) += out.grad();
  });
}

Var slice_cols(Var a, int first, int count) {
  Mat v = a.val().middleCols(first, count);
  return unary(a, std::move(v), [first, count](Var a, Var out) {
    a.grad().middleCols(first, count) += out.grad();
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  Tape& t = *parts.front().tape();
  long rows = parts.front().rows();
  long cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Mat v(rows, cols);
  long at = 0;
  for (const Var& p : parts) {
    v.middleCols(at, p.cols()) = p.val();
    at += p.cols();
  }
  Var out{&t, t.push(std::move(v), rg)};
  if (t.grad_enabled() && rg) {
    std::vector<Var> captured = parts;
    t.set_backward(out.id(), [captured, out]() {
      const Mat& g = out.grad();
      long at = 0;
      for (const Var& p : captured) {
        if (p.requires_grad()) p.grad() += g.middleCols(at, p.cols());
        at += p.cols();
      }
    });
  }
  return out;
}

Var gather_rows(Var a, std::vector<int> ids) {
  Mat v(static_cast<long>(ids.size()), a.cols());
  for (std::size_t i = 0; i < ids.size(); ++i)
    v.row(static_cast<long>(i)) = a.val().row(ids[i]);
  return unary(a, std::move(v), [ids = std::move(ids)](Var a, Var out) {
    const Mat& g = out.grad();
    Mat& ga = a.grad();
    for (std::size_t i = 0; i < ids.size(); ++i)
      ga.row(ids[i]) += g.row(static_cast<long>(i));
  });
}

Var layernorm_rows(Var a, Var gain, Var bias, double eps) {
  const Mat& x = a.val();
  const long n = x.cols();
  Mat xhat(x.rows(), n);
  Eigen::VectorXd inv_sigma(x.rows());
  for (long i = 0; i < x.rows(); ++i) {
    double mean = x.row(i).mean();
    Eigen::RowVectorXd centered = x.row(i).array() - mean;
    double var = centered.squaredNorm() / static_cast<double>(n);
    double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma(i) = inv;
    xhat.row(i) = centered * inv;
  }
  Mat v = xhat;
  for (long i = 0; i < v.rows(); ++i)
    v.row(i) = v.row(i).cwiseProduct(gain.val().row(0)) + bias.val().row(0);

  Tape& t = *a.tape();
  bool rg = a.requires_grad() || gain.requires_grad() || bias.requires_grad();
  Var out{&t, t.push(std::move(v), rg)};
  if (t.grad_enabled() && rg) {
    t.set_backward(out.id(), [a, gain, bias, out, xhat = std::move(xhat),
                              inv_sigma = std::move(inv_sigma), n]() {
      const Mat& g = out.grad();
      if (bias.requires_grad()) bias.grad() += g.colwise().sum();
      if (gain.requires_grad())
        gain.grad() += g.cwiseProduct(xhat).colwise().sum();
      if (a.requires_grad()) {
        Mat& ga = a.grad();
        for (long i = 0; i < g.rows(); ++i) {
          Eigen::RowVectorXd dxhat =
              g.row(i).cwiseProduct(gain.val().row(0));
          double m1 = dxhat.mean();
          double m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
          ga.row(i) += (dxhat.array() - m1 - xhat.row(i).array() * m2).matrix() *
                       inv_sigma(i);
        }
      }
    });
  }
  return out;
}

Var dropout(Var a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  Mat mask(a.rows(), a.cols());
  const double scale = 1.0 / (1.0 - p);
  for (long i = 0; i < mask.rows(); ++i)
    for (long j = 0; j < mask.cols(); ++j)
      mask(i, j) = keep(rng) ? scale : 0.0;
  Mat v = a.val().cwiseProduct(mask);
  return unary(a, std::move(v), [mask = std::move(mask)](Var a, Var out) {
    a.grad() += out.grad().cwiseProduct(mask);
  });
}

Var sum_all(Var a) {
  Mat v(1, 1);
  v(0, 0) = a.val().sum();
  return unary(a, std::move(v), [](Var a, Var out) {
    a.grad().array() += out.grad()(0, 0);
  });
}

Var cross_entropy_sum(Var logits, std::vector<int> targets) {
  const Mat& z = logits.val();
  if (static_cast<long>(targets.size()) != z.rows())
    throw std::invalid_argument("cross_entropy: length mismatch");
  Mat probs(z.rows(), z.cols());
  double loss = 0.0;
  for (long i = 0; i < z.rows(); ++i) {
    double m = z.row(i).maxCoeff();
    Eigen::RowVectorXd e = (z.row(i).array() - m).exp();
    double sum = e.sum();
    probs.row(i) = e / sum;
    loss -= (z(i, targets[i]) - m - std::log(sum));
  }
  Mat v(1, 1);
  v(0, 0) = loss;
  return unary(logits, std::move(v),
               [targets = std::move(targets), probs = std::move(probs)](
                   Var logits, Var out) {
                 const double g = out.grad()(0, 0);
                 Mat d = probs;
                 for (long i = 0; i < d.rows(); ++i) d(i, targets[i]) -= 1.0;
                 logits.grad() += g * d;
               });
}

}  // namespace canto::ad
