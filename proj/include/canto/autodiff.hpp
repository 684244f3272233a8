// Reverse-mode automatic differentiation over Eigen matrices. One tape per
// forward/backward pass; nodes hold values, gradients accumulate on demand.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <vector>

namespace canto::ad {

using Mat = Eigen::MatrixXd;

class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  struct Node {
    Mat storage;             // owned value (unused for ref nodes)
    const Mat* value = nullptr;
    Mat grad;                // lazily allocated to the value's shape
    std::function<void()> backward;
    bool requires_grad = false;
  };

  int push(Mat value, bool requires_grad);
  // References external storage (parameters); caller keeps it alive and
  // unchanged for the tape's lifetime.
  int push_ref(const Mat* value, bool requires_grad);

  const Mat& value(int id) const { return *nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Gradient of node `id`, allocated as zeros on first touch.
  Mat& grad(int id);
  // Null when no gradient has flowed into `id` yet.
  const Mat* grad_if_any(int id) const;

  void set_backward(int id, std::function<void()> fn) {
    nodes_[id].backward = std::move(fn);
  }

  // Seeds d(node)/d(node) = 1 (node must be 1x1) and runs the tape backward.
  void backward_from(int id);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;  // deque keeps node references stable
  bool grad_enabled_;
};

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Mat& val() const { return tape_->value(id_); }
  Mat& grad() const { return tape_->grad(id_); }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  long rows() const { return val().rows(); }
  long cols() const { return val().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Leaves.
Var constant(Tape& t, Mat value);
Var leaf(Tape& t, Mat value, bool requires_grad);
Var leaf_ref(Tape& t, const Mat* value, bool requires_grad);

// Elementwise and linear algebra.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // Hadamard
Var scale(Var a, double s);
Var add_rowvec(Var a, Var row);  // broadcast a 1xN row over all rows
Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T

// Nonlinearities.
Var sigmoid(Var a);
Var tanh_(Var a);
Var relu(Var a);
Var softmax_rows(Var a);

// Structure.
Var stack_rows(const std::vector<Var>& rows);  // k vars of 1xN -> kxN
Var slice_rows(Var a, int first, int count);
Var slice_cols(Var a, int first, int count);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(Var a, std::vector<int> ids);

// Row-normalization with learnable gain/bias (both 1xN).
Var layernorm_rows(Var a, Var gain, Var bias, double eps = 1e-5);

// Inverted dropout with keep-probability 1-p; identity when p == 0.
Var dropout(Var a, double p, std::mt19937_64& rng);

// Sum over all entries -> 1x1.
Var sum_all(Var a);

// Sum of per-token negative log-likelihoods of `targets` under row-wise
// softmax of `logits` (T x V). Returns a 1x1 node.
Var cross_entropy_sum(Var logits, std::vector<int> targets);

}  // namespace canto::ad
