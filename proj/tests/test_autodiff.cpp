#include <doctest.h>

#include <functional>
#include <random>

#include "canto/autodiff.hpp"

using namespace canto;
using ad::Mat;
using ad::Tape;
using ad::Var;

namespace {

Mat random_mat(std::mt19937_64& rng, long r, long c, double s = 1.0) {
  std::normal_distribution<double> dist(0.0, s);
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = dist(rng);
  return m;
}

// Central finite differences of a scalar-valued graph w.r.t. one leaf.
void check_gradient(
    const std::function<Var(Tape&, const std::vector<Mat>&)>& build,
    std::vector<Mat> inputs, double eps = 1e-6, double tol = 1e-5) {
  Tape tape;
  Var out = build(tape, inputs);
  REQUIRE(out.val().size() == 1);
  tape.backward_from(out.id());

  // Leaves are created first, in input order.
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    const Mat& analytic = tape.grad(static_cast<int>(which));
    for (long i = 0; i < inputs[which].rows(); ++i) {
      for (long j = 0; j < inputs[which].cols(); ++j) {
        std::vector<Mat> plus = inputs, minus = inputs;
        plus[which](i, j) += eps;
        minus[which](i, j) -= eps;
        Tape tp, tm;
        double fp = build(tp, plus).val()(0, 0);
        double fm = build(tm, minus).val()(0, 0);
        double fd = (fp - fm) / (2 * eps);
        CHECK(std::abs(fd - analytic(i, j)) /
                  std::max(1.0, std::abs(fd)) < tol);
      }
    }
  }
}

}  // namespace

TEST_CASE("matmul add sigmoid tanh relu mul chain gradients") {
  std::mt19937_64 rng(1);
  std::vector<Mat> inputs = {random_mat(rng, 3, 4), random_mat(rng, 4, 3),
                             random_mat(rng, 3, 3)};
  check_gradient(
      [](Tape& t, const std::vector<Mat>& in) {
        Var a = ad::leaf(t, in[0], true);
        Var b = ad::leaf(t, in[1], true);
        Var c = ad::leaf(t, in[2], true);
        Var x = ad::matmul(a, b);
        Var y = ad::mul(ad::sigmoid(x), ad::tanh_(c));
        Var z = ad::add(y, ad::relu(ad::sub(x, c)));
        return ad::sum_all(ad::scale(z, 0.5));
      },
      inputs);
}

TEST_CASE("matmul_nt and add_rowvec gradients") {
  std::mt19937_64 rng(2);
  std::vector<Mat> inputs = {random_mat(rng, 3, 5), random_mat(rng, 4, 5),
                             random_mat(rng, 1, 4)};
  check_gradient(
      [](Tape& t, const std::vector<Mat>& in) {
        Var a = ad::leaf(t, in[0], true);
        Var b = ad::leaf(t, in[1], true);
        Var bias = ad::leaf(t, in[2], true);
        return ad::sum_all(ad::tanh_(ad::add_rowvec(ad::matmul_nt(a, b), bias)));
      },
      inputs);
}

TEST_CASE("softmax_rows gradient and normalization") {
  std::mt19937_64 rng(3);
  std::vector<Mat> inputs = {random_mat(rng, 4, 6, 2.0),
                             random_mat(rng, 4, 6)};
  check_gradient(
      [](Tape& t, const std::vector<Mat>& in) {
        Var a = ad::leaf(t, in[0], true);
        Var w = ad::leaf(t, in[1], true);
        return ad::sum_all(ad::mul(ad::softmax_rows(a), w));
      },
      inputs);

  Tape tape;
  Var a = ad::leaf(tape, random_mat(rng, 100, 7, 3.0), false);
  Var s = ad::softmax_rows(a);
  for (long i = 0; i < s.val().rows(); ++i) {
    CHECK(s.val().row(i).minCoeff() >= 0.0);
    CHECK(std::abs(s.val().row(i).sum() - 1.0) < 1e-6);
  }
}

TEST_CASE("stack slice concat gather gradients") {
  std::mt19937_64 rng(4);
  std::vector<Mat> inputs = {random_mat(rng, 1, 4), random_mat(rng, 1, 4),
                             random_mat(rng, 6, 4)};
  check_gradient(
      [](Tape& t, const std::vector<Mat>& in) {
        Var r0 = ad::leaf(t, in[0], true);
        Var r1 = ad::leaf(t, in[1], true);
        Var table = ad::leaf(t, in[2], true);
        Var stacked = ad::stack_rows({r0, r1, r0});  // reuse r0: grads add
        Var gathered = ad::gather_rows(table, {0, 3, 3});
        Var cat = ad::concat_cols({stacked, gathered});
        Var sl = ad::slice_cols(ad::slice_rows(cat, 0, 3), 2, 5);
        return ad::sum_all(ad::mul(sl, sl));
      },
      inputs);
}

TEST_CASE("layernorm gradient") {
  std::mt19937_64 rng(5);
  std::vector<Mat> inputs = {random_mat(rng, 3, 8, 2.0), random_mat(rng, 1, 8),
                             random_mat(rng, 1, 8)};
  check_gradient(
      [](Tape& t, const std::vector<Mat>& in) {
        Var x = ad::leaf(t, in[0], true);
        Var g = ad::leaf(t, in[1], true);
        Var b = ad::leaf(t, in[2], true);
        Var n = ad::layernorm_rows(x, g, b);
        return ad::sum_all(ad::mul(n, n));
      },
      inputs, 1e-6, 1e-4);
}

TEST_CASE("cross_entropy_sum value and gradient") {
  // Hand-computed 2-token example over V=3.
  Mat logits(2, 3);
  logits << 1.0, 2.0, 3.0, 0.0, 0.0, 0.0;
  std::vector<int> targets = {2, 0};
  Tape tape;
  Var l = ad::leaf(tape, logits, true);
  Var loss = ad::cross_entropy_sum(l, targets);
  // Row 1: -log softmax(3 | 1,2,3); row 2: -log(1/3).
  double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  double expected = (lse - 3.0) + std::log(3.0);
  CHECK(std::abs(loss.val()(0, 0) - expected) < 1e-9);

  std::mt19937_64 rng(6);
  std::vector<Mat> inputs = {random_mat(rng, 4, 5, 2.0)};
  check_gradient(
      [](Tape& t, const std::vector<Mat>& in) {
        Var l2 = ad::leaf(t, in[0], true);
        return ad::cross_entropy_sum(l2, {1, 3, 0, 2});
      },
      inputs);
}

TEST_CASE("no-grad tape computes values without requiring gradients") {
  Tape tape(false);
  Var a = ad::leaf(tape, Mat::Ones(2, 2), true);
  Var b = ad::sigmoid(ad::matmul(a, a));
  CHECK(b.val().rows() == 2);
  CHECK_FALSE(b.requires_grad());
  CHECK_THROWS(tape.backward_from(b.id()));
}

TEST_CASE("dropout keeps expectation and scales the surviving entries") {
  std::mt19937_64 rng(7);
  Tape tape;
  Var a = ad::leaf(tape, Mat::Ones(50, 50), true);
  Var d = ad::dropout(a, 0.25, rng);
  double mean = d.val().mean();
  CHECK(mean > 0.9);
  CHECK(mean < 1.1);
  for (long i = 0; i < 50; ++i)
    for (long j = 0; j < 50; ++j) {
      double v = d.val()(i, j);
      CHECK((v == 0.0 || std::abs(v - 1.0 / 0.75) < 1e-12));
    }
}

TEST_CASE("gradient accumulates across multiple uses of one leaf") {
  Tape tape;
  Var a = ad::leaf(tape, Mat::Ones(1, 1) * 3.0, true);
  Var out = ad::add(ad::mul(a, a), a);  // f = a^2 + a, f' = 2a + 1 = 7
  tape.backward_from(out.id());
  CHECK(a.grad()(0, 0) == doctest::Approx(7.0));
}
