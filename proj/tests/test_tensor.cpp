#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "zeus/common.hpp"
#include "zeus/rng.hpp"
#include "zeus/tensor.hpp"

using namespace zeus;
using zeus::testing::max_grad_error;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, bool rg = true,
                     double scale = 1.0) {
  Tensor t = Tensor::zeros(shape, rg);
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = scale * rng.normal();
  return t;
}

}  // namespace

TEST_CASE("matmul known values") {
  Tape tape;
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {1, 1});
  Tensor c = tape.matmul(a, b);
  CHECK(c.at(0, 0) == doctest::Approx(3.0));
  CHECK(c.at(1, 0) == doctest::Approx(7.0));
  CHECK_FALSE(c.requires_grad());
  CHECK(tape.size() == 0);  // no-grad path records nothing
}

TEST_CASE("matmul shape mismatch throws") {
  Tape tape;
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({2, 2}, {1, 0, 0, 1});
  CHECK_THROWS_AS(tape.matmul(a, b), UsageError);
}

TEST_CASE("backward on non-scalar throws") {
  Tape tape;
  Tensor a = Tensor::zeros({2, 2}, true);
  Tensor b = tape.scale(a, 2.0);
  CHECK_THROWS_AS(tape.backward(b), UsageError);
}

TEST_CASE("gelu exact values") {
  Tape tape;
  Tensor x({3}, {0.0, 100.0, -100.0});
  Tensor y = tape.gelu(x);
  CHECK(y.data()[0] == doctest::Approx(0.0));
  CHECK(y.data()[1] == doctest::Approx(100.0));
  CHECK(y.data()[2] == doctest::Approx(0.0));
  // gelu(1) = 0.5 * (1 + erf(1/sqrt(2)))
  Tensor one({1}, {1.0});
  CHECK(tape.gelu(one).value() ==
        doctest::Approx(0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)))));
}

TEST_CASE("softmax rows sum to one and shift invariance") {
  Rng rng(7);
  Tensor x = random_tensor({5, 8}, rng, false, 3.0);
  Tape tape;
  Tensor p = tape.softmax_rows(x);
  for (int64_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < 8; ++j) s += p.at(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tensor shifted = Tensor::zeros({5, 8});
  for (int64_t i = 0; i < 5; ++i)
    for (int64_t j = 0; j < 8; ++j)
      shifted.data()[i * 8 + j] = x.at(i, j) + 1000.0;
  Tensor p2 = tape.softmax_rows(shifted);
  for (int64_t i = 0; i < p.size(); ++i)
    CHECK(p.data()[i] == doctest::Approx(p2.data()[i]).epsilon(1e-12));
}

TEST_CASE("log_softmax matches log of softmax") {
  Rng rng(11);
  Tensor x = random_tensor({4, 6}, rng, false, 2.0);
  Tape tape;
  Tensor p = tape.softmax_rows(x);
  Tensor lp = tape.log_softmax_rows(x);
  for (int64_t i = 0; i < x.size(); ++i)
    CHECK(lp.data()[i] == doctest::Approx(std::log(p.data()[i])).epsilon(1e-10));
}

TEST_CASE("cross entropy gradient equals softmax minus onehot") {
  // loss = -log p_y for one row; d loss / d logits = p - onehot(y)
  Rng rng(3);
  Tensor logits = random_tensor({1, 5}, rng, true, 2.0);
  std::vector<int> y{2};
  Tape tape;
  Tensor lp = tape.log_softmax_rows(logits);
  Tensor picked = tape.take_per_row(lp, y);
  Tensor loss = tape.scale(tape.sum(picked), -1.0);
  logits.zero_grad();
  tape.backward(loss);
  Tape t2;
  Tensor p = t2.softmax_rows(logits);
  for (int64_t j = 0; j < 5; ++j) {
    double expect = p.data()[j] - (j == y[0] ? 1.0 : 0.0);
    CHECK(logits.grad()[j] == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("gradcheck elementwise and matmul chain") {
  Rng rng(17);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor v = random_tensor({2}, rng);
  auto build = [&](Tape& t) {
    Tensor m = t.matmul(a, b);
    Tensor s = t.add_rowvec(m, v);
    Tensor g = t.gelu(s);
    return t.sum(t.mul(g, g));
  };
  CHECK(max_grad_error(build, {a, b, v}) < 1e-5);
}

TEST_CASE("gradcheck softmax and log_softmax") {
  Rng rng(23);
  Tensor x = random_tensor({4, 5}, rng);
  Tensor w = random_tensor({4, 5}, rng, false);
  auto build_soft = [&](Tape& t) {
    return t.sum(t.mul(t.softmax_rows(x), w));
  };
  CHECK(max_grad_error(build_soft, {x}) < 1e-5);
  auto build_logsoft = [&](Tape& t) {
    return t.sum(t.mul(t.log_softmax_rows(x), w));
  };
  CHECK(max_grad_error(build_logsoft, {x}) < 1e-5);
}

TEST_CASE("gradcheck layer norm") {
  Rng rng(29);
  Tensor x = random_tensor({3, 6}, rng);
  Tensor g = random_tensor({6}, rng);
  Tensor b = random_tensor({6}, rng);
  Tensor w = random_tensor({3, 6}, rng, false);
  auto build = [&](Tape& t) {
    return t.sum(t.mul(t.layer_norm_rows(x, g, b), w));
  };
  CHECK(max_grad_error(build, {x, g, b}) < 1e-5);
}

TEST_CASE("gradcheck multihead attention") {
  Rng rng(31);
  Tensor q = random_tensor({5, 8}, rng);
  Tensor k = random_tensor({5, 8}, rng);
  Tensor v = random_tensor({5, 8}, rng);
  Tensor w = random_tensor({5, 8}, rng, false);
  auto build = [&](Tape& t) {
    return t.sum(t.mul(t.multihead_attention(q, k, v, 2), w));
  };
  CHECK(max_grad_error(build, {q, k, v}) < 1e-5);
}

TEST_CASE("gradcheck pairwise sqdist including aliased args") {
  Rng rng(37);
  Tensor a = random_tensor({4, 3}, rng);
  Tensor b = random_tensor({2, 3}, rng);
  Tensor w = random_tensor({4, 2}, rng, false);
  auto build = [&](Tape& t) {
    return t.sum(t.mul(t.pairwise_sqdist(a, b), w));
  };
  CHECK(max_grad_error(build, {a, b}) < 1e-5);

  Tensor ws = random_tensor({4, 4}, rng, false);
  auto build_self = [&](Tape& t) {
    return t.sum(t.mul(t.pairwise_sqdist(a, a), ws));
  };
  CHECK(max_grad_error(build_self, {a}) < 1e-5);
}

TEST_CASE("gradcheck min_const away from the kink") {
  Tensor x({4}, {0.5, 3.0, 9.0, 21.0}, true);
  auto build = [&](Tape& t) { return t.sum(t.min_const(x, 10.0)); };
  CHECK(max_grad_error(build, {x}) < 1e-5);
  Tape t;
  Tensor y = t.min_const(x, 10.0);
  CHECK(y.data()[3] == doctest::Approx(10.0));
}

TEST_CASE("gradcheck transpose, sub, scale, mul_rowvec, take_per_row") {
  Rng rng(41);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 3}, rng);
  Tensor v = random_tensor({3}, rng);
  std::vector<int> idx{2, 0, 1, 2};
  auto build = [&](Tape& t) {
    Tensor d = t.sub(t.transpose(a), b);
    Tensor m = t.mul_rowvec(d, v);
    Tensor picked = t.take_per_row(m, idx);
    return t.scale(t.sum(picked), 1.7);
  };
  CHECK(max_grad_error(build, {a, b, v}) < 1e-5);
}

TEST_CASE("gradients accumulate across shared nodes") {
  // f(x) = sum(x*x) + 3*sum(x*x) reuses the same node twice: grad = 8x
  Tensor x({2}, {1.5, -2.0}, true);
  Tape t;
  Tensor sq = t.mul(x, x);
  Tensor loss = t.add(t.sum(sq), t.scale(t.sum(sq), 3.0));
  x.zero_grad();
  t.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(8.0 * 1.5));
  CHECK(x.grad()[1] == doctest::Approx(8.0 * -2.0));
}

TEST_CASE("leaf gradients accumulate across tapes until zeroed") {
  Tensor x({1}, {2.0}, true);
  for (int rep = 0; rep < 2; ++rep) {
    Tape t;
    Tensor loss = t.sum(t.mul(x, x));
    t.backward(loss);
  }
  CHECK(x.grad()[0] == doctest::Approx(8.0));  // two backwards of d(x^2)=4
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("take_per_row rejects out of range index") {
  Tape t;
  Tensor a = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(t.take_per_row(a, {0, 3}), UsageError);
  CHECK_THROWS_AS(t.take_per_row(a, {0}), UsageError);
}
