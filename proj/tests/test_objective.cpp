#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "zeus/cluster.hpp"
#include "zeus/common.hpp"
#include "zeus/objective.hpp"
#include "zeus/rng.hpp"

using namespace zeus;
using zeus::testing::max_grad_error;

namespace {

Tensor random_embeddings(int n, int d, uint64_t seed, bool rg = true) {
  Rng rng(seed);
  Tensor z = Tensor::zeros({n, d}, rg);
  for (int64_t i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  return z;
}

std::vector<int> cyclic_labels(int n, int k) {
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % k;
  return labels;
}

// Straight-line reimplementation of the loss pieces with plain loops,
// used as an independent oracle.
struct OracleOut {
  double prob, compact, separate;
  std::vector<std::vector<double>> soft;
};

OracleOut oracle(const Tensor& z, const std::vector<int>& labels, int k,
                 double threshold) {
  int n = static_cast<int>(z.dim(0)), d = static_cast<int>(z.dim(1));
  std::vector<std::vector<double>> cent(k, std::vector<double>(d, 0.0));
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    counts[labels[i]]++;
    for (int j = 0; j < d; ++j) cent[labels[i]][j] += z.at(i, j);
  }
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) cent[c][j] /= counts[c];
  auto dist2 = [&](int i, int c) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      double t = z.at(i, j) - cent[c][j];
      s += t * t;
    }
    return s;
  };
  OracleOut out{0.0, 0.0, 0.0, {}};
  for (int i = 0; i < n; ++i) {
    std::vector<double> logit(k);
    for (int c = 0; c < k; ++c)
      logit[c] = std::log(static_cast<double>(counts[c]) / n) - dist2(i, c);
    double mx = *std::max_element(logit.begin(), logit.end());
    double total = 0.0;
    for (int c = 0; c < k; ++c) total += std::exp(logit[c] - mx);
    std::vector<double> p(k);
    for (int c = 0; c < k; ++c) p[c] = std::exp(logit[c] - mx) / total;
    out.soft.push_back(p);
    out.prob -= logit[labels[i]] - (mx + std::log(total));
    out.compact += dist2(i, labels[i]);
  }
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        double t = cent[a][j] - cent[b][j];
        s += t * t;
      }
      out.separate -= std::min(s, threshold);
    }
  return out;
}

}  // namespace

TEST_CASE("loss terms match the loop oracle") {
  int n = 24, d = 3, k = 4;
  Tensor z = random_embeddings(n, d, 5, false);
  std::vector<int> labels = cyclic_labels(n, k);
  OracleOut expect = oracle(z, labels, k, 10.0);
  Tape tape;
  LossConfig cfg;
  LossTerms terms = total_loss(tape, z, labels, k, cfg);
  CHECK(terms.prob.value() == doctest::Approx(expect.prob).epsilon(1e-12));
  CHECK(terms.compact.value() ==
        doctest::Approx(expect.compact).epsilon(1e-12));
  CHECK(terms.separate.value() ==
        doctest::Approx(expect.separate).epsilon(1e-12));
  CHECK(terms.total.value() ==
        doctest::Approx(expect.prob + expect.compact + expect.separate)
            .epsilon(1e-12));
  ClusterStats stats = estimate_stats(tape, z, labels, k);
  Tensor soft = soft_assign(tape, z, stats);
  for (int i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (int c = 0; c < k; ++c) {
      CHECK(soft.at(i, c) ==
            doctest::Approx(expect.soft[i][c]).epsilon(1e-12));
      rowsum += soft.at(i, c);
    }
    CHECK(rowsum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("hand-computed two-cluster example") {
  // z = 0, 0.2, 1.0, 1.2 with labels 0 0 1 1: centroids 0.1 and 1.1
  Tensor z({4, 1}, {0.0, 0.2, 1.0, 1.2});
  std::vector<int> labels{0, 0, 1, 1};
  Tape tape;
  ClusterStats stats = estimate_stats(tape, z, labels, 2);
  CHECK(stats.centroids.at(0, 0) == doctest::Approx(0.1));
  CHECK(stats.centroids.at(1, 0) == doctest::Approx(1.1));
  CHECK(stats.priors.data()[0] == doctest::Approx(0.5));
  // compactness: 4 * 0.01
  Tensor cp = loss_compact(tape, z, stats, labels);
  CHECK(cp.value() == doctest::Approx(0.04).epsilon(1e-12));
  // separation: centroid gap^2 = 1, below threshold 10
  Tensor sep = loss_separate(tape, stats, 10.0);
  CHECK(sep.value() == doctest::Approx(-1.0).epsilon(1e-12));
  // with threshold 0.5 the cap binds
  Tensor sep2 = loss_separate(tape, stats, 0.5);
  CHECK(sep2.value() == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("soft assignment equals identity-covariance mixture responsibilities") {
  int n = 40, d = 5, k = 3;
  Tensor z = random_embeddings(n, d, 9, false);
  std::vector<int> labels = cyclic_labels(n, k);
  labels[0] = 1;  // uneven priors
  Tape tape;
  ClusterStats stats = estimate_stats(tape, z, labels, k);
  Tensor soft = soft_assign(tape, z, stats);
  Eigen::MatrixXd zm(n, d), means(k, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) zm(i, j) = z.at(i, j);
  for (int c = 0; c < k; ++c)
    for (int j = 0; j < d; ++j) means(c, j) = stats.centroids.at(c, j);
  Eigen::VectorXd weights(k);
  for (int c = 0; c < k; ++c) weights(c) = stats.priors.data()[c];
  Eigen::MatrixXd resp = gmm_identity_responsibilities(zm, means, weights);
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < k; ++c)
      worst = std::max(worst, std::abs(resp(i, c) - soft.at(i, c)));
  CHECK(worst < 1e-9);
}

TEST_CASE("gradcheck through the full loss") {
  int n = 15, d = 4, k = 3;
  Tensor z = random_embeddings(n, d, 13, true);
  std::vector<int> labels = cyclic_labels(n, k);
  LossConfig cfg;
  auto build = [&](Tape& t) {
    return total_loss(t, z, labels, k, cfg).total;
  };
  CHECK(max_grad_error(build, {z}) < 1e-5);
}

TEST_CASE("gradcheck when the separation cap binds") {
  // two far clusters so |c0-c1|^2 > threshold and min_const clips
  Tensor z({6, 2},
           {0.0, 0.1, 0.2, -0.1, 0.1, 0.0, 9.0, 9.1, 9.2, 8.9, 9.1, 9.0},
           true);
  std::vector<int> labels{0, 0, 0, 1, 1, 1};
  LossConfig cfg;
  auto build = [&](Tape& t) {
    return total_loss(t, z, labels, 2, cfg).total;
  };
  CHECK(max_grad_error(build, {z}) < 1e-5);
}

TEST_CASE("disabled or zero-weight terms leave the graph") {
  int n = 12, d = 3, k = 2;
  Tensor z = random_embeddings(n, d, 21, true);
  std::vector<int> labels = cyclic_labels(n, k);
  LossConfig all_off;
  all_off.use_cp = false;
  all_off.use_sep = false;
  Tape t1;
  LossTerms off = total_loss(t1, z, labels, k, all_off);
  CHECK(off.total.same_buffer(off.prob));
  CHECK(off.compact.value() == 0.0);
  CHECK(off.separate.value() == 0.0);

  LossConfig zeros;
  zeros.lambda_cp = 0.0;
  zeros.lambda_sep = 0.0;
  Tape t2;
  LossTerms zw = total_loss(t2, z, labels, k, zeros);
  CHECK(zw.total.same_buffer(zw.prob));  // bitwise identical by construction
  CHECK(zw.compact.value() > 0.0);       // still reported

  Tape t3;
  Tensor direct = loss_prob(t3, z, estimate_stats(t3, z, labels, k), labels);
  CHECK(zw.total.value() == direct.value());
}

TEST_CASE("ablation switches give distinct objectives") {
  int n = 18, d = 3, k = 3;
  Tensor z = random_embeddings(n, d, 33, false);
  std::vector<int> labels = cyclic_labels(n, k);
  auto value_for = [&](bool cp, bool sep, bool flipped) {
    LossConfig cfg;
    cfg.use_cp = cp;
    cfg.use_sep = sep;
    cfg.cp_sign_flipped = flipped;
    Tape t;
    return total_loss(t, z, labels, k, cfg).total.value();
  };
  double full = value_for(true, true, false);
  double no_cp = value_for(false, true, false);
  double no_sep = value_for(true, false, false);
  double prob_only = value_for(false, false, false);
  double flipped = value_for(true, true, true);
  CHECK(full != no_cp);
  CHECK(full != no_sep);
  CHECK(full != prob_only);
  CHECK(no_cp != no_sep);
  CHECK(no_cp != prob_only);
  CHECK(no_sep != prob_only);
  // flipped compactness mirrors the term around the rest of the loss
  CHECK(flipped == doctest::Approx(2.0 * no_cp - full).epsilon(1e-12));
}

TEST_CASE("estimate_stats validates labels") {
  Tensor z = random_embeddings(6, 2, 1, false);
  Tape t;
  CHECK_THROWS_AS(estimate_stats(t, z, {0, 0, 0, 1, 1}, 2), UsageError);
  CHECK_THROWS_AS(estimate_stats(t, z, {0, 0, 0, 0, 0, 2}, 2), UsageError);
  CHECK_THROWS_AS(estimate_stats(t, z, {0, 0, 0, 0, 0, 0}, 2), UsageError);
  CHECK_THROWS_AS(estimate_stats(t, z, {0, 0, 0, 0, 0, -1}, 1), UsageError);
}

TEST_CASE("gradients flow through centroids to every embedding row") {
  int n = 9, d = 2, k = 3;
  Tensor z = random_embeddings(n, d, 55, true);
  std::vector<int> labels = cyclic_labels(n, k);
  Tape t;
  LossConfig cfg;
  LossTerms terms = total_loss(t, z, labels, k, cfg);
  z.zero_grad();
  t.backward(terms.total);
  bool any_zero_row = false;
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    for (int j = 0; j < d; ++j)
      norm += z.grad()[i * d + j] * z.grad()[i * d + j];
    if (norm == 0.0) any_zero_row = true;
  }
  CHECK_FALSE(any_zero_row);
}
