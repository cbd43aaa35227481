#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "zeus/common.hpp"
#include "zeus/metrics.hpp"
#include "zeus/rng.hpp"

using namespace zeus;

namespace {

// Independent ARI oracle: counts agreeing/disagreeing pairs directly in
// O(n^2) and applies the adjusted formula from the same exact integers.
double ari_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  int64_t n = static_cast<int64_t>(a.size());
  int64_t both = 0, in_a = 0, in_b = 0;
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = i + 1; j < n; ++j) {
      bool sa = a[i] == a[j];
      bool sb = b[i] == b[j];
      if (sa && sb) both++;
      if (sa) in_a++;
      if (sb) in_b++;
    }
  int64_t total = n * (n - 1) / 2;
  double expected = static_cast<double>(in_a) * in_b / total;
  double maximum = 0.5 * (in_a + in_b);
  if (maximum - expected == 0.0) return 1.0;
  return (both - expected) / (maximum - expected);
}

double assignment_oracle(const Eigen::MatrixXd& score) {
  int n = static_cast<int>(score.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += score(i, perm[i]);
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<int> random_labels(Rng& rng, int n, int k) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = static_cast<int>(rng.uniform_int(0, k - 1));
  return v;
}

}  // namespace

TEST_CASE("ari hand example") {
  // pairs: (1,2) same in a only, (3,4) same in a only, rest differ
  std::vector<int> a{0, 0, 1, 1};
  std::vector<int> b{0, 1, 0, 1};
  CHECK(ari(a, b) == doctest::Approx(-0.5));
  CHECK(ari_oracle(a, b) == doctest::Approx(-0.5));
}

TEST_CASE("ari identical, permuted, and trivial partitions") {
  std::vector<int> a{0, 0, 1, 1, 2, 2};
  std::vector<int> renamed{5, 5, 3, 3, 9, 9};
  CHECK(ari(a, a) == doctest::Approx(1.0));
  CHECK(ari(a, renamed) == doctest::Approx(1.0));
  std::vector<int> ones(6, 0);
  CHECK(ari(ones, ones) == doctest::Approx(1.0));
  std::vector<int> singls{0, 1, 2, 3, 4, 5};
  CHECK(ari(singls, singls) == doctest::Approx(1.0));
}

TEST_CASE("ari equals pair-counting oracle on random labelings") {
  Rng rng(101);
  for (int rep = 0; rep < 200; ++rep) {
    int n = static_cast<int>(rng.uniform_int(2, 40));
    int k1 = static_cast<int>(rng.uniform_int(1, 6));
    int k2 = static_cast<int>(rng.uniform_int(1, 6));
    auto a = random_labels(rng, n, k1);
    auto b = random_labels(rng, n, k2);
    CHECK(ari(a, b) == ari_oracle(a, b));  // bit-exact, same integer counts
  }
}

TEST_CASE("ari input validation") {
  CHECK_THROWS_AS(ari({0, 1}, {0}), UsageError);
  CHECK_THROWS_AS(ari({0}, {0}), UsageError);
}

TEST_CASE("hungarian matches brute force on random matrices") {
  Rng rng(202);
  for (int rep = 0; rep < 300; ++rep) {
    int n = static_cast<int>(rng.uniform_int(1, 6));
    Eigen::MatrixXd score(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) score(i, j) = rng.uniform();
    std::vector<int> assign = hungarian_match(score);
    std::vector<char> seen(n, 0);
    double got = 0.0;
    for (int i = 0; i < n; ++i) {
      REQUIRE(assign[i] >= 0);
      REQUIRE(assign[i] < n);
      REQUIRE_FALSE(seen[assign[i]]);
      seen[assign[i]] = 1;
      got += score(i, assign[i]);
    }
    CHECK(got == doctest::Approx(assignment_oracle(score)).epsilon(1e-12));
  }
}

TEST_CASE("hungarian rejects bad input") {
  Eigen::MatrixXd bad(2, 3);
  bad.setZero();
  CHECK_THROWS_AS(hungarian_match(bad), UsageError);
  Eigen::MatrixXd neg(2, 2);
  neg << 1, -1, 0, 1;
  CHECK_THROWS_AS(hungarian_match(neg), UsageError);
}

TEST_CASE("brier zero for perfect onehot and validation") {
  Eigen::MatrixXd soft(3, 2);
  soft << 1, 0, 0, 1, 1, 0;
  std::vector<int> truth{0, 1, 0};
  CHECK(brier(soft, truth) == doctest::Approx(0.0));
  // uniform prediction over 2 classes: each row contributes 0.25+0.25
  Eigen::MatrixXd uni = Eigen::MatrixXd::Constant(3, 2, 0.5);
  CHECK(brier(uni, truth) == doctest::Approx(0.5));
  Eigen::MatrixXd badsum(1, 2);
  badsum << 0.7, 0.6;
  CHECK_THROWS_AS(brier(badsum, {0}), UsageError);
}

TEST_CASE("match_columns lines clusters up with classes") {
  // cluster 0 is class 1 and cluster 1 is class 0
  Eigen::MatrixXd soft(4, 2);
  soft << 0.9, 0.1, 0.8, 0.2, 0.1, 0.9, 0.2, 0.8;
  std::vector<int> truth{1, 1, 0, 0};
  Eigen::MatrixXd matched = match_columns(soft, truth);
  CHECK(matched(0, 1) == doctest::Approx(0.9));
  CHECK(matched(2, 0) == doctest::Approx(0.9));
  CHECK(brier(matched, truth) < brier(soft, truth));
}

TEST_CASE("benchmark aggregation ranks and top counts") {
  // method 0 strictly dominates on every dataset
  Eigen::MatrixXd scores(4, 3);
  scores << 0.9, 0.5, 0.1, 0.8, 0.2, 0.3, 0.7, 0.6, 0.5, 0.9, 0.1, 0.2;
  auto rep = benchmark_aggregate(scores, {"a", "b", "c"}, true);
  CHECK(rep[0].mean_rank == doctest::Approx(1.0));
  CHECK(rep[0].top1 == 4);
  CHECK(rep[0].top3 == 4);
  CHECK(rep[0].mean == doctest::Approx(scores.col(0).mean()));

  // two identical methods share rank 1.5 and never count as clear top-1
  Eigen::MatrixXd tied(2, 2);
  tied << 0.5, 0.5, 0.3, 0.3;
  auto rep2 = benchmark_aggregate(tied, {"a", "b"}, true);
  CHECK(rep2[0].mean_rank == doctest::Approx(1.5));
  CHECK(rep2[1].mean_rank == doctest::Approx(1.5));
  CHECK(rep2[0].top1 == 0);
  CHECK(rep2[0].top3 == 0);

  // lower-is-better orientation flips the ranking
  auto rep3 = benchmark_aggregate(scores, {"a", "b", "c"}, false);
  CHECK(rep3[0].mean_rank == doctest::Approx(3.0));
}
