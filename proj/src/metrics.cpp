#include "zeus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "zeus/common.hpp"

namespace zeus {

namespace {

// Compacts arbitrary label values to 0..C-1.
std::vector<int> compact_labels(const std::vector<int>& raw, int* n_classes) {
  std::unordered_map<int, int> ids;
  std::vector<int> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(raw[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  *n_classes = static_cast<int>(ids.size());
  return out;
}

int64_t choose2(int64_t n) { return n * (n - 1) / 2; }

}  // namespace

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw UsageError("ari: label vectors differ in length");
  int64_t n = static_cast<int64_t>(a.size());
  if (n < 2) throw UsageError("ari: need at least two points");
  int ca = 0, cb = 0;
  std::vector<int> la = compact_labels(a, &ca);
  std::vector<int> lb = compact_labels(b, &cb);
  std::vector<int64_t> table(static_cast<size_t>(ca) * cb, 0);
  std::vector<int64_t> ra(ca, 0), rb(cb, 0);
  for (int64_t i = 0; i < n; ++i) {
    table[static_cast<size_t>(la[i]) * cb + lb[i]]++;
    ra[la[i]]++;
    rb[lb[i]]++;
  }
  int64_t sum_ij = 0, sum_a = 0, sum_b = 0;
  for (int64_t v : table) sum_ij += choose2(v);
  for (int64_t v : ra) sum_a += choose2(v);
  for (int64_t v : rb) sum_b += choose2(v);
  int64_t total = choose2(n);
  double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) /
                    static_cast<double>(total);
  double maximum = 0.5 * (static_cast<double>(sum_a) + static_cast<double>(sum_b));
  double denom = maximum - expected;
  // denom == 0 only when both partitions are trivial in the same way
  // (all-singletons or single-cluster); they agree perfectly then.
  if (denom == 0.0) return 1.0;
  return (static_cast<double>(sum_ij) - expected) / denom;
}

std::vector<int> hungarian_match(const Eigen::MatrixXd& score) {
  if (score.rows() != score.cols() || score.rows() == 0)
    throw UsageError("hungarian_match: matrix must be square and non-empty");
  if ((score.array() < 0.0).any())
    throw UsageError("hungarian_match: scores must be nonnegative");
  int n = static_cast<int>(score.rows());
  // Minimize cost = max - score with the potential-based O(n^3) algorithm.
  Eigen::MatrixXd cost = score.maxCoeff() - score.array();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

Eigen::MatrixXd match_columns(const Eigen::MatrixXd& soft,
                              const std::vector<int>& truth) {
  if (static_cast<size_t>(soft.rows()) != truth.size())
    throw UsageError("match_columns: row count must equal label count");
  int k = static_cast<int>(soft.cols());
  for (int t : truth)
    if (t < 0 || t >= k)
      throw UsageError("match_columns: class labels must lie in [0, clusters)");
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < soft.rows(); ++i)
    overlap.col(truth[i]) += soft.row(i).transpose();
  std::vector<int> assign = hungarian_match(overlap);
  Eigen::MatrixXd out(soft.rows(), k);
  for (int j = 0; j < k; ++j) out.col(assign[j]) = soft.col(j);
  return out;
}

double brier(const Eigen::MatrixXd& soft, const std::vector<int>& truth) {
  if (static_cast<size_t>(soft.rows()) != truth.size())
    throw UsageError("brier: row count must equal label count");
  if (soft.rows() == 0) throw UsageError("brier: empty input");
  for (Eigen::Index i = 0; i < soft.rows(); ++i) {
    if (std::abs(soft.row(i).sum() - 1.0) > 1e-6)
      throw UsageError("brier: row " + std::to_string(i) + " does not sum to 1");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < soft.rows(); ++i) {
    if (truth[i] < 0 || truth[i] >= soft.cols())
      throw UsageError("brier: label out of range");
    for (Eigen::Index c = 0; c < soft.cols(); ++c) {
      double y = (c == truth[i]) ? 1.0 : 0.0;
      double d = soft(i, c) - y;
      total += d * d;
    }
  }
  return total / static_cast<double>(soft.rows());
}

std::vector<MethodSummary> benchmark_aggregate(
    const Eigen::MatrixXd& scores, const std::vector<std::string>& methods,
    bool higher_is_better) {
  int n_data = static_cast<int>(scores.rows());
  int n_methods = static_cast<int>(scores.cols());
  if (n_methods != static_cast<int>(methods.size()))
    throw UsageError("benchmark_aggregate: method name count mismatch");
  if (n_data == 0 || n_methods == 0)
    throw UsageError("benchmark_aggregate: empty score table");
  std::vector<MethodSummary> out(n_methods);
  for (int m = 0; m < n_methods; ++m) {
    out[m].name = methods[m];
    out[m].mean = scores.col(m).mean();
  }
  for (int d = 0; d < n_data; ++d) {
    for (int m = 0; m < n_methods; ++m) {
      double s = scores(d, m);
      int better = 0, ties = 0;
      for (int o = 0; o < n_methods; ++o) {
        if (o == m) continue;
        double so = scores(d, o);
        bool is_better = higher_is_better ? so > s : so < s;
        if (is_better)
          better++;
        else if (so == s)
          ties++;
      }
      // Fractional rank: ties share the average of their rank span.
      out[m].mean_rank += better + 1 + ties * 0.5;
      if (ties == 0 && better == 0) out[m].top1++;
      if (ties == 0 && better < 3) out[m].top3++;
    }
  }
  for (int m = 0; m < n_methods; ++m) out[m].mean_rank /= n_data;
  return out;
}

}  // namespace zeus
