#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace zeus {

// Adjusted Rand index between two labelings of the same points. Label values
// are arbitrary ints; both-trivial partitions score 1. All pair counts are
// exact 64-bit integers, only the final ratio is floating point.
double ari(const std::vector<int>& a, const std::vector<int>& b);

// Max-weight assignment on a square nonnegative score matrix; returns
// column assigned to each row.
std::vector<int> hungarian_match(const Eigen::MatrixXd& score);

// Permutes the columns of a row-stochastic soft assignment so cluster j
// lines up with the true class it overlaps most, by Hungarian matching on
// A[j][c] = sum_i soft[i][j] * [truth[i] == c]. Requires as many clusters
// as classes.
Eigen::MatrixXd match_columns(const Eigen::MatrixXd& soft,
                              const std::vector<int>& truth);

// Mean squared distance between soft assignments (rows summing to 1) and
// one-hot truth. Columns must already be matched to classes.
double brier(const Eigen::MatrixXd& soft, const std::vector<int>& truth);

struct MethodSummary {
  std::string name;
  double mean = 0.0;
  double mean_rank = 0.0;
  int top1 = 0;  // datasets where the method is strictly best
  int top3 = 0;  // datasets where it is in the top 3 with no ties
};

// Aggregates a datasets x methods score table the way benchmark reports are
// usually presented: per-method mean, tie-averaged mean rank, and clear
// top-1 / top-3 counts (a tie disqualifies the tied methods).
std::vector<MethodSummary> benchmark_aggregate(
    const Eigen::MatrixXd& scores, const std::vector<std::string>& methods,
    bool higher_is_better);

}  // namespace zeus
