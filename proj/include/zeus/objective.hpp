#pragma once

#include <vector>

#include "zeus/tensor.hpp"

namespace zeus {

struct LossConfig {
  double lambda_cp = 1.0;
  double lambda_sep = 1.0;
  double sep_threshold = 10.0;
  bool use_cp = true;
  bool use_sep = true;
  // Flips the compactness term to reward spread instead of penalizing it;
  // kept as a switch for ablations of the sign convention.
  bool cp_sign_flipped = false;

  void validate() const;
};

// Per-cluster statistics from labeled embeddings. Centroids are built with
// a constant averaging matrix, so gradients flow back into the embeddings;
// the priors (cluster frequencies) are constants.
struct ClusterStats {
  Tensor centroids;   // k x d
  Tensor priors;      // k, positive, sums to 1
  Tensor log_priors;  // k
};

// Requires every label in [0, k) to appear at least once.
ClusterStats estimate_stats(Tape& tape, const Tensor& z,
                            const std::vector<int>& labels, int k);

// Row-stochastic soft assignment: p[i][j] proportional to
// priors[j] * exp(-|z_i - c_j|^2), computed in log space with max
// subtraction.
Tensor soft_assign(Tape& tape, const Tensor& z, const ClusterStats& stats);

// Negative log-likelihood of the true labels under soft_assign.
Tensor loss_prob(Tape& tape, const Tensor& z, const ClusterStats& stats,
                 const std::vector<int>& labels);

// Within-cluster sum of squared distances to the own centroid (flipped:
// its negation).
Tensor loss_compact(Tape& tape, const Tensor& z, const ClusterStats& stats,
                    const std::vector<int>& labels, bool flipped = false);

// Negated sum over unordered centroid pairs of min(|c_a - c_b|^2, threshold):
// pushes centroids apart until they are threshold apart.
Tensor loss_separate(Tape& tape, const ClusterStats& stats, double threshold);

struct LossTerms {
  Tensor total;
  Tensor prob;
  Tensor compact;   // scalar 0 when disabled
  Tensor separate;  // scalar 0 when disabled
};

// total = prob + lambda_cp * compact + lambda_sep * separate. A term with
// lambda 0 or its switch off is left out of the graph entirely, so the
// total collapses to exactly the remaining nodes (with everything off,
// total IS the prob tensor).
LossTerms total_loss(Tape& tape, const Tensor& z,
                     const std::vector<int>& labels, int k,
                     const LossConfig& cfg);

}  // namespace zeus
