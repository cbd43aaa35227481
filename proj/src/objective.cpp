#include "zeus/objective.hpp"

#include <cmath>

#include "zeus/common.hpp"

namespace zeus {

void LossConfig::validate() const {
  if (!std::isfinite(lambda_cp) || !std::isfinite(lambda_sep))
    throw UsageError("loss config: lambdas must be finite");
  if (!(sep_threshold > 0.0))
    throw UsageError("loss config: separation threshold must be positive");
}

ClusterStats estimate_stats(Tape& tape, const Tensor& z,
                            const std::vector<int>& labels, int k) {
  if (z.ndim() != 2) throw UsageError("estimate_stats: embeddings must be 2-d");
  int64_t n = z.dim(0);
  if (static_cast<int64_t>(labels.size()) != n)
    throw UsageError("estimate_stats: one label per row required");
  if (k < 1) throw UsageError("estimate_stats: k must be positive");
  std::vector<int64_t> counts(k, 0);
  for (int label : labels) {
    if (label < 0 || label >= k)
      throw UsageError("estimate_stats: label out of range");
    counts[label]++;
  }
  for (int c = 0; c < k; ++c)
    if (counts[c] == 0)
      throw UsageError("estimate_stats: cluster " + std::to_string(c) +
                       " is empty");
  Tensor averager = Tensor::zeros({k, n});
  for (int64_t i = 0; i < n; ++i)
    averager.data()[labels[i] * n + i] = 1.0 / counts[labels[i]];
  ClusterStats stats;
  stats.centroids = tape.matmul(averager, z);
  stats.priors = Tensor::zeros({k});
  stats.log_priors = Tensor::zeros({k});
  for (int c = 0; c < k; ++c) {
    double p = static_cast<double>(counts[c]) / n;
    stats.priors.data()[c] = p;
    stats.log_priors.data()[c] = std::log(p);
  }
  return stats;
}

namespace {

// -|z_i - c_j|^2 + log prior_j, the shared logits of soft_assign/loss_prob.
Tensor assignment_logits(Tape& tape, const Tensor& d2,
                         const ClusterStats& stats) {
  return tape.add_rowvec(tape.scale(d2, -1.0), stats.log_priors);
}

}  // namespace

Tensor soft_assign(Tape& tape, const Tensor& z, const ClusterStats& stats) {
  Tensor d2 = tape.pairwise_sqdist(z, stats.centroids);
  return tape.softmax_rows(assignment_logits(tape, d2, stats));
}

Tensor loss_prob(Tape& tape, const Tensor& z, const ClusterStats& stats,
                 const std::vector<int>& labels) {
  Tensor d2 = tape.pairwise_sqdist(z, stats.centroids);
  Tensor lp = tape.log_softmax_rows(assignment_logits(tape, d2, stats));
  return tape.scale(tape.sum(tape.take_per_row(lp, labels)), -1.0);
}

Tensor loss_compact(Tape& tape, const Tensor& z, const ClusterStats& stats,
                    const std::vector<int>& labels, bool flipped) {
  Tensor d2 = tape.pairwise_sqdist(z, stats.centroids);
  Tensor own = tape.take_per_row(d2, labels);
  Tensor wss = tape.sum(own);
  return flipped ? tape.scale(wss, -1.0) : wss;
}

Tensor loss_separate(Tape& tape, const ClusterStats& stats, double threshold) {
  if (!(threshold > 0.0))
    throw UsageError("loss_separate: threshold must be positive");
  int64_t k = stats.centroids.dim(0);
  Tensor d2 = tape.pairwise_sqdist(stats.centroids, stats.centroids);
  Tensor capped = tape.min_const(d2, threshold);
  Tensor upper = Tensor::zeros({k, k});
  for (int64_t a = 0; a < k; ++a)
    for (int64_t b = a + 1; b < k; ++b) upper.data()[a * k + b] = 1.0;
  return tape.scale(tape.sum(tape.mul(capped, upper)), -1.0);
}

LossTerms total_loss(Tape& tape, const Tensor& z,
                     const std::vector<int>& labels, int k,
                     const LossConfig& cfg) {
  cfg.validate();
  ClusterStats stats = estimate_stats(tape, z, labels, k);
  // the d2 node is shared between the prob and compactness terms
  Tensor d2 = tape.pairwise_sqdist(z, stats.centroids);
  Tensor lp = tape.log_softmax_rows(assignment_logits(tape, d2, stats));
  LossTerms terms;
  terms.prob = tape.scale(tape.sum(tape.take_per_row(lp, labels)), -1.0);
  terms.total = terms.prob;
  bool with_cp = cfg.use_cp;
  bool with_sep = cfg.use_sep;
  if (with_cp) {
    Tensor wss = tape.sum(tape.take_per_row(d2, labels));
    terms.compact = cfg.cp_sign_flipped ? tape.scale(wss, -1.0) : wss;
    if (cfg.lambda_cp != 0.0)
      terms.total =
          tape.add(terms.total, tape.scale(terms.compact, cfg.lambda_cp));
  } else {
    terms.compact = Tensor::scalar(0.0);
  }
  if (with_sep) {
    terms.separate = loss_separate(tape, stats, cfg.sep_threshold);
    if (cfg.lambda_sep != 0.0)
      terms.total =
          tape.add(terms.total, tape.scale(terms.separate, cfg.lambda_sep));
  } else {
    terms.separate = Tensor::scalar(0.0);
  }
  return terms;
}

}  // namespace zeus
