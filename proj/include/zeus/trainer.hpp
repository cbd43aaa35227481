#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "zeus/checkpoint.hpp"
#include "zeus/datagen.hpp"
#include "zeus/encoder.hpp"
#include "zeus/runconfig.hpp"
#include "zeus/tensor.hpp"

namespace zeus {

// Linear ramp 0 -> lr_peak over warmup_steps, then cosine decay to 0 at
// total_steps.
double lr_at(int64_t step, const TrainConfig& cfg);

// Which provenance the training stream draws at a given step: gauss_ratio
// gaussian datasets, then transformed_ratio transformed ones, repeating.
Provenance provenance_at(int64_t step, const TrainConfig& cfg);

// Adam over a fixed parameter list. step() consumes whatever gradients
// backward() left on the tensors and zeroes them afterwards, so gradient
// accumulation is just running several backwards before one step.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double beta1, double beta2, double eps);

  // grad_scale rescales the accumulated gradients first (1/#datasets);
  // clip_norm > 0 then applies global-norm clipping on top.
  void step(double lr, double clip_norm = 0.0, double grad_scale = 1.0);

  int64_t updates() const { return updates_; }
  const std::vector<std::vector<double>>& m() const { return m_; }
  const std::vector<std::vector<double>>& v() const { return v_; }
  void load_state(std::vector<std::vector<double>> m,
                  std::vector<std::vector<double>> v, int64_t updates);

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  int64_t updates_ = 0;
};

struct PretrainResult {
  Checkpoint final_state;
  Checkpoint best_state;   // highest mean validation ARI seen
  double best_val_ari = 0.0;
  std::vector<double> losses;  // mean per-point training loss, one per step
};

// Streams synthetic datasets from the prior (one dataset per step, seeded by
// a counter so the stream is deterministic and resumable), optimizes the
// encoder with Adam under the warmup-cosine schedule, and scores validation
// ARI on a held-out pool every eval_every steps. Writes one log line per
// eval point: "step,loss,val_ari_gauss,val_ari_transf". resume continues
// the step counter from a previously saved state.
PretrainResult pretrain(const RunConfig& cfg, std::ostream* log = nullptr,
                        const Checkpoint* resume = nullptr);

enum class AssignMethod { kmeans, gmm };

struct Assignment {
  std::vector<int> labels;
  Eigen::MatrixXd soft;       // n x k, row-stochastic; one-hot for kmeans
  Eigen::MatrixXd embedding;  // n x repr_dim after min-max normalization
};

// Inference pipeline: prepare -> encoder -> per-column min-max to [-1,1] ->
// k-means (hard labels) or identity-covariance GMM (soft assignments).
Assignment embed_and_cluster(const Encoder& enc, const Eigen::MatrixXd& x,
                             const std::vector<int>& column_kinds, int k,
                             AssignMethod method, const EvalOptions& opts);

}  // namespace zeus
