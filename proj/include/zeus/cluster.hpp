#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace zeus {

struct KMeansConfig {
  int k = 2;
  int n_init = 100;
  int max_iter = 300;
  double tol = 1e-6;  // relative inertia improvement
  uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // k x d
  double inertia = 0.0;
  std::vector<double> inertia_history;  // best restart, one entry per iteration
};

// Lloyd's algorithm with k-means++ seeding, best of n_init restarts by
// inertia. Empty clusters are reseeded at the point farthest from its
// center. Inertia is checked to be non-increasing within 1e-12 per step.
KMeansResult kmeans(const Eigen::MatrixXd& x, const KMeansConfig& cfg);

enum class GmmCovariance { full, identity };

struct GmmConfig {
  int k = 2;
  GmmCovariance covariance = GmmCovariance::full;
  int n_init = 50;
  int max_iter = 200;
  double tol = 1e-7;  // relative log-likelihood improvement
  double reg_covar = 1e-6;
  uint64_t seed = 0;
};

struct GmmResult {
  Eigen::MatrixXd resp;    // n x k responsibilities
  std::vector<int> labels;
  Eigen::MatrixXd means;   // k x d
  std::vector<Eigen::MatrixXd> covariances;  // empty in identity regime
  Eigen::VectorXd weights;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_history;  // best restart
};

// EM for a Gaussian mixture. The full regime fits means, full covariances
// (reg_covar added to the diagonal) and weights. The identity regime fixes
// every covariance to the shared isotropic one implied by exp(-|x-mu|^2)
// soft assignments and fits means and weights only. The per-iteration
// log-likelihood is recorded in log_likelihood_history; it is monotone up
// to floating point except when the reg_covar ridge binds on degenerate
// clusters, so no runtime monotonicity error is raised.
GmmResult gmm_em(const Eigen::MatrixXd& x, const GmmConfig& cfg);

// Responsibilities of the identity regime in closed form:
// r[i][j] proportional to w[j] * exp(-|x_i - mu_j|^2), normalized per row.
Eigen::MatrixXd gmm_identity_responsibilities(const Eigen::MatrixXd& x,
                                              const Eigen::MatrixXd& means,
                                              const Eigen::VectorXd& weights);

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd axes;  // n_components x d, orthonormal rows
  Eigen::VectorXd explained_variance;
};

// PCA via SVD of the centered data matrix. Component signs are fixed so the
// largest-magnitude loading of each axis is positive.
PcaModel pca_fit(const Eigen::MatrixXd& x, int n_components);
Eigen::MatrixXd pca_apply(const PcaModel& model, const Eigen::MatrixXd& x);

// Model-input preparation: numeric columns (kind -1) are standardized then
// min-max mapped to [-1, 1]; one-hot columns (kind >= 0) pass through.
// The result is padded with zero columns up to width, or reduced with PCA
// when wider. Constant columns map to 0.
Eigen::MatrixXd prepare(const Eigen::MatrixXd& x,
                        const std::vector<int>& column_kinds, int width);

enum class BaselineScaling { standard, scaled };

// Preprocessing for the classical baselines: standardization only, or the
// same standardize + [-1, 1] scaling the encoder input gets.
Eigen::MatrixXd prepare_baseline(const Eigen::MatrixXd& x,
                                 const std::vector<int>& column_kinds,
                                 BaselineScaling mode);

// Per-column min-max to [-1, 1]; constant columns map to 0.
Eigen::MatrixXd minmax_columns(const Eigen::MatrixXd& x);

}  // namespace zeus
