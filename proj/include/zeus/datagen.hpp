#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zeus/rng.hpp"

namespace zeus {

struct PriorConfig {
  int k_range[2] = {2, 10};
  int samples_per_component_range[2] = {50, 800};
  int max_numeric_dim = 30;              // numeric dim ~ U[2, max]
  double min_sep_range[2] = {0.5, 1.0};  // per component, 2-Wasserstein
  double eigenvalue_range[2] = {0.005, 0.05};
  double full_rank_prob = 0.25;   // eigenvalues from the upper half range
  double degenerate_prob = 0.2;   // all but ceil(d/2) from the bottom 10%
  double categorical_chance = 0.3;
  int max_categorical_vars = 3;
  int category_count_range[2] = {2, 5};
  double dirichlet_alpha = 0.5;
  int transform_depth_range[2] = {3, 6};
  double spectral_norm_range[2] = {0.5, 0.97};
  double transformed_fraction = 0.5;
  uint64_t seed = 0;

  void validate() const;
};

struct MixtureComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov_sqrt;    // Q * sqrt(Lambda), so cov = cov_sqrt cov_sqrt^T
  Eigen::VectorXd eigenvalues;
  double min_sep = 0.0;
  int count = 0;
};

struct MixtureSpec {
  int k = 0;
  int dim = 0;
  std::vector<MixtureComponent> components;
  double min_sep = 0.0;  // smallest per-component floor
};

// 2-Wasserstein distance between two mixture components (Gaussians).
double w2_distance(const MixtureComponent& a, const MixtureComponent& b);

// Draws mixture shape and parameters: K, dimension, per-component counts,
// spectra, and means placed incrementally so every pair keeps at least the
// larger of the two separation floors (measured in W2).
MixtureSpec sample_mixture(const PriorConfig& cfg, Rng& rng);

enum class Provenance { gaussian, transformed };

enum class NormMode { global, per_column };

struct Dataset {
  Eigen::MatrixXd x;              // rows shuffled; numeric block first
  std::vector<int> labels;        // [0, k)
  std::vector<int> column_kinds;  // -1 numeric, >= 0 one-hot group
  int k = 0;
  Provenance provenance = Provenance::gaussian;
  uint64_t seed = 0;
};

// Dataset plus the generating mixture, for distribution-level checks.
struct GeneratedDataset {
  Dataset data;
  MixtureSpec mixture;
  bool has_categoricals = false;
  std::vector<double> warp_spectral_norms;  // empty for gaussian draws
};

// Standardizes numeric columns then maps them into [-1, 1]; global mode uses
// one affine map across all numeric columns (relative scales survive),
// per_column rescales each column separately. One-hot columns pass through.
void finalize_to_unit_range(Eigen::MatrixXd& x,
                            const std::vector<int>& column_kinds,
                            NormMode mode = NormMode::global);

// Invertible-style residual warp used for the transformed provenance:
// standardize, append the one-hot cluster indicator, run depth residual
// layers x + gelu(x W) with the spectral norm of W held below 1, then PCA
// back to the numeric dimension.
// spectral_norms, when given, receives the exact largest singular value of
// each rescaled residual weight matrix
Eigen::MatrixXd residual_warp(const Eigen::MatrixXd& x,
                              const std::vector<int>& labels, int k,
                              const PriorConfig& cfg, Rng& rng,
                              std::vector<double>* spectral_norms = nullptr);

GeneratedDataset sample_dataset_full(const PriorConfig& cfg, uint64_t seed,
                                     std::optional<Provenance> forced = {});
Dataset sample_dataset(const PriorConfig& cfg, uint64_t seed,
                       std::optional<Provenance> forced = {});

}  // namespace zeus
