#include "zeus/datagen.hpp"

#include <cmath>

#include "zeus/cluster.hpp"
#include "zeus/common.hpp"

namespace zeus {

namespace {

void check_range_i(const int* r, const char* name) {
  if (r[0] > r[1] || r[0] < 1)
    throw UsageError(std::string("prior config: bad range for ") + name);
}

void check_range_d(const double* r, const char* name) {
  if (r[0] > r[1] || r[0] <= 0.0)
    throw UsageError(std::string("prior config: bad range for ") + name);
}

void check_prob(double p, const char* name) {
  if (p < 0.0 || p > 1.0)
    throw UsageError(std::string("prior config: ") + name +
                     " must be a probability");
}

// Random orthogonal matrix: QR of a Gaussian matrix with sign fix.
Eigen::MatrixXd random_orthogonal(int d, Rng& rng) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Eigen::VectorXd sample_spectrum(int d, const PriorConfig& cfg, Rng& rng) {
  double lo = cfg.eigenvalue_range[0], hi = cfg.eigenvalue_range[1];
  Eigen::VectorXd ev(d);
  double regime = rng.uniform();
  if (regime < cfg.full_rank_prob) {
    // strongly full rank: upper half of the eigenvalue range
    double mid = lo + 0.5 * (hi - lo);
    for (int i = 0; i < d; ++i) ev(i) = rng.uniform(mid, hi);
  } else if (regime < cfg.full_rank_prob + cfg.degenerate_prob) {
    // near-degenerate: all but ceil(d/2) eigenvalues from the bottom 10%
    int keep = (d + 1) / 2;
    double low_hi = lo + 0.1 * (hi - lo);
    for (int i = 0; i < d; ++i)
      ev(i) = i < keep ? rng.uniform(lo, hi) : rng.uniform(lo, low_hi);
  } else {
    for (int i = 0; i < d; ++i) ev(i) = rng.uniform(lo, hi);
  }
  return ev;
}

// Trace of (B^1/2 A B^1/2)^1/2 via the eigenvalues of the PSD product.
double bures_cross_term(const MixtureComponent& a, const MixtureComponent& b) {
  Eigen::MatrixXd bs = b.cov_sqrt;  // note: cov = bs bs^T, bs not symmetric
  Eigen::MatrixXd cov_a = a.cov_sqrt * a.cov_sqrt.transpose();
  Eigen::MatrixXd m = bs.transpose() * cov_a * bs;  // similar spectrum
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  double tr = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    tr += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  return tr;
}

}  // namespace

void PriorConfig::validate() const {
  check_range_i(k_range, "k");
  if (k_range[0] < 1) throw UsageError("prior config: k must be positive");
  check_range_i(samples_per_component_range, "samples per component");
  if (max_numeric_dim < 2)
    throw UsageError("prior config: max_numeric_dim must be at least 2");
  check_range_d(min_sep_range, "min separation");
  check_range_d(eigenvalue_range, "eigenvalues");
  check_prob(full_rank_prob, "full_rank_prob");
  check_prob(degenerate_prob, "degenerate_prob");
  if (full_rank_prob + degenerate_prob > 1.0)
    throw UsageError("prior config: covariance regime probabilities exceed 1");
  check_prob(categorical_chance, "categorical_chance");
  if (max_categorical_vars < 1)
    throw UsageError("prior config: max_categorical_vars must be positive");
  check_range_i(category_count_range, "category count");
  if (category_count_range[0] < 2)
    throw UsageError("prior config: categories start at 2");
  if (dirichlet_alpha <= 0.0)
    throw UsageError("prior config: dirichlet_alpha must be positive");
  check_range_i(transform_depth_range, "transform depth");
  check_range_d(spectral_norm_range, "spectral norm");
  if (spectral_norm_range[1] >= 1.0)
    throw UsageError("prior config: spectral norm target must stay below 1");
  check_prob(transformed_fraction, "transformed_fraction");
}

double w2_distance(const MixtureComponent& a, const MixtureComponent& b) {
  double mean_term = (a.mean - b.mean).squaredNorm();
  double bures = a.eigenvalues.sum() + b.eigenvalues.sum() -
                 2.0 * bures_cross_term(a, b);
  return std::sqrt(mean_term + std::max(0.0, bures));
}

MixtureSpec sample_mixture(const PriorConfig& cfg, Rng& rng) {
  cfg.validate();
  MixtureSpec spec;
  spec.k = static_cast<int>(rng.uniform_int(cfg.k_range[0], cfg.k_range[1]));
  spec.dim = static_cast<int>(rng.uniform_int(2, cfg.max_numeric_dim));
  spec.min_sep = cfg.min_sep_range[1];
  for (int c = 0; c < spec.k; ++c) {
    MixtureComponent comp;
    comp.count = static_cast<int>(
        rng.uniform_int(cfg.samples_per_component_range[0],
                        cfg.samples_per_component_range[1]));
    comp.min_sep = rng.uniform(cfg.min_sep_range[0], cfg.min_sep_range[1]);
    spec.min_sep = std::min(spec.min_sep, comp.min_sep);
    comp.eigenvalues = sample_spectrum(spec.dim, cfg, rng);
    Eigen::MatrixXd q = random_orthogonal(spec.dim, rng);
    comp.cov_sqrt = q * comp.eigenvalues.cwiseSqrt().asDiagonal();
    comp.mean = Eigen::VectorXd::Zero(spec.dim);
    if (c > 0) {
      // March along a random direction until the new component clears the
      // separation floor against every placed one. The covariance part of
      // W2^2 is fixed during the march, so it is precomputed per pair.
      Eigen::VectorXd dir(spec.dim);
      for (int i = 0; i < spec.dim; ++i) dir(i) = rng.normal();
      double norm = dir.norm();
      if (norm == 0.0) {
        dir.setZero();
        dir(0) = 1.0;
      } else {
        dir /= norm;
      }
      std::vector<double> bures_sq(c), floor_sq(c);
      for (int j = 0; j < c; ++j) {
        const MixtureComponent& other = spec.components[j];
        double bures = comp.eigenvalues.sum() + other.eigenvalues.sum() -
                       2.0 * bures_cross_term(comp, other);
        bures_sq[j] = std::max(0.0, bures);
        double floor = std::max(comp.min_sep, other.min_sep);
        floor_sq[j] = floor * floor;
      }
      double step = 0.05 * comp.min_sep;
      const int64_t max_steps = 100000;
      int64_t t = 0;
      for (; t <= max_steps; ++t) {
        comp.mean = (t * step) * dir;
        bool ok = true;
        for (int j = 0; j < c && ok; ++j) {
          double total = (comp.mean - spec.components[j].mean).squaredNorm() +
                         bures_sq[j];
          ok = total >= floor_sq[j];
        }
        if (ok) break;
      }
      if (t > max_steps)
        throw GenerationError("mixture placement: separation not reachable");
    }
    spec.components.push_back(std::move(comp));
  }
  return spec;
}

void finalize_to_unit_range(Eigen::MatrixXd& x,
                            const std::vector<int>& column_kinds,
                            NormMode mode) {
  if (static_cast<Eigen::Index>(column_kinds.size()) != x.cols())
    throw UsageError("finalize: one column kind per column required");
  std::vector<int> numeric;
  for (size_t j = 0; j < column_kinds.size(); ++j)
    if (column_kinds[j] == -1) numeric.push_back(static_cast<int>(j));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int j : numeric) {
    double mean = x.col(j).mean();
    double var = (x.col(j).array() - mean).square().mean();
    if (var <= 0.0) {
      x.col(j).setZero();
      continue;
    }
    x.col(j) = (x.col(j).array() - mean) / std::sqrt(var);
    if (mode == NormMode::per_column) {
      double clo = x.col(j).minCoeff(), chi = x.col(j).maxCoeff();
      x.col(j) = (x.col(j).array() - clo) * (2.0 / (chi - clo)) - 1.0;
    } else {
      lo = std::min(lo, x.col(j).minCoeff());
      hi = std::max(hi, x.col(j).maxCoeff());
    }
  }
  if (mode == NormMode::global && hi > lo) {
    for (int j : numeric) {
      double var = x.col(j).cwiseAbs().maxCoeff();
      if (var == 0.0) continue;  // constant column stays at zero
      x.col(j) = (x.col(j).array() - lo) * (2.0 / (hi - lo)) - 1.0;
    }
  }
}

Eigen::MatrixXd residual_warp(const Eigen::MatrixXd& x,
                              const std::vector<int>& labels, int k,
                              const PriorConfig& cfg, Rng& rng,
                              std::vector<double>* spectral_norms) {
  Eigen::Index n = x.rows();
  int d = static_cast<int>(x.cols());
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw UsageError("residual_warp: one label per row required");
  int width = d + k;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, width);
  z.leftCols(d) = x;
  for (Eigen::Index i = 0; i < n; ++i) z(i, d + labels[i]) = 1.0;
  int depth = static_cast<int>(rng.uniform_int(cfg.transform_depth_range[0],
                                               cfg.transform_depth_range[1]));
  auto standardize = [](Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double mean = m.col(j).mean();
      double var = (m.col(j).array() - mean).square().mean();
      if (var <= 0.0)
        m.col(j).array() -= mean;
      else
        m.col(j) = (m.col(j).array() - mean) / std::sqrt(var);
    }
  };
  for (int layer = 0; layer < depth; ++layer) {
    standardize(z);
    Eigen::MatrixXd w(width, width);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    // power iteration estimate of the spectral norm, then rescale so the
    // residual branch is a contraction
    Eigen::VectorXd v(width);
    for (int i = 0; i < width; ++i) v(i) = rng.normal();
    v.normalize();
    double sigma = 1.0;
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXd wv = w * v;
      sigma = wv.norm();
      if (sigma == 0.0) break;
      v = w.transpose() * wv;
      v /= v.norm();
    }
    if (sigma == 0.0) continue;
    double target =
        rng.uniform(cfg.spectral_norm_range[0], cfg.spectral_norm_range[1]);
    w *= target / sigma;
    if (spectral_norms)
      spectral_norms->push_back(
          Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0));
    Eigen::MatrixXd pre = z * w;
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
      double t = pre.data()[i];
      pre.data()[i] = 0.5 * t * (1.0 + std::erf(t * M_SQRT1_2));
    }
    z += pre;
  }
  standardize(z);
  return pca_apply(pca_fit(z, d), z);
}

GeneratedDataset sample_dataset_full(const PriorConfig& cfg, uint64_t seed,
                                     std::optional<Provenance> forced) {
  Rng rng(seed);
  GeneratedDataset out;
  out.mixture = sample_mixture(cfg, rng);
  const MixtureSpec& spec = out.mixture;
  int n = 0;
  for (const auto& comp : spec.components) n += comp.count;
  Eigen::MatrixXd x(n, spec.dim);
  std::vector<int> labels(n);
  int row = 0;
  for (int c = 0; c < spec.k; ++c) {
    const MixtureComponent& comp = spec.components[c];
    for (int i = 0; i < comp.count; ++i, ++row) {
      Eigen::VectorXd eps(spec.dim);
      for (int j = 0; j < spec.dim; ++j) eps(j) = rng.normal();
      x.row(row) = (comp.mean + comp.cov_sqrt * eps).transpose();
      labels[row] = c;
    }
  }
  // the coin is drawn even when provenance is forced, keeping the stream
  // identical between the two call styles
  Provenance coin = rng.uniform() < cfg.transformed_fraction
                        ? Provenance::transformed
                        : Provenance::gaussian;
  Provenance prov = forced.value_or(coin);
  if (prov == Provenance::transformed)
    x = residual_warp(x, labels, spec.k, cfg, rng, &out.warp_spectral_norms);
  std::vector<int> kinds(spec.dim, -1);
  if (rng.uniform() < cfg.categorical_chance) {
    out.has_categoricals = true;
    int n_vars = static_cast<int>(rng.uniform_int(1, cfg.max_categorical_vars));
    for (int v = 0; v < n_vars; ++v) {
      int n_cats = static_cast<int>(rng.uniform_int(
          cfg.category_count_range[0], cfg.category_count_range[1]));
      std::vector<std::vector<double>> dist(spec.k);
      for (int c = 0; c < spec.k; ++c)
        dist[c] = rng.dirichlet(cfg.dirichlet_alpha, n_cats);
      Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, n_cats);
      for (int i = 0; i < n; ++i)
        onehot(i, rng.categorical(dist[labels[i]])) = 1.0;
      Eigen::MatrixXd grown(n, x.cols() + n_cats);
      grown << x, onehot;
      x = std::move(grown);
      kinds.insert(kinds.end(), n_cats, v);
    }
  }
  finalize_to_unit_range(x, kinds);
  // shuffle rows so labels are not grouped
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  Dataset& ds = out.data;
  ds.x.resize(n, x.cols());
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    ds.x.row(i) = x.row(order[i]);
    ds.labels[i] = labels[order[i]];
  }
  ds.column_kinds = std::move(kinds);
  ds.k = spec.k;
  ds.provenance = prov;
  ds.seed = seed;
  return out;
}

Dataset sample_dataset(const PriorConfig& cfg, uint64_t seed,
                       std::optional<Provenance> forced) {
  return sample_dataset_full(cfg, seed, forced).data;
}

}  // namespace zeus
