#include "zeus/cluster.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <thread>

#include "zeus/common.hpp"
#include "zeus/rng.hpp"

namespace zeus {

namespace {

template <typename Fn>
void parallel_for_index(int n, Fn fn) {
  int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

// n x k squared distances, exact per entry (no norm-expansion cancellation).
Eigen::MatrixXd sqdist_to_centers(const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& centers) {
  Eigen::MatrixXd d2(x.rows(), centers.rows());
  for (Eigen::Index j = 0; j < centers.rows(); ++j)
    d2.col(j) = (x.rowwise() - centers.row(j)).rowwise().squaredNorm();
  return d2;
}

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& x, int k, Rng& rng) {
  Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  Eigen::Index first = rng.uniform_int(0, n - 1);
  centers.row(0) = x.row(first);
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = d2.sum();
    Eigen::Index pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(0, n - 1);  // all points coincide with centers
    } else {
      double u = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (u < acc) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin(
        (x.rowwise() - centers.row(c)).rowwise().squaredNorm().eval());
  }
  return centers;
}

struct LloydOutcome {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  double inertia = 0.0;
  std::vector<double> history;
};

LloydOutcome lloyd_run(const Eigen::MatrixXd& x, const KMeansConfig& cfg,
                       uint64_t seed) {
  Rng rng(seed);
  Eigen::Index n = x.rows();
  int k = cfg.k;
  Eigen::MatrixXd centers = kmeanspp_seed(x, k, rng);
  LloydOutcome out;
  out.labels.assign(n, -1);
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    Eigen::MatrixXd d2 = sqdist_to_centers(x, centers);
    double inertia = 0.0;
    bool changed = false;
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index j;
      inertia += d2.row(i).minCoeff(&j);
      if (out.labels[i] != static_cast<int>(j)) changed = true;
      out.labels[i] = static_cast<int>(j);
      counts[j]++;
    }
    out.history.push_back(inertia);
    if (inertia > prev + 1e-12 * std::max(1.0, prev))
      throw NumericError("kmeans: inertia increased");
    bool converged =
        !changed || (std::isfinite(prev) && prev - inertia <= cfg.tol * prev);
    out.inertia = inertia;
    prev = inertia;
    if (converged) break;
    // centroid update; empty clusters respawn at the worst-fit point
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) sums.row(out.labels[i]) += x.row(i);
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        centers.row(j) = sums.row(j) / counts[j];
      } else {
        Eigen::Index worst = 0;
        double worst_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double di = d2(i, out.labels[i]);
          if (di > worst_d) {
            worst_d = di;
            worst = i;
          }
        }
        centers.row(j) = x.row(worst);
      }
    }
  }
  out.centers = std::move(centers);
  return out;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& x, const KMeansConfig& cfg) {
  if (cfg.k < 1) throw UsageError("kmeans: k must be at least 1");
  if (x.rows() < cfg.k)
    throw UsageError("kmeans: fewer points than clusters");
  if (cfg.n_init < 1 || cfg.max_iter < 1)
    throw UsageError("kmeans: n_init and max_iter must be positive");
  // Two passes: score every restart, then rerun the winner for its
  // labels/history. Keeps memory flat and stays deterministic under threads.
  std::vector<double> scores(cfg.n_init);
  parallel_for_index(cfg.n_init, [&](int r) {
    scores[r] = lloyd_run(x, cfg, mix_seed(cfg.seed, r)).inertia;
  });
  int best = 0;
  for (int r = 1; r < cfg.n_init; ++r)
    if (scores[r] < scores[best]) best = r;
  LloydOutcome win = lloyd_run(x, cfg, mix_seed(cfg.seed, best));
  KMeansResult res;
  res.labels = std::move(win.labels);
  res.centers = std::move(win.centers);
  res.inertia = win.inertia;
  res.inertia_history = std::move(win.history);
  return res;
}

Eigen::MatrixXd gmm_identity_responsibilities(const Eigen::MatrixXd& x,
                                              const Eigen::MatrixXd& means,
                                              const Eigen::VectorXd& weights) {
  if (means.cols() != x.cols() || weights.size() != means.rows())
    throw UsageError("gmm_identity_responsibilities: shape mismatch");
  Eigen::MatrixXd logit = -sqdist_to_centers(x, means);
  for (Eigen::Index j = 0; j < means.rows(); ++j)
    logit.col(j).array() += std::log(weights(j));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mx = logit.row(i).maxCoeff();
    logit.row(i) = (logit.row(i).array() - mx).exp();
    logit.row(i) /= logit.row(i).sum();
  }
  return logit;
}

namespace {

struct EmOutcome {
  Eigen::MatrixXd resp;
  Eigen::MatrixXd means;
  std::vector<Eigen::MatrixXd> covariances;
  Eigen::VectorXd weights;
  double log_likelihood = 0.0;
  std::vector<double> history;
};

// Log densities per component, one column each.
Eigen::MatrixXd gmm_log_density(const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& means,
                                const std::vector<Eigen::MatrixXd>& covs,
                                GmmCovariance regime) {
  Eigen::Index n = x.rows(), d = x.cols(), k = means.rows();
  Eigen::MatrixXd logdens(n, k);
  if (regime == GmmCovariance::identity) {
    // shared isotropic covariance = I/2, density exp(-|x-mu|^2)/pi^(d/2)
    double c = -0.5 * d * std::log(M_PI);
    logdens = -sqdist_to_centers(x, means);
    logdens.array() += c;
    return logdens;
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::LLT<Eigen::MatrixXd> llt(covs[j]);
    if (llt.info() != Eigen::Success)
      throw NumericError("gmm: covariance is not positive definite");
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
      logdet += std::log(llt.matrixL()(i, i));
    logdet *= 2.0;
    Eigen::MatrixXd centered = x.rowwise() - means.row(j);
    Eigen::MatrixXd solved = llt.matrixL().solve(centered.transpose());
    Eigen::ArrayXd maha = solved.colwise().squaredNorm().transpose();
    logdens.col(j) =
        -0.5 * (d * std::log(2.0 * M_PI) + logdet + maha.matrix().array());
  }
  return logdens;
}

EmOutcome em_run(const Eigen::MatrixXd& x, const GmmConfig& cfg,
                 uint64_t seed) {
  Rng rng(seed);
  Eigen::Index n = x.rows(), d = x.cols();
  int k = cfg.k;
  EmOutcome out;
  out.means = kmeanspp_seed(x, k, rng);
  out.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::RowVectorXd col_mean = x.colwise().mean();
  Eigen::RowVectorXd col_var =
      (x.rowwise() - col_mean).array().square().colwise().mean();
  if (cfg.covariance == GmmCovariance::full) {
    Eigen::MatrixXd base = col_var.asDiagonal();
    base.diagonal().array() += cfg.reg_covar;
    out.covariances.assign(k, base);
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    Eigen::MatrixXd logdens =
        gmm_log_density(x, out.means, out.covariances, cfg.covariance);
    for (int j = 0; j < k; ++j)
      logdens.col(j).array() += std::log(out.weights(j));
    double ll = 0.0;
    Eigen::MatrixXd resp(n, k);
    Eigen::VectorXd rowlse(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = logdens.row(i).maxCoeff();
      double s = (logdens.row(i).array() - mx).exp().sum();
      double lse = mx + std::log(s);
      rowlse(i) = lse;
      resp.row(i) = (logdens.row(i).array() - lse).exp();
      ll += lse;
    }
    out.history.push_back(ll);
    if (!std::isfinite(ll))
      throw NumericError("gmm: log-likelihood is not finite");
    bool converged = std::isfinite(prev) &&
                     std::abs(ll - prev) <= cfg.tol * std::max(1.0, std::abs(ll));
    out.resp = std::move(resp);
    out.log_likelihood = ll;
    prev = ll;
    if (converged) break;
    // M-step
    Eigen::VectorXd nk = out.resp.colwise().sum();
    for (int j = 0; j < k; ++j) {
      if (nk(j) < 1e-10) {
        // dead component: respawn at the worst-explained point
        Eigen::Index worst;
        rowlse.minCoeff(&worst);
        out.means.row(j) = x.row(worst);
        out.weights(j) = 1.0 / n;
        if (cfg.covariance == GmmCovariance::full) {
          out.covariances[j] = col_var.asDiagonal();
          out.covariances[j].diagonal().array() += cfg.reg_covar;
        }
        continue;
      }
      out.means.row(j) = (out.resp.col(j).transpose() * x) / nk(j);
      out.weights(j) = nk(j) / n;
      if (cfg.covariance == GmmCovariance::full) {
        Eigen::MatrixXd centered = x.rowwise() - out.means.row(j);
        out.covariances[j] =
            (centered.transpose() * out.resp.col(j).asDiagonal() * centered) /
            nk(j);
        out.covariances[j].diagonal().array() += cfg.reg_covar;
      }
    }
    out.weights /= out.weights.sum();
  }
  return out;
}

}  // namespace

GmmResult gmm_em(const Eigen::MatrixXd& x, const GmmConfig& cfg) {
  if (cfg.k < 1) throw UsageError("gmm: k must be at least 1");
  if (x.rows() < cfg.k) throw UsageError("gmm: fewer points than components");
  if (cfg.n_init < 1 || cfg.max_iter < 1)
    throw UsageError("gmm: n_init and max_iter must be positive");
  std::vector<double> scores(cfg.n_init);
  parallel_for_index(cfg.n_init, [&](int r) {
    scores[r] = em_run(x, cfg, mix_seed(cfg.seed, r)).log_likelihood;
  });
  int best = 0;
  for (int r = 1; r < cfg.n_init; ++r)
    if (scores[r] > scores[best]) best = r;
  EmOutcome win = em_run(x, cfg, mix_seed(cfg.seed, best));
  GmmResult res;
  res.resp = std::move(win.resp);
  res.means = std::move(win.means);
  res.covariances = std::move(win.covariances);
  res.weights = std::move(win.weights);
  res.log_likelihood = win.log_likelihood;
  res.log_likelihood_history = std::move(win.history);
  res.labels.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index j;
    res.resp.row(i).maxCoeff(&j);
    res.labels[i] = static_cast<int>(j);
  }
  return res;
}

PcaModel pca_fit(const Eigen::MatrixXd& x, int n_components) {
  if (x.rows() < 2) throw UsageError("pca: need at least two rows");
  if (n_components < 1 ||
      n_components > std::min<Eigen::Index>(x.rows(), x.cols()))
    throw UsageError("pca: n_components out of range");
  PcaModel model;
  model.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - model.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  model.axes = svd.matrixV().leftCols(n_components).transpose();
  model.explained_variance =
      s.head(n_components).array().square() / (x.rows() - 1);
  for (int r = 0; r < n_components; ++r) {
    Eigen::Index imax;
    model.axes.row(r).cwiseAbs().maxCoeff(&imax);
    if (model.axes(r, imax) < 0) model.axes.row(r) = -model.axes.row(r);
    if (s(r) <= 1e-12 * std::max(s(0), 1e-300))
      std::cerr << "pca: component " << r
                << " has (near) zero variance; padding direction\n";
  }
  return model;
}

Eigen::MatrixXd pca_apply(const PcaModel& model, const Eigen::MatrixXd& x) {
  if (x.cols() != model.mean.cols())
    throw UsageError("pca_apply: column count mismatch");
  return (x.rowwise() - model.mean) * model.axes.transpose();
}

Eigen::MatrixXd minmax_columns(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    double lo = out.col(j).minCoeff(), hi = out.col(j).maxCoeff();
    if (hi > lo)
      out.col(j) = (out.col(j).array() - lo) * (2.0 / (hi - lo)) - 1.0;
    else
      out.col(j).setZero();
  }
  return out;
}

namespace {

void scale_numeric_columns(Eigen::MatrixXd& m, const std::vector<int>& kinds,
                           bool to_unit_interval) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (kinds[j] != -1) continue;
    double mean = m.col(j).mean();
    double var = (m.col(j).array() - mean).square().mean();
    if (var <= 0.0) {
      m.col(j).setZero();
      continue;
    }
    m.col(j) = (m.col(j).array() - mean) / std::sqrt(var);
    if (to_unit_interval) {
      double lo = m.col(j).minCoeff(), hi = m.col(j).maxCoeff();
      if (hi > lo)
        m.col(j) = (m.col(j).array() - lo) * (2.0 / (hi - lo)) - 1.0;
      else
        m.col(j).setZero();
    }
  }
}

}  // namespace

Eigen::MatrixXd prepare(const Eigen::MatrixXd& x,
                        const std::vector<int>& column_kinds, int width) {
  if (static_cast<Eigen::Index>(column_kinds.size()) != x.cols())
    throw UsageError("prepare: one column kind per column required");
  if (width < 1) throw UsageError("prepare: width must be positive");
  Eigen::MatrixXd scaled = x;
  scale_numeric_columns(scaled, column_kinds, true);
  if (scaled.cols() == width) return scaled;
  if (scaled.cols() < width) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(scaled.rows(), width);
    out.leftCols(scaled.cols()) = scaled;
    return out;
  }
  return pca_apply(pca_fit(scaled, width), scaled);
}

Eigen::MatrixXd prepare_baseline(const Eigen::MatrixXd& x,
                                 const std::vector<int>& column_kinds,
                                 BaselineScaling mode) {
  if (static_cast<Eigen::Index>(column_kinds.size()) != x.cols())
    throw UsageError("prepare_baseline: one column kind per column required");
  Eigen::MatrixXd out = x;
  scale_numeric_columns(out, column_kinds, mode == BaselineScaling::scaled);
  return out;
}

}  // namespace zeus
