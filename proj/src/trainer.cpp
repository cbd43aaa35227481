#include "zeus/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <utility>

#include "zeus/cluster.hpp"
#include "zeus/common.hpp"
#include "zeus/metrics.hpp"
#include "zeus/objective.hpp"
#include "zeus/rng.hpp"

namespace zeus {

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Tensor matrix_tensor(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<size_t>(m.size()));
  RowMajorMap(v.data(), m.rows(), m.cols()) = m;
  return Tensor({m.rows(), m.cols()}, std::move(v));
}

// Seed offsets keeping the training stream (plain step counter), the
// validation pools, and the evaluation clusterings disjoint.
constexpr uint64_t kValGaussBase = 1ull << 40;
constexpr uint64_t kValTransfBase = 1ull << 41;
constexpr uint64_t kValKmeansBase = 1ull << 42;

}  // namespace

double lr_at(int64_t step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps)
    throw UsageError("lr_at: step outside [0, total_steps]");
  if (step < cfg.warmup_steps)
    return cfg.lr_peak * static_cast<double>(step) / cfg.warmup_steps;
  if (cfg.total_steps == cfg.warmup_steps) return cfg.lr_peak;
  const double progress = static_cast<double>(step - cfg.warmup_steps) /
                          static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  const double c = std::cos(0.5 * M_PI * progress);
  return cfg.lr_peak * c * c;
}

Provenance provenance_at(int64_t step, const TrainConfig& cfg) {
  const int64_t cycle = cfg.gauss_ratio + cfg.transformed_ratio;
  return (step % cycle) < cfg.gauss_ratio ? Provenance::gaussian
                                          : Provenance::transformed;
}

Adam::Adam(std::vector<Tensor> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step(double lr, double clip_norm, double grad_scale) {
  ++updates_;
  double sq = 0.0;
  for (auto& p : params_) {
    if (!p.grad_allocated()) continue;
    for (double g : p.grad_values()) {
      const double gs = g * grad_scale;
      sq += gs * gs;
    }
  }
  double scale = grad_scale;
  const double norm = std::sqrt(sq);
  if (clip_norm > 0.0 && norm > clip_norm) scale *= clip_norm / norm;

  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(updates_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(updates_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const bool has_grad = p.grad_allocated();
    const double* g = has_grad ? p.grad_values().data() : nullptr;
    double* value = p.data();
    for (int64_t j = 0; j < p.size(); ++j) {
      const double gj = has_grad ? g[j] * scale : 0.0;
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * gj;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * gj * gj;
      const double mhat = m_[i][j] / c1;
      const double vhat = v_[i][j] / c2;
      value[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
    p.zero_grad();
  }
}

void Adam::load_state(std::vector<std::vector<double>> m,
                      std::vector<std::vector<double>> v, int64_t updates) {
  if (m.size() != params_.size() || v.size() != params_.size())
    throw UsageError("optimizer state does not match the parameter list");
  for (size_t i = 0; i < params_.size(); ++i)
    if (static_cast<int64_t>(m[i].size()) != params_[i].size() ||
        static_cast<int64_t>(v[i].size()) != params_[i].size())
      throw UsageError("optimizer state does not match the parameter shapes");
  m_ = std::move(m);
  v_ = std::move(v);
  updates_ = updates;
}

PretrainResult pretrain(const RunConfig& cfg, std::ostream* log,
                        const Checkpoint* resume) {
  cfg.validate();
  const TrainConfig& tr = cfg.train;

  Encoder enc = resume ? resume->restore_encoder()
                       : Encoder(cfg.encoder, mix_seed(tr.seed, 1ull << 48));
  if (resume && encoder_to_json(resume->encoder_cfg) != encoder_to_json(cfg.encoder))
    throw UsageError("resume checkpoint was trained with a different encoder config");

  std::vector<std::string> param_names;
  std::vector<Tensor> params;
  for (const auto& [name, t] : enc.parameters()) {
    param_names.push_back(name);
    params.push_back(t);
  }
  Adam adam(params, tr.adam_beta1, tr.adam_beta2, tr.adam_eps);
  if (resume) {
    std::vector<std::vector<double>> m, v;
    for (const auto& name : param_names) {
      const TensorEntry* em = resume->find("adam.m." + name);
      const TensorEntry* ev = resume->find("adam.v." + name);
      if (em == nullptr || ev == nullptr)
        throw IoError("resume checkpoint is missing optimizer state for '" + name + "'");
      m.push_back(em->values);
      v.push_back(ev->values);
    }
    adam.load_state(std::move(m), std::move(v), resume->adam_updates);
  }

  const int64_t start = resume ? resume->step : 0;
  std::vector<HistoryRow> history = resume ? resume->history : std::vector<HistoryRow>{};

  // Held-out validation pool, prepared once; seeds are disjoint from the
  // training stream by construction.
  struct ValItem {
    Eigen::MatrixXd x;
    std::vector<int> labels;
    int k = 0;
  };
  auto build_pool = [&](uint64_t base, Provenance prov) {
    std::vector<ValItem> pool;
    for (int i = 0; i < tr.val_datasets_per_type; ++i) {
      Dataset ds = sample_dataset(cfg.prior, mix_seed(tr.seed, base + i), prov);
      pool.push_back({prepare(ds.x, ds.column_kinds, cfg.encoder.input_dim),
                      std::move(ds.labels), ds.k});
    }
    return pool;
  };
  const std::vector<ValItem> val_gauss = build_pool(kValGaussBase, Provenance::gaussian);
  const std::vector<ValItem> val_transf =
      build_pool(kValTransfBase, Provenance::transformed);

  auto eval_pool = [&](const std::vector<ValItem>& pool, uint64_t kmeans_base) {
    if (pool.empty()) return 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < pool.size(); ++i) {
      const Eigen::MatrixXd z = minmax_columns(enc.embed(pool[i].x));
      KMeansConfig kc;
      kc.k = pool[i].k;
      kc.n_init = tr.val_kmeans_n_init;
      kc.seed = mix_seed(tr.seed, kmeans_base + i);
      sum += ari(kmeans(z, kc).labels, pool[i].labels);
    }
    return sum / static_cast<double>(pool.size());
  };

  auto make_state = [&](int64_t step) {
    Checkpoint ck;
    ck.prior = cfg.prior;
    ck.encoder_cfg = cfg.encoder;
    ck.loss = cfg.loss;
    ck.train = cfg.train;
    ck.step = step;
    ck.adam_updates = adam.updates();
    ck.history = history;
    ck.tensors = snapshot_parameters(enc);
    for (size_t i = 0; i < params.size(); ++i) {
      const auto& shape = params[i].shape();
      ck.tensors.push_back({"adam.m." + param_names[i],
                            {shape.begin(), shape.end()},
                            adam.m()[i]});
      ck.tensors.push_back({"adam.v." + param_names[i],
                            {shape.begin(), shape.end()},
                            adam.v()[i]});
    }
    return ck;
  };

  PretrainResult result;
  double best = -std::numeric_limits<double>::infinity();

  auto run_eval = [&](int64_t step, double loss_now) {
    const double vg = eval_pool(val_gauss, kValKmeansBase);
    const double vt = eval_pool(val_transf, kValKmeansBase + (1ull << 20));
    if (history.empty() || history.back().step < step)
      history.push_back({step, loss_now, vg, vt});
    if (log != nullptr) {
      char line[160];
      std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g,%.17g",
                    static_cast<long long>(step), loss_now, vg, vt);
      (*log) << line << '\n' << std::flush;
    }
    const int total = static_cast<int>(val_gauss.size() + val_transf.size());
    const double mean =
        total == 0 ? 0.0
                   : (vg * static_cast<double>(val_gauss.size()) +
                      vt * static_cast<double>(val_transf.size())) / total;
    if (mean > best) {
      best = mean;
      result.best_state = make_state(step);
      result.best_val_ari = mean;
    }
  };

  run_eval(start, std::numeric_limits<double>::quiet_NaN());

  int accum = 0;
  double last_loss = std::numeric_limits<double>::quiet_NaN();
  for (int64_t step = start; step < tr.total_steps; ++step) {
    const Dataset ds =
        sample_dataset(cfg.prior, mix_seed(tr.seed, static_cast<uint64_t>(step)),
                       provenance_at(step, tr));
    const Eigen::MatrixXd x = prepare(ds.x, ds.column_kinds, cfg.encoder.input_dim);

    Tape tape;
    const Tensor xt = matrix_tensor(x);
    const Tensor z = enc.forward(tape, xt);
    const LossTerms terms = total_loss(tape, z, ds.labels, ds.k, cfg.loss);
    const double loss = terms.total.value();
    if (!std::isfinite(loss))
      throw NumericError("non-finite training loss at step " + std::to_string(step) +
                         " (dataset seed " + std::to_string(ds.seed) + ")");
    tape.backward(terms.total);
    last_loss = loss / static_cast<double>(x.rows());
    result.losses.push_back(last_loss);

    ++accum;
    const int64_t s = step + 1;
    if (accum == tr.grad_accum || s == tr.total_steps) {
      adam.step(lr_at(s, tr), tr.grad_clip_norm, 1.0 / accum);
      accum = 0;
    }
    if (s % tr.eval_every == 0 || s == tr.total_steps) run_eval(s, last_loss);
  }

  result.final_state = make_state(std::max(start, static_cast<int64_t>(tr.total_steps)));
  return result;
}

Assignment embed_and_cluster(const Encoder& enc, const Eigen::MatrixXd& x,
                             const std::vector<int>& column_kinds, int k,
                             AssignMethod method, const EvalOptions& opts) {
  if (k < 1) throw UsageError("cluster count must be at least 1");
  const Eigen::MatrixXd prepared = prepare(x, column_kinds, enc.config().input_dim);
  Assignment out;
  out.embedding = minmax_columns(enc.embed(prepared));
  if (method == AssignMethod::kmeans) {
    KMeansConfig kc;
    kc.k = k;
    kc.n_init = opts.kmeans_n_init;
    kc.seed = opts.seed;
    KMeansResult r = kmeans(out.embedding, kc);
    out.labels = std::move(r.labels);
    out.soft = Eigen::MatrixXd::Zero(x.rows(), k);
    for (int i = 0; i < static_cast<int>(out.labels.size()); ++i)
      out.soft(i, out.labels[i]) = 1.0;
  } else {
    GmmConfig gc;
    gc.k = k;
    gc.covariance = GmmCovariance::identity;
    gc.n_init = opts.gmm_n_init;
    gc.seed = opts.seed;
    GmmResult r = gmm_em(out.embedding, gc);
    out.labels = std::move(r.labels);
    out.soft = std::move(r.resp);
  }
  return out;
}

}  // namespace zeus
