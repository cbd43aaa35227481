#include "zeus/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "zeus/common.hpp"

namespace zeus {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMatMap = Eigen::Map<const EMat>;
using MatMap = Eigen::Map<EMat>;
using CVecMap = Eigen::Map<const Eigen::ArrayXd>;
using VecMap = Eigen::Map<Eigen::ArrayXd>;

int64_t numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t s : shape) n *= s;
  return n;
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

}  // namespace

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> values,
               bool requires_grad) {
  if (numel(shape) != static_cast<int64_t>(values.size()))
    throw UsageError("tensor: shape " + shape_str(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(numel(shape)), 0.0);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::full(std::vector<int64_t> shape, double value,
                    bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(numel(shape)), value);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

int64_t Tensor::rows() const {
  return ndim() >= 2 ? impl_->shape[0] : 1;
}

int64_t Tensor::cols() const {
  return ndim() >= 2 ? impl_->shape[1] : impl_->shape[0];
}

double Tensor::value() const {
  if (size() != 1) throw UsageError("value(): tensor is not scalar");
  return impl_->values[0];
}

double* Tensor::grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
  return impl_->grad.data();
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : impl_->values)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Tape

Tensor Tape::make_output(std::vector<int64_t> shape,
                         std::initializer_list<const Tensor*> inputs) {
  bool rg = false;
  for (const Tensor* t : inputs) rg = rg || t->requires_grad();
  return Tensor::zeros(std::move(shape), recording_ && rg);
}

void Tape::record(std::initializer_list<const Tensor*> inputs,
                  const Tensor& output, std::function<void()> fn) {
  if (!recording_) return;
  Record rec;
  for (const Tensor* t : inputs) rec.tensors.push_back(t->impl_);
  rec.tensors.push_back(output.impl_);
  rec.fn = std::move(fn);
  records_.push_back(std::move(rec));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw UsageError("backward: loss must be a defined scalar");
  // Intermediates (record outputs) are reset; externally created tensors
  // (parameters) keep accumulating, callers zero them between optimizer
  // steps.
  for (Record& rec : records_) {
    for (size_t i = 0; i + 1 < rec.tensors.size(); ++i) {
      auto& t = rec.tensors[i];
      if (t->requires_grad && t->grad.empty())
        t->grad.assign(t->values.size(), 0.0);
    }
    auto& out = rec.tensors.back();
    out->grad.assign(out->values.size(), 0.0);
  }
  Tensor& mut = const_cast<Tensor&>(loss);
  mut.grad()[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->fn();
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
              shape_str(b.shape()));
  int64_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor out = make_output({n, m}, {&a, &b});
  MatMap(out.data(), n, m).noalias() =
      CMatMap(a.data(), n, k) * CMatMap(b.data(), k, m);
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record({&a, &b}, out, [ai, bi, oi, n, k, m] {
      CMatMap go(oi->grad.data(), n, m);
      if (ai->requires_grad)
        MatMap(ai->grad.data(), n, k).noalias() +=
            go * CMatMap(bi->values.data(), k, m).transpose();
      if (bi->requires_grad)
        MatMap(bi->grad.data(), k, m).noalias() +=
            CMatMap(ai->values.data(), n, k).transpose() * go;
    });
  }
  return out;
}

Tensor Tape::transpose(const Tensor& a) {
  require(a.ndim() == 2, "transpose: expected 2-d tensor");
  int64_t n = a.dim(0), m = a.dim(1);
  Tensor out = make_output({m, n}, {&a});
  MatMap(out.data(), m, n) = CMatMap(a.data(), n, m).transpose();
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    record({&a}, out, [ai, oi, n, m] {
      MatMap(ai->grad.data(), n, m) +=
          CMatMap(oi->grad.data(), m, n).transpose();
    });
  }
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  Tensor out = make_output(a.shape(), {&a, &b});
  int64_t n = a.size();
  VecMap(out.data(), n) = CVecMap(a.data(), n) + CVecMap(b.data(), n);
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record({&a, &b}, out, [ai, bi, oi, n] {
      CVecMap go(oi->grad.data(), n);
      if (ai->requires_grad) VecMap(ai->grad.data(), n) += go;
      if (bi->requires_grad) VecMap(bi->grad.data(), n) += go;
    });
  }
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "sub: shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  Tensor out = make_output(a.shape(), {&a, &b});
  int64_t n = a.size();
  VecMap(out.data(), n) = CVecMap(a.data(), n) - CVecMap(b.data(), n);
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record({&a, &b}, out, [ai, bi, oi, n] {
      CVecMap go(oi->grad.data(), n);
      if (ai->requires_grad) VecMap(ai->grad.data(), n) += go;
      if (bi->requires_grad) VecMap(bi->grad.data(), n) -= go;
    });
  }
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch " +
                                      shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  Tensor out = make_output(a.shape(), {&a, &b});
  int64_t n = a.size();
  VecMap(out.data(), n) = CVecMap(a.data(), n) * CVecMap(b.data(), n);
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record({&a, &b}, out, [ai, bi, oi, n] {
      CVecMap go(oi->grad.data(), n);
      if (ai->requires_grad)
        VecMap(ai->grad.data(), n) += go * CVecMap(bi->values.data(), n);
      if (bi->requires_grad)
        VecMap(bi->grad.data(), n) += go * CVecMap(ai->values.data(), n);
    });
  }
  return out;
}

Tensor Tape::scale(const Tensor& a, double c) {
  Tensor out = make_output(a.shape(), {&a});
  int64_t n = a.size();
  VecMap(out.data(), n) = CVecMap(a.data(), n) * c;
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    record({&a}, out, [ai, oi, n, c] {
      VecMap(ai->grad.data(), n) += CVecMap(oi->grad.data(), n) * c;
    });
  }
  return out;
}

Tensor Tape::add_rowvec(const Tensor& a, const Tensor& v) {
  require(a.ndim() == 2 && v.size() == a.dim(1),
          "add_rowvec: vector length must equal column count");
  int64_t n = a.dim(0), m = a.dim(1);
  Tensor out = make_output(a.shape(), {&a, &v});
  MatMap(out.data(), n, m) = CMatMap(a.data(), n, m).rowwise() +
                             CMatMap(v.data(), 1, m).row(0);
  if (out.requires_grad()) {
    auto ai = a.impl_, vi = v.impl_, oi = out.impl_;
    record({&a, &v}, out, [ai, vi, oi, n, m] {
      CMatMap go(oi->grad.data(), n, m);
      if (ai->requires_grad) MatMap(ai->grad.data(), n, m) += go;
      if (vi->requires_grad)
        MatMap(vi->grad.data(), 1, m).row(0) += go.colwise().sum();
    });
  }
  return out;
}

Tensor Tape::mul_rowvec(const Tensor& a, const Tensor& v) {
  require(a.ndim() == 2 && v.size() == a.dim(1),
          "mul_rowvec: vector length must equal column count");
  int64_t n = a.dim(0), m = a.dim(1);
  Tensor out = make_output(a.shape(), {&a, &v});
  MatMap(out.data(), n, m) =
      CMatMap(a.data(), n, m).array().rowwise() *
      CVecMap(v.data(), m).transpose();
  if (out.requires_grad()) {
    auto ai = a.impl_, vi = v.impl_, oi = out.impl_;
    record({&a, &v}, out, [ai, vi, oi, n, m] {
      CMatMap go(oi->grad.data(), n, m);
      if (ai->requires_grad)
        MatMap(ai->grad.data(), n, m).array() +=
            go.array().rowwise() * CVecMap(vi->values.data(), m).transpose();
      if (vi->requires_grad)
        VecMap(vi->grad.data(), m).transpose() +=
            (go.array() * CMatMap(ai->values.data(), n, m).array())
                .colwise()
                .sum();
    });
  }
  return out;
}

Tensor Tape::gelu(const Tensor& a) {
  Tensor out = make_output(a.shape(), {&a});
  int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = gelu_value(a.data()[i]);
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    record({&a}, out, [ai, oi, n] {
      for (int64_t i = 0; i < n; ++i)
        ai->grad[i] += oi->grad[i] * gelu_grad(ai->values[i]);
    });
  }
  return out;
}

Tensor Tape::softmax_rows(const Tensor& a) {
  int64_t n = a.rows(), m = a.cols();
  Tensor out = make_output(a.shape(), {&a});
  for (int64_t i = 0; i < n; ++i) {
    const double* x = a.data() + i * m;
    double* y = out.data() + i * m;
    double mx = x[0];
    for (int64_t j = 1; j < m; ++j) mx = std::max(mx, x[j]);
    double total = 0.0;
    for (int64_t j = 0; j < m; ++j) {
      y[j] = std::exp(x[j] - mx);
      total += y[j];
    }
    for (int64_t j = 0; j < m; ++j) y[j] /= total;
  }
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    record({&a}, out, [ai, oi, n, m] {
      for (int64_t i = 0; i < n; ++i) {
        const double* p = oi->values.data() + i * m;
        const double* gy = oi->grad.data() + i * m;
        double* gx = ai->grad.data() + i * m;
        double dot = 0.0;
        for (int64_t j = 0; j < m; ++j) dot += gy[j] * p[j];
        for (int64_t j = 0; j < m; ++j) gx[j] += p[j] * (gy[j] - dot);
      }
    });
  }
  return out;
}

Tensor Tape::log_softmax_rows(const Tensor& a) {
  int64_t n = a.rows(), m = a.cols();
  Tensor out = make_output(a.shape(), {&a});
  for (int64_t i = 0; i < n; ++i) {
    const double* x = a.data() + i * m;
    double* y = out.data() + i * m;
    double mx = x[0];
    for (int64_t j = 1; j < m; ++j) mx = std::max(mx, x[j]);
    double total = 0.0;
    for (int64_t j = 0; j < m; ++j) total += std::exp(x[j] - mx);
    double lse = mx + std::log(total);
    for (int64_t j = 0; j < m; ++j) y[j] = x[j] - lse;
  }
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    record({&a}, out, [ai, oi, n, m] {
      for (int64_t i = 0; i < n; ++i) {
        const double* y = oi->values.data() + i * m;
        const double* gy = oi->grad.data() + i * m;
        double* gx = ai->grad.data() + i * m;
        double total = 0.0;
        for (int64_t j = 0; j < m; ++j) total += gy[j];
        for (int64_t j = 0; j < m; ++j) gx[j] += gy[j] - std::exp(y[j]) * total;
      }
    });
  }
  return out;
}

Tensor Tape::layer_norm_rows(const Tensor& a, const Tensor& gain,
                             const Tensor& bias, double eps) {
  require(a.ndim() == 2, "layer_norm_rows: expected 2-d input");
  int64_t n = a.dim(0), m = a.dim(1);
  require(gain.size() == m && bias.size() == m,
          "layer_norm_rows: gain/bias length must equal column count");
  Tensor out = make_output(a.shape(), {&a, &gain, &bias});
  auto xhat = std::make_shared<std::vector<double>>(n * m);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  for (int64_t i = 0; i < n; ++i) {
    const double* x = a.data() + i * m;
    double mean = 0.0;
    for (int64_t j = 0; j < m; ++j) mean += x[j];
    mean /= m;
    double var = 0.0;
    for (int64_t j = 0; j < m; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= m;
    double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    double* y = out.data() + i * m;
    for (int64_t j = 0; j < m; ++j) {
      double xh = (x[j] - mean) * inv;
      (*xhat)[i * m + j] = xh;
      y[j] = gain.data()[j] * xh + bias.data()[j];
    }
  }
  if (out.requires_grad()) {
    auto ai = a.impl_, gi = gain.impl_, bi = bias.impl_, oi = out.impl_;
    record({&a, &gain, &bias}, out, [ai, gi, bi, oi, xhat, inv_std, n, m] {
      for (int64_t i = 0; i < n; ++i) {
        const double* gy = oi->grad.data() + i * m;
        const double* xh = xhat->data() + i * m;
        if (gi->requires_grad)
          for (int64_t j = 0; j < m; ++j) gi->grad[j] += gy[j] * xh[j];
        if (bi->requires_grad)
          for (int64_t j = 0; j < m; ++j) bi->grad[j] += gy[j];
        if (!ai->requires_grad) continue;
        double mean_t = 0.0, mean_tx = 0.0;
        for (int64_t j = 0; j < m; ++j) {
          double t = gy[j] * gi->values[j];
          mean_t += t;
          mean_tx += t * xh[j];
        }
        mean_t /= m;
        mean_tx /= m;
        double inv = (*inv_std)[i];
        double* gx = ai->grad.data() + i * m;
        for (int64_t j = 0; j < m; ++j) {
          double t = gy[j] * gi->values[j];
          gx[j] += inv * (t - mean_t - xh[j] * mean_tx);
        }
      }
    });
  }
  return out;
}

Tensor Tape::multihead_attention(const Tensor& q, const Tensor& k,
                                 const Tensor& v, int n_heads) {
  require(q.ndim() == 2 && k.shape() == q.shape() && v.shape() == q.shape(),
          "multihead_attention: q, k, v must share one 2-d shape");
  int64_t n = q.dim(0), dm = q.dim(1);
  require(n_heads > 0 && dm % n_heads == 0,
          "multihead_attention: token dim must divide by head count");
  int64_t hd = dm / n_heads;
  double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Tensor out = make_output(q.shape(), {&q, &k, &v});
  auto probs = std::make_shared<std::vector<EMat>>();
  probs->reserve(n_heads);
  CMatMap qm(q.data(), n, dm), km(k.data(), n, dm), vm(v.data(), n, dm);
  MatMap om(out.data(), n, dm);
  for (int h = 0; h < n_heads; ++h) {
    auto qh = qm.middleCols(h * hd, hd);
    auto kh = km.middleCols(h * hd, hd);
    auto vh = vm.middleCols(h * hd, hd);
    EMat s = (qh * kh.transpose()) * att_scale;
    for (int64_t i = 0; i < n; ++i) {
      double mx = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - mx).exp();
      s.row(i) /= s.row(i).sum();
    }
    om.middleCols(h * hd, hd).noalias() = s * vh;
    probs->push_back(std::move(s));
  }
  if (out.requires_grad()) {
    auto qi = q.impl_, ki = k.impl_, vi = v.impl_, oi = out.impl_;
    record({&q, &k, &v}, out,
           [qi, ki, vi, oi, probs, n, dm, hd, n_heads, att_scale] {
      CMatMap go(oi->grad.data(), n, dm);
      CMatMap qm(qi->values.data(), n, dm), km(ki->values.data(), n, dm),
          vm(vi->values.data(), n, dm);
      for (int h = 0; h < n_heads; ++h) {
        const EMat& p = (*probs)[h];
        auto goh = go.middleCols(h * hd, hd);
        auto qh = qm.middleCols(h * hd, hd);
        auto kh = km.middleCols(h * hd, hd);
        auto vh = vm.middleCols(h * hd, hd);
        if (vi->requires_grad)
          MatMap(vi->grad.data(), n, dm).middleCols(h * hd, hd).noalias() +=
              p.transpose() * goh;
        if (!qi->requires_grad && !ki->requires_grad) continue;
        EMat dp = goh * vh.transpose();
        for (int64_t i = 0; i < n; ++i) {
          double dot = dp.row(i).dot(p.row(i));
          dp.row(i) = p.row(i).array() * (dp.row(i).array() - dot);
        }
        if (qi->requires_grad)
          MatMap(qi->grad.data(), n, dm).middleCols(h * hd, hd).noalias() +=
              att_scale * (dp * kh);
        if (ki->requires_grad)
          MatMap(ki->grad.data(), n, dm).middleCols(h * hd, hd).noalias() +=
              att_scale * (dp.transpose() * qh);
      }
    });
  }
  return out;
}

Tensor Tape::pairwise_sqdist(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(1),
          "pairwise_sqdist: row dimension mismatch");
  int64_t n = a.dim(0), kk = b.dim(0), d = a.dim(1);
  Tensor out = make_output({n, kk}, {&a, &b});
  CMatMap am(a.data(), n, d), bm(b.data(), kk, d);
  MatMap om(out.data(), n, kk);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < kk; ++j)
      om(i, j) = (am.row(i) - bm.row(j)).squaredNorm();
  if (out.requires_grad()) {
    auto ai = a.impl_, bi = b.impl_, oi = out.impl_;
    record({&a, &b}, out, [ai, bi, oi, n, kk, d] {
      CMatMap am(ai->values.data(), n, d), bm(bi->values.data(), kk, d);
      CMatMap go(oi->grad.data(), n, kk);
      for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < kk; ++j) {
          double g = go(i, j);
          if (g == 0.0) continue;
          auto diff = am.row(i) - bm.row(j);
          if (ai->requires_grad)
            MatMap(ai->grad.data(), n, d).row(i) += 2.0 * g * diff;
          if (bi->requires_grad)
            MatMap(bi->grad.data(), kk, d).row(j) -= 2.0 * g * diff;
        }
    });
  }
  return out;
}

Tensor Tape::take_per_row(const Tensor& a, const std::vector<int>& index) {
  int64_t n = a.rows(), m = a.cols();
  require(static_cast<int64_t>(index.size()) == n,
          "take_per_row: one index per row required");
  for (int idx : index)
    require(idx >= 0 && idx < m, "take_per_row: column index out of range");
  Tensor out = make_output({n}, {&a});
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i * m + index[i]];
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    auto idx = std::make_shared<std::vector<int>>(index);
    record({&a}, out, [ai, oi, idx, n, m] {
      for (int64_t i = 0; i < n; ++i)
        ai->grad[i * m + (*idx)[i]] += oi->grad[i];
    });
  }
  return out;
}

Tensor Tape::min_const(const Tensor& a, double cap) {
  Tensor out = make_output(a.shape(), {&a});
  int64_t n = a.size();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = std::min(a.data()[i], cap);
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    record({&a}, out, [ai, oi, n, cap] {
      // Subgradient 0 at the kink.
      for (int64_t i = 0; i < n; ++i)
        if (ai->values[i] < cap) ai->grad[i] += oi->grad[i];
    });
  }
  return out;
}

Tensor Tape::sum(const Tensor& a) {
  Tensor out = make_output({1}, {&a});
  int64_t n = a.size();
  double total = 0.0;
  for (int64_t i = 0; i < n; ++i) total += a.data()[i];
  out.data()[0] = total;
  if (out.requires_grad()) {
    auto ai = a.impl_, oi = out.impl_;
    record({&a}, out, [ai, oi, n] {
      double g = oi->grad[0];
      for (int64_t i = 0; i < n; ++i) ai->grad[i] += g;
    });
  }
  return out;
}

}  // namespace zeus
