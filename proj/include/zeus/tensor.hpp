#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace zeus {

// Dense row-major tensor of doubles. The handle has value semantics and
// shares its buffer; values are stable while a tape references them, except
// for parameter updates applied between forward passes. Gradients live in a
// lazily allocated buffer of the same size.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<int64_t> shape, std::vector<double> values,
         bool requires_grad = false);

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<int64_t> shape, double value,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int64_t>& shape() const { return impl_->shape; }
  int64_t ndim() const { return static_cast<int64_t>(impl_->shape.size()); }
  int64_t dim(int i) const { return impl_->shape[i]; }
  int64_t size() const { return static_cast<int64_t>(impl_->values.size()); }
  // 2-D accessors; a 1-D tensor counts as a single row.
  int64_t rows() const;
  int64_t cols() const;

  double* data() { return impl_->values.data(); }
  const double* data() const { return impl_->values.data(); }
  std::vector<double>& values() { return impl_->values; }
  const std::vector<double>& values() const { return impl_->values; }
  double value() const;  // scalar tensors only
  double at(int64_t r, int64_t c) const { return impl_->values[r * cols() + c]; }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  // Gradient buffer, allocated zero-filled on first touch.
  double* grad();
  const std::vector<double>& grad_values() const { return impl_->grad; }
  bool grad_allocated() const { return impl_ && !impl_->grad.empty(); }
  void zero_grad();

  bool all_finite() const;
  bool same_buffer(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    std::vector<int64_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until first use
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
  friend class Tape;
};

// Reverse-mode tape. Operations append their backward closures in execution
// order, which is already a topological order of the DAG, so backward() is a
// single reverse sweep. Build one tape per forward pass and discard it; an op
// whose inputs all have requires_grad=false is computed without recording.
class Tape {
 public:
  // recording=false gives a pure evaluation mode: values are computed but
  // nothing is recorded, so backward() has nothing to do. Used for inference.
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& a, double c);
  // Broadcast a length-m vector across the rows of an n x m matrix.
  Tensor add_rowvec(const Tensor& a, const Tensor& v);
  Tensor mul_rowvec(const Tensor& a, const Tensor& v);
  Tensor gelu(const Tensor& a);  // exact erf form
  Tensor softmax_rows(const Tensor& a);
  Tensor log_softmax_rows(const Tensor& a);
  Tensor layer_norm_rows(const Tensor& a, const Tensor& gain,
                         const Tensor& bias, double eps = 1e-5);
  // Fused softmax(Q Kh^T / sqrt(head_dim)) Vh over n_heads column blocks.
  // Keeps the per-head attention matrix for backward instead of the whole
  // intermediate graph.
  Tensor multihead_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             int n_heads);
  // out[i][j] = squared euclidean distance between a.row(i) and b.row(j).
  Tensor pairwise_sqdist(const Tensor& a, const Tensor& b);
  // out[i] = a[i][index[i]]
  Tensor take_per_row(const Tensor& a, const std::vector<int>& index);
  Tensor min_const(const Tensor& a, double cap);
  Tensor sum(const Tensor& a);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every tensor on
  // the tape that requires them. Touched gradients are zeroed first, so one
  // backward per tape gives exact (not accumulated) gradients.
  void backward(const Tensor& loss);

  size_t size() const { return records_.size(); }

 private:
  using ImplPtr = std::shared_ptr<Tensor::Impl>;
  struct Record {
    std::vector<ImplPtr> tensors;  // inputs then output
    std::function<void()> fn;
  };
  Tensor make_output(std::vector<int64_t> shape,
                     std::initializer_list<const Tensor*> inputs);
  void record(std::initializer_list<const Tensor*> inputs,
              const Tensor& output, std::function<void()> fn);
  bool recording_ = true;
  std::vector<Record> records_;
};

}  // namespace zeus
