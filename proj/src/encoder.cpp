#include "zeus/encoder.hpp"

#include <cmath>

#include "zeus/common.hpp"
#include "zeus/rng.hpp"

namespace zeus {

void EncoderConfig::validate() const {
  if (input_dim < 1 || token_dim < 1 || n_blocks < 1 || n_heads < 1 ||
      mlp_ratio < 1 || repr_dim < 1)
    throw UsageError("encoder config: all dimensions must be positive");
  if (token_dim % n_heads != 0)
    throw UsageError("encoder config: token_dim must divide by n_heads");
}

int64_t EncoderConfig::parameter_count() const {
  int64_t t = token_dim, h = static_cast<int64_t>(mlp_ratio) * token_dim;
  int64_t embed = static_cast<int64_t>(input_dim) * t + t;
  int64_t block = 2 * (2 * t)            // two layer norms
                  + 4 * (t * t + t)      // q, k, v, o projections
                  + (t * h + h)          // mlp in
                  + (h * t + t);         // mlp out
  int64_t out = t * static_cast<int64_t>(repr_dim) + repr_dim;
  return embed + n_blocks * block + out;
}

namespace {

Tensor init_linear_weight(int64_t fan_in, int64_t fan_out, Rng& rng) {
  Tensor w = Tensor::zeros({fan_in, fan_out}, true);
  double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int64_t i = 0; i < w.size(); ++i) w.data()[i] = stddev * rng.normal();
  return w;
}

}  // namespace

Encoder::Encoder(const EncoderConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  int64_t t = cfg_.token_dim;
  int64_t h = static_cast<int64_t>(cfg_.mlp_ratio) * t;
  auto push = [this](const std::string& name, Tensor tensor) {
    params_.emplace_back(name, tensor);
    return tensor;
  };
  embed_w_ = push("embed.w", init_linear_weight(cfg_.input_dim, t, rng));
  embed_b_ = push("embed.b", Tensor::zeros({t}, true));
  for (int b = 0; b < cfg_.n_blocks; ++b) {
    std::string p = "block" + std::to_string(b) + ".";
    Block blk;
    blk.ln1_g = push(p + "ln1.g", Tensor::full({t}, 1.0, true));
    blk.ln1_b = push(p + "ln1.b", Tensor::zeros({t}, true));
    blk.wq = push(p + "attn.wq", init_linear_weight(t, t, rng));
    blk.bq = push(p + "attn.bq", Tensor::zeros({t}, true));
    blk.wk = push(p + "attn.wk", init_linear_weight(t, t, rng));
    blk.bk = push(p + "attn.bk", Tensor::zeros({t}, true));
    blk.wv = push(p + "attn.wv", init_linear_weight(t, t, rng));
    blk.bv = push(p + "attn.bv", Tensor::zeros({t}, true));
    blk.wo = push(p + "attn.wo", init_linear_weight(t, t, rng));
    blk.bo = push(p + "attn.bo", Tensor::zeros({t}, true));
    blk.ln2_g = push(p + "ln2.g", Tensor::full({t}, 1.0, true));
    blk.ln2_b = push(p + "ln2.b", Tensor::zeros({t}, true));
    blk.w1 = push(p + "mlp.w1", init_linear_weight(t, h, rng));
    blk.b1 = push(p + "mlp.b1", Tensor::zeros({h}, true));
    blk.w2 = push(p + "mlp.w2", init_linear_weight(h, t, rng));
    blk.b2 = push(p + "mlp.b2", Tensor::zeros({t}, true));
    blocks_.push_back(std::move(blk));
  }
  out_w_ = push("out.w", init_linear_weight(t, cfg_.repr_dim, rng));
  out_b_ = push("out.b", Tensor::zeros({cfg_.repr_dim}, true));
}

Tensor Encoder::parameter(const std::string& name) const {
  for (const auto& [n, tensor] : params_)
    if (n == name) return tensor;
  throw UsageError("encoder: unknown parameter " + name);
}

Tensor Encoder::linear(Tape& tape, const Tensor& x, const Tensor& w,
                       const Tensor& b) const {
  return tape.add_rowvec(tape.matmul(x, w), b);
}

Tensor Encoder::forward(Tape& tape, const Tensor& x) const {
  if (x.ndim() != 2 || x.dim(1) != cfg_.input_dim)
    throw UsageError("encoder: input must be n x input_dim");
  Tensor hcur = linear(tape, x, embed_w_, embed_b_);
  for (const Block& blk : blocks_) {
    Tensor normed = tape.layer_norm_rows(hcur, blk.ln1_g, blk.ln1_b);
    Tensor q = linear(tape, normed, blk.wq, blk.bq);
    Tensor k = linear(tape, normed, blk.wk, blk.bk);
    Tensor v = linear(tape, normed, blk.wv, blk.bv);
    Tensor att = tape.multihead_attention(q, k, v, cfg_.n_heads);
    hcur = tape.add(hcur, linear(tape, att, blk.wo, blk.bo));
    Tensor normed2 = tape.layer_norm_rows(hcur, blk.ln2_g, blk.ln2_b);
    Tensor mid = tape.gelu(linear(tape, normed2, blk.w1, blk.b1));
    hcur = tape.add(hcur, linear(tape, mid, blk.w2, blk.b2));
  }
  return linear(tape, hcur, out_w_, out_b_);
}

Eigen::MatrixXd Encoder::embed(const Eigen::MatrixXd& x) const {
  std::vector<double> values(x.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      values[i * x.cols() + j] = x(i, j);
  Tensor input({x.rows(), x.cols()}, std::move(values));
  Tape tape(false);
  Tensor z = forward(tape, input);
  Eigen::MatrixXd out(z.dim(0), z.dim(1));
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = z.at(i, j);
  return out;
}

}  // namespace zeus
