#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zeus/tensor.hpp"

namespace zeus {

struct EncoderConfig {
  int input_dim = 30;
  int token_dim = 64;
  int n_blocks = 3;
  int n_heads = 4;
  int mlp_ratio = 4;
  int repr_dim = 64;

  void validate() const;
  int64_t parameter_count() const;
};

// Permutation-equivariant set encoder: each row is a token, there is no
// positional signal, so reordering rows reorders outputs and nothing else.
// Pre-norm residual blocks: x += Wo MHA(LN(x)); x += MLP(LN(x)); then a
// final linear to repr_dim (no closing layer norm).
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }

  // Stable name -> tensor pairs, in initialization order. The tensors share
  // storage with the ones the forward pass uses.
  const std::vector<std::pair<std::string, Tensor>>& parameters() const {
    return params_;
  }
  Tensor parameter(const std::string& name) const;

  // x is n x input_dim; result is n x repr_dim on the given tape.
  Tensor forward(Tape& tape, const Tensor& x) const;

  // Inference path: no tape bookkeeping.
  Eigen::MatrixXd embed(const Eigen::MatrixXd& x) const;

 private:
  struct Block {
    Tensor ln1_g, ln1_b;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_g, ln2_b;
    Tensor w1, b1, w2, b2;
  };
  Tensor linear(Tape& tape, const Tensor& x, const Tensor& w,
                const Tensor& b) const;
  EncoderConfig cfg_;
  Tensor embed_w_, embed_b_;
  std::vector<Block> blocks_;
  Tensor out_w_, out_b_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

}  // namespace zeus
