#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zeus/encoder.hpp"
#include "zeus/runconfig.hpp"

namespace zeus {

struct HistoryRow {
  int64_t step = 0;
  double loss = 0.0;
  double val_ari_gauss = 0.0;
  double val_ari_transf = 0.0;
};

struct TensorEntry {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<double> values;
};

// Self-contained training snapshot. The file layout is:
//   bytes 0..4    magic "ZEUS1"
//   bytes 5..12   manifest byte length, little-endian u64
//   manifest      json: version, configs, step, adam_updates, history,
//                 tensor directory (name/shape/offset/length)
//   blob          all tensor values, f64 little-endian, back to back
// Offsets are byte offsets into the blob; length counts elements. Round
// trips are bit exact.
struct Checkpoint {
  PriorConfig prior;
  EncoderConfig encoder_cfg;
  LossConfig loss;
  TrainConfig train;
  int64_t step = 0;
  int64_t adam_updates = 0;
  std::vector<HistoryRow> history;
  std::vector<TensorEntry> tensors;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  const TensorEntry* find(const std::string& name) const;
  // Builds an encoder from the stored config and parameter tensors.
  Encoder restore_encoder() const;
};

// Snapshot helper: captures the encoder parameters under their own names.
std::vector<TensorEntry> snapshot_parameters(const Encoder& enc);

}  // namespace zeus
