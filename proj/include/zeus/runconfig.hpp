#pragma once

#include <cstdint>
#include <string>

// vendored single-header json lives at the include root
#include <json.hpp>

#include "zeus/cluster.hpp"
#include "zeus/datagen.hpp"
#include "zeus/encoder.hpp"
#include "zeus/objective.hpp"

namespace zeus {

struct TrainConfig {
  double lr_peak = 3e-4;
  int warmup_steps = 100;
  int total_steps = 2000;
  int datasets_per_epoch = 200;  // bookkeeping unit for logs
  int gauss_ratio = 1;           // provenance cycle: this many gaussian...
  int transformed_ratio = 1;     // ...then this many transformed steps
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip_norm = 1.0;  // <= 0 disables clipping
  int grad_accum = 1;
  int eval_every = 250;
  int val_datasets_per_type = 20;
  int val_kmeans_n_init = 10;
  uint64_t seed = 0;

  void validate() const;
};

struct EvalOptions {
  BaselineScaling baseline_scaling = BaselineScaling::standard;
  int kmeans_n_init = 100;
  int gmm_n_init = 50;
  uint64_t seed = 0;

  void validate() const;
};

struct RunConfig {
  PriorConfig prior;
  EncoderConfig encoder;
  LossConfig loss;
  TrainConfig train;
  EvalOptions eval;

  void validate() const;
};

// Strict parsing: unknown keys anywhere raise UsageError naming the key.
// Every field is optional and defaults to the values above.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// Section-level helpers, used by the checkpoint manifest.
nlohmann::json prior_to_json(const PriorConfig&);
nlohmann::json encoder_to_json(const EncoderConfig&);
nlohmann::json loss_to_json(const LossConfig&);
nlohmann::json train_to_json(const TrainConfig&);
PriorConfig prior_from_json(const nlohmann::json&);
EncoderConfig encoder_from_json(const nlohmann::json&);
LossConfig loss_from_json(const nlohmann::json&);
TrainConfig train_from_json(const nlohmann::json&);

}  // namespace zeus
