#include "zeus/runconfig.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>

#include "zeus/common.hpp"

namespace zeus {

namespace {

using nlohmann::json;

// Rejects keys outside the allowed set so typos fail loudly.
void check_keys(const json& j, const char* section,
                std::initializer_list<const char*> known) {
  if (!j.is_object())
    throw UsageError(std::string("config section '") + section +
                     "' must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw UsageError(std::string("unknown key '") + item.key() + "' in " +
                       section);
  }
}

template <typename T>
void read_to(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has a bad type");
  }
}

template <typename T>
void read_pair(const json& j, const char* key, T* out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2)
    throw UsageError(std::string("config key '") + key +
                     "' must be a [lo, hi] pair");
  try {
    out[0] = v[0].get<T>();
    out[1] = v[1].get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config key '") + key + "' has a bad type");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr_peak > 0.0)) throw UsageError("train config: lr_peak must be positive");
  if (warmup_steps < 0 || total_steps < 0 || warmup_steps > total_steps)
    throw UsageError("train config: need 0 <= warmup_steps <= total_steps");
  if (datasets_per_epoch < 1)
    throw UsageError("train config: datasets_per_epoch must be positive");
  if (gauss_ratio < 0 || transformed_ratio < 0 ||
      gauss_ratio + transformed_ratio == 0)
    throw UsageError("train config: provenance ratio must be nonnegative and nonzero");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw UsageError("train config: betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw UsageError("train config: adam_eps must be positive");
  if (grad_accum < 1) throw UsageError("train config: grad_accum must be positive");
  if (eval_every < 1) throw UsageError("train config: eval_every must be positive");
  if (val_datasets_per_type < 0 || val_kmeans_n_init < 1)
    throw UsageError("train config: bad validation settings");
}

void EvalOptions::validate() const {
  if (kmeans_n_init < 1 || gmm_n_init < 1)
    throw UsageError("eval config: n_init values must be positive");
}

void RunConfig::validate() const {
  prior.validate();
  encoder.validate();
  loss.validate();
  train.validate();
  eval.validate();
}

PriorConfig prior_from_json(const json& j) {
  PriorConfig cfg;
  check_keys(j, "prior",
             {"k_range", "samples_per_component_range", "max_numeric_dim",
              "min_sep_range", "eigenvalue_range", "full_rank_prob",
              "degenerate_prob", "categorical_chance", "max_categorical_vars",
              "category_count_range", "dirichlet_alpha",
              "transform_depth_range", "spectral_norm_range",
              "transformed_fraction", "seed"});
  read_pair(j, "k_range", cfg.k_range);
  read_pair(j, "samples_per_component_range", cfg.samples_per_component_range);
  read_to(j, "max_numeric_dim", cfg.max_numeric_dim);
  read_pair(j, "min_sep_range", cfg.min_sep_range);
  read_pair(j, "eigenvalue_range", cfg.eigenvalue_range);
  read_to(j, "full_rank_prob", cfg.full_rank_prob);
  read_to(j, "degenerate_prob", cfg.degenerate_prob);
  read_to(j, "categorical_chance", cfg.categorical_chance);
  read_to(j, "max_categorical_vars", cfg.max_categorical_vars);
  read_pair(j, "category_count_range", cfg.category_count_range);
  read_to(j, "dirichlet_alpha", cfg.dirichlet_alpha);
  read_pair(j, "transform_depth_range", cfg.transform_depth_range);
  read_pair(j, "spectral_norm_range", cfg.spectral_norm_range);
  read_to(j, "transformed_fraction", cfg.transformed_fraction);
  read_to(j, "seed", cfg.seed);
  return cfg;
}

json prior_to_json(const PriorConfig& c) {
  return json{{"k_range", {c.k_range[0], c.k_range[1]}},
              {"samples_per_component_range",
               {c.samples_per_component_range[0],
                c.samples_per_component_range[1]}},
              {"max_numeric_dim", c.max_numeric_dim},
              {"min_sep_range", {c.min_sep_range[0], c.min_sep_range[1]}},
              {"eigenvalue_range",
               {c.eigenvalue_range[0], c.eigenvalue_range[1]}},
              {"full_rank_prob", c.full_rank_prob},
              {"degenerate_prob", c.degenerate_prob},
              {"categorical_chance", c.categorical_chance},
              {"max_categorical_vars", c.max_categorical_vars},
              {"category_count_range",
               {c.category_count_range[0], c.category_count_range[1]}},
              {"dirichlet_alpha", c.dirichlet_alpha},
              {"transform_depth_range",
               {c.transform_depth_range[0], c.transform_depth_range[1]}},
              {"spectral_norm_range",
               {c.spectral_norm_range[0], c.spectral_norm_range[1]}},
              {"transformed_fraction", c.transformed_fraction},
              {"seed", c.seed}};
}

EncoderConfig encoder_from_json(const json& j) {
  EncoderConfig cfg;
  check_keys(j, "encoder", {"input_dim", "token_dim", "n_blocks", "n_heads",
                            "mlp_ratio", "repr_dim"});
  read_to(j, "input_dim", cfg.input_dim);
  read_to(j, "token_dim", cfg.token_dim);
  read_to(j, "n_blocks", cfg.n_blocks);
  read_to(j, "n_heads", cfg.n_heads);
  read_to(j, "mlp_ratio", cfg.mlp_ratio);
  read_to(j, "repr_dim", cfg.repr_dim);
  return cfg;
}

json encoder_to_json(const EncoderConfig& c) {
  return json{{"input_dim", c.input_dim}, {"token_dim", c.token_dim},
              {"n_blocks", c.n_blocks},   {"n_heads", c.n_heads},
              {"mlp_ratio", c.mlp_ratio}, {"repr_dim", c.repr_dim}};
}

LossConfig loss_from_json(const json& j) {
  LossConfig cfg;
  check_keys(j, "loss", {"lambda_cp", "lambda_sep", "sep_threshold", "use_cp",
                         "use_sep", "cp_sign_flipped"});
  read_to(j, "lambda_cp", cfg.lambda_cp);
  read_to(j, "lambda_sep", cfg.lambda_sep);
  read_to(j, "sep_threshold", cfg.sep_threshold);
  read_to(j, "use_cp", cfg.use_cp);
  read_to(j, "use_sep", cfg.use_sep);
  read_to(j, "cp_sign_flipped", cfg.cp_sign_flipped);
  return cfg;
}

json loss_to_json(const LossConfig& c) {
  return json{{"lambda_cp", c.lambda_cp},
              {"lambda_sep", c.lambda_sep},
              {"sep_threshold", c.sep_threshold},
              {"use_cp", c.use_cp},
              {"use_sep", c.use_sep},
              {"cp_sign_flipped", c.cp_sign_flipped}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig cfg;
  check_keys(j, "train",
             {"lr_peak", "warmup_steps", "total_steps", "datasets_per_epoch",
              "gauss_ratio", "transformed_ratio", "adam_beta1", "adam_beta2",
              "adam_eps", "grad_clip_norm", "grad_accum", "eval_every",
              "val_datasets_per_type", "val_kmeans_n_init", "seed"});
  read_to(j, "lr_peak", cfg.lr_peak);
  read_to(j, "warmup_steps", cfg.warmup_steps);
  read_to(j, "total_steps", cfg.total_steps);
  read_to(j, "datasets_per_epoch", cfg.datasets_per_epoch);
  read_to(j, "gauss_ratio", cfg.gauss_ratio);
  read_to(j, "transformed_ratio", cfg.transformed_ratio);
  read_to(j, "adam_beta1", cfg.adam_beta1);
  read_to(j, "adam_beta2", cfg.adam_beta2);
  read_to(j, "adam_eps", cfg.adam_eps);
  read_to(j, "grad_clip_norm", cfg.grad_clip_norm);
  read_to(j, "grad_accum", cfg.grad_accum);
  read_to(j, "eval_every", cfg.eval_every);
  read_to(j, "val_datasets_per_type", cfg.val_datasets_per_type);
  read_to(j, "val_kmeans_n_init", cfg.val_kmeans_n_init);
  read_to(j, "seed", cfg.seed);
  return cfg;
}

json train_to_json(const TrainConfig& c) {
  return json{{"lr_peak", c.lr_peak},
              {"warmup_steps", c.warmup_steps},
              {"total_steps", c.total_steps},
              {"datasets_per_epoch", c.datasets_per_epoch},
              {"gauss_ratio", c.gauss_ratio},
              {"transformed_ratio", c.transformed_ratio},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"grad_clip_norm", c.grad_clip_norm},
              {"grad_accum", c.grad_accum},
              {"eval_every", c.eval_every},
              {"val_datasets_per_type", c.val_datasets_per_type},
              {"val_kmeans_n_init", c.val_kmeans_n_init},
              {"seed", c.seed}};
}

namespace {

EvalOptions eval_from_json(const json& j) {
  EvalOptions cfg;
  check_keys(j, "eval",
             {"baseline_scaling", "kmeans_n_init", "gmm_n_init", "seed"});
  if (j.contains("baseline_scaling")) {
    std::string s = j.at("baseline_scaling").get<std::string>();
    if (s == "standard")
      cfg.baseline_scaling = BaselineScaling::standard;
    else if (s == "scaled")
      cfg.baseline_scaling = BaselineScaling::scaled;
    else
      throw UsageError("eval config: baseline_scaling must be 'standard' or 'scaled'");
  }
  read_to(j, "kmeans_n_init", cfg.kmeans_n_init);
  read_to(j, "gmm_n_init", cfg.gmm_n_init);
  read_to(j, "seed", cfg.seed);
  return cfg;
}

json eval_to_json(const EvalOptions& c) {
  return json{{"baseline_scaling", c.baseline_scaling == BaselineScaling::scaled
                                       ? "scaled"
                                       : "standard"},
              {"kmeans_n_init", c.kmeans_n_init},
              {"gmm_n_init", c.gmm_n_init},
              {"seed", c.seed}};
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  check_keys(j, "run config", {"prior", "encoder", "loss", "train", "eval"});
  RunConfig cfg;
  if (j.contains("prior")) cfg.prior = prior_from_json(j.at("prior"));
  if (j.contains("encoder")) cfg.encoder = encoder_from_json(j.at("encoder"));
  if (j.contains("loss")) cfg.loss = loss_from_json(j.at("loss"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  if (j.contains("eval")) cfg.eval = eval_from_json(j.at("eval"));
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + " is not valid json: " + e.what());
  }
  return parse_run_config(j);
}

json run_config_to_json(const RunConfig& cfg) {
  return json{{"prior", prior_to_json(cfg.prior)},
              {"encoder", encoder_to_json(cfg.encoder)},
              {"loss", loss_to_json(cfg.loss)},
              {"train", train_to_json(cfg.train)},
              {"eval", eval_to_json(cfg.eval)}};
}

}  // namespace zeus
