#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zeus/checkpoint.hpp"
#include "zeus/cluster.hpp"
#include "zeus/common.hpp"
#include "zeus/csv.hpp"
#include "zeus/datagen.hpp"
#include "zeus/metrics.hpp"
#include "zeus/runconfig.hpp"
#include "zeus/trainer.hpp"

namespace py = pybind11;

namespace {

zeus::RunConfig config_from_string(const std::string& text) {
  if (text.empty()) return zeus::RunConfig{};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw zeus::UsageError(std::string("config is not valid json: ") + e.what());
  }
  return zeus::parse_run_config(j);
}

std::vector<int> kinds_or_numeric(const std::vector<int>& kinds,
                                  Eigen::Index cols) {
  if (!kinds.empty()) return kinds;
  return std::vector<int>(static_cast<size_t>(cols), -1);
}

}  // namespace

PYBIND11_MODULE(_zeus, m) {
  m.doc() =
      "zero-shot tabular clustering core: a set-transformer encoder "
      "pre-trained on synthetic mixtures, plus classical clustering and "
      "evaluation on its embeddings";

  py::register_exception<zeus::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<zeus::NumericError>(m, "NumericError",
                                             PyExc_ArithmeticError);
  py::register_exception<zeus::IoError>(m, "IoError", PyExc_IOError);

  m.def(
      "default_config",
      [] { return zeus::run_config_to_json(zeus::RunConfig{}).dump(2); },
      "Complete run configuration with default values, as a json string.");

  m.def(
      "sample_dataset",
      [](const std::string& config, uint64_t seed, const std::string& provenance) {
        const zeus::RunConfig cfg = config_from_string(config);
        std::optional<zeus::Provenance> forced;
        if (!provenance.empty()) forced = zeus::provenance_from_name(provenance);
        const zeus::Dataset ds = zeus::sample_dataset(cfg.prior, seed, forced);
        py::dict out;
        out["x"] = ds.x;
        out["labels"] = ds.labels;
        out["column_kinds"] = ds.column_kinds;
        out["k"] = ds.k;
        out["provenance"] = zeus::provenance_name(ds.provenance);
        out["seed"] = ds.seed;
        return out;
      },
      py::arg("config") = "", py::arg("seed") = 0, py::arg("provenance") = "",
      "Draw one labeled dataset from the synthetic prior. provenance forces "
      "'gaussian' or 'transformed'; empty lets the prior flip its own coin.");

  m.def(
      "kmeans",
      [](const Eigen::MatrixXd& x, int k, int n_init, uint64_t seed) {
        zeus::KMeansConfig cfg;
        cfg.k = k;
        cfg.n_init = n_init;
        cfg.seed = seed;
        zeus::KMeansResult r = zeus::kmeans(x, cfg);
        return py::make_tuple(r.labels, r.centers, r.inertia);
      },
      py::arg("x"), py::arg("k"), py::arg("n_init") = 100, py::arg("seed") = 0,
      "Best-of-n_init k-means. Returns (labels, centers, inertia).");

  m.def(
      "gmm",
      [](const Eigen::MatrixXd& x, int k, const std::string& covariance,
         int n_init, uint64_t seed) {
        zeus::GmmConfig cfg;
        cfg.k = k;
        if (covariance == "identity")
          cfg.covariance = zeus::GmmCovariance::identity;
        else if (covariance == "full")
          cfg.covariance = zeus::GmmCovariance::full;
        else
          throw zeus::UsageError("covariance must be 'full' or 'identity'");
        cfg.n_init = n_init;
        cfg.seed = seed;
        zeus::GmmResult r = zeus::gmm_em(x, cfg);
        return py::make_tuple(r.labels, r.resp, r.means, r.weights,
                              r.log_likelihood);
      },
      py::arg("x"), py::arg("k"), py::arg("covariance") = "full",
      py::arg("n_init") = 50, py::arg("seed") = 0,
      "Gaussian mixture EM. Returns (labels, responsibilities, means, "
      "weights, log_likelihood).");

  m.def(
      "ari",
      [](const std::vector<int>& a, const std::vector<int>& b) {
        return zeus::ari(a, b);
      },
      py::arg("a"), py::arg("b"), "Adjusted Rand index between two labelings.");

  m.def(
      "brier_matched",
      [](const Eigen::MatrixXd& soft, const std::vector<int>& truth) {
        return zeus::brier(zeus::match_columns(soft, truth), truth);
      },
      py::arg("soft"), py::arg("truth"),
      "Brier score after matching cluster columns to classes.");

  m.def(
      "pretrain",
      [](const std::string& config, const std::string& out) {
        const zeus::RunConfig cfg = config_from_string(config);
        zeus::PretrainResult r = zeus::pretrain(cfg);
        if (!out.empty()) {
          r.final_state.save(out);
          r.best_state.save(out + ".best");
        }
        py::dict result;
        result["losses"] = r.losses;
        result["best_val_ari"] = r.best_val_ari;
        py::list history;
        for (const auto& row : r.final_state.history) {
          py::dict h;
          h["step"] = row.step;
          h["loss"] = row.loss;
          h["val_ari_gauss"] = row.val_ari_gauss;
          h["val_ari_transf"] = row.val_ari_transf;
          history.append(h);
        }
        result["history"] = history;
        return result;
      },
      py::arg("config") = "", py::arg("out") = "",
      "Run the pre-training loop; writes OUT and OUT.best when out is given. "
      "Returns per-step losses, the validation history, and the best "
      "validation ARI.");

  py::class_<zeus::Encoder>(m, "Encoder",
                            "Permutation-equivariant set encoder. embed() "
                            "runs the preprocessing pipeline (standardize, "
                            "scale, pad or reduce to the input width) before "
                            "the forward pass.")
      .def(py::init([](const std::string& config, uint64_t seed) {
             return zeus::Encoder(config_from_string(config).encoder, seed);
           }),
           py::arg("config") = "", py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::string& path) {
            return zeus::Checkpoint::load(path).restore_encoder();
          },
          py::arg("path"), "Restore the encoder from a checkpoint file.")
      .def(
          "embed",
          [](const zeus::Encoder& e, const Eigen::MatrixXd& x,
             const std::vector<int>& column_kinds) {
            return e.embed(zeus::prepare(x, kinds_or_numeric(column_kinds, x.cols()),
                                         e.config().input_dim));
          },
          py::arg("x"), py::arg("column_kinds") = std::vector<int>{},
          "Embed a table; column_kinds marks one-hot groups (-1 = numeric, "
          "default all numeric).")
      .def(
          "embed_and_cluster",
          [](const zeus::Encoder& e, const Eigen::MatrixXd& x,
             const std::vector<int>& column_kinds, int k, const std::string& method,
             int n_init, uint64_t seed) {
            zeus::EvalOptions opts;
            opts.kmeans_n_init = n_init;
            opts.gmm_n_init = n_init;
            opts.seed = seed;
            zeus::AssignMethod am;
            if (method == "kmeans")
              am = zeus::AssignMethod::kmeans;
            else if (method == "gmm")
              am = zeus::AssignMethod::gmm;
            else
              throw zeus::UsageError("method must be 'kmeans' or 'gmm'");
            zeus::Assignment a = zeus::embed_and_cluster(
                e, x, kinds_or_numeric(column_kinds, x.cols()), k, am, opts);
            return py::make_tuple(a.labels, a.soft);
          },
          py::arg("x"), py::arg("column_kinds") = std::vector<int>{},
          py::arg("k") = 2, py::arg("method") = "kmeans", py::arg("n_init") = 10,
          py::arg("seed") = 0,
          "Embed then cluster. Returns (labels, soft); kmeans soft rows are "
          "one-hot, gmm uses the identity-covariance regime.")
      .def_property_readonly(
          "input_dim",
          [](const zeus::Encoder& e) { return e.config().input_dim; })
      .def_property_readonly(
          "repr_dim", [](const zeus::Encoder& e) { return e.config().repr_dim; })
      .def_property_readonly("parameter_count", [](const zeus::Encoder& e) {
        return e.config().parameter_count();
      });
}
