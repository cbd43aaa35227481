#include "zeus/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zeus/checkpoint.hpp"
#include "zeus/cluster.hpp"
#include "zeus/common.hpp"
#include "zeus/csv.hpp"
#include "zeus/datagen.hpp"
#include "zeus/metrics.hpp"
#include "zeus/runconfig.hpp"
#include "zeus/trainer.hpp"

namespace zeus {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

Eigen::MatrixXd one_hot(const std::vector<int>& labels, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<int>(labels.size()), k);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw UsageError("assignment labels exceed the class count of the dataset");
    out(static_cast<int>(i), labels[i]) = 1.0;
  }
  return out;
}

std::string dataset_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "dataset_%05d", index);
  return buf;
}

struct GenerateArgs {
  std::string config, out_dir, provenance = "mixed";
  int count = 20;
  uint64_t seed = 0;
  bool has_seed = false;
};

void cmd_generate(const GenerateArgs& a) {
  RunConfig cfg = load_config_or_default(a.config);
  if (a.has_seed) cfg.prior.seed = a.seed;
  cfg.prior.validate();
  if (a.count < 0) throw UsageError("--count must be nonnegative");
  fs::create_directories(a.out_dir);

  json manifest;
  manifest["seed"] = cfg.prior.seed;
  manifest["datasets"] = json::array();
  auto emit = [&](int index, std::optional<Provenance> forced) {
    const Dataset ds =
        sample_dataset(cfg.prior, mix_seed(cfg.prior.seed, index), forced);
    const std::string stem = dataset_stem(index);
    const fs::path csv = fs::path(a.out_dir) / (stem + ".csv");
    const fs::path meta = fs::path(a.out_dir) / (stem + ".json");
    write_dataset(csv.string(), meta.string(), ds);
    manifest["datasets"].push_back({{"csv", stem + ".csv"},
                                    {"meta", stem + ".json"},
                                    {"seed", ds.seed},
                                    {"provenance", provenance_name(ds.provenance)},
                                    {"k", ds.k},
                                    {"n", ds.x.rows()}});
  };

  if (a.provenance == "mixed") {
    for (int i = 0; i < a.count; ++i) emit(i, {});
  } else if (a.provenance == "both") {
    for (int i = 0; i < a.count; ++i) emit(i, Provenance::gaussian);
    for (int i = 0; i < a.count; ++i) emit(a.count + i, Provenance::transformed);
  } else {
    const Provenance p = provenance_from_name(a.provenance);
    for (int i = 0; i < a.count; ++i) emit(i, p);
  }

  const fs::path mpath = fs::path(a.out_dir) / "manifest.json";
  std::ofstream out(mpath, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + mpath.string() + "' for writing");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + mpath.string() + "'");
  std::cerr << "wrote " << manifest["datasets"].size() << " datasets to "
            << a.out_dir << '\n';
}

struct PretrainArgs {
  std::string config, out, resume;
  uint64_t seed = 0;
  bool has_seed = false;
};

void cmd_pretrain(const PretrainArgs& a) {
  RunConfig cfg = load_config_or_default(a.config);
  if (a.has_seed) cfg.train.seed = a.seed;
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = Checkpoint::load(a.resume);
  const PretrainResult r =
      pretrain(cfg, &std::cout, resume ? &*resume : nullptr);
  r.final_state.save(a.out);
  r.best_state.save(a.out + ".best");
  std::cerr << "saved final state to " << a.out << " and best (mean val ari "
            << r.best_val_ari << ") to " << a.out << ".best\n";
}

struct EmbedArgs {
  std::string model, input, meta, out;
};

void cmd_embed(const EmbedArgs& a) {
  const Checkpoint ck = Checkpoint::load(a.model);
  const Encoder enc = ck.restore_encoder();
  const Dataset ds = read_dataset(a.input, a.meta);
  const Eigen::MatrixXd z =
      enc.embed(prepare(ds.x, ds.column_kinds, enc.config().input_dim));
  std::vector<std::string> header;
  for (int j = 0; j < z.cols(); ++j) header.push_back("z" + std::to_string(j));
  write_matrix_csv(a.out, z, header);
}

struct ClusterArgs {
  std::string config, model, input, meta, out, method = "kmeans";
  int k = 0;  // 0: use the dataset's own k
  uint64_t seed = 0;
  bool has_seed = false;
};

void cmd_cluster(const ClusterArgs& a) {
  RunConfig cfg = load_config_or_default(a.config);
  if (a.has_seed) cfg.eval.seed = a.seed;
  const Checkpoint ck = Checkpoint::load(a.model);
  const Encoder enc = ck.restore_encoder();
  const Dataset ds = read_dataset(a.input, a.meta);
  const int k = a.k > 0 ? a.k : ds.k;
  const AssignMethod method =
      a.method == "kmeans" ? AssignMethod::kmeans : AssignMethod::gmm;
  const Assignment r =
      embed_and_cluster(enc, ds.x, ds.column_kinds, k, method, cfg.eval);
  if (method == AssignMethod::kmeans)
    write_hard_assignment(a.out, r.labels);
  else
    write_soft_assignment(a.out, r.soft);
}

struct EvalArgs {
  std::string pred, input, meta;
};

void cmd_eval(const EvalArgs& a) {
  const Dataset truth = read_dataset(a.input, a.meta);
  const AssignmentFile pred = read_assignment(a.pred);
  if (static_cast<int>(pred.labels.size()) != truth.x.rows())
    throw UsageError("assignment row count does not match the dataset");
  const Eigen::MatrixXd soft =
      pred.soft ? pred.probs : one_hot(pred.labels, truth.k);
  if (soft.cols() != truth.k)
    throw UsageError("assignment cluster count does not match the dataset's k");

  json report;
  report["ari"] = ari(pred.labels, truth.labels) * 100.0;
  report["brier"] = brier(match_columns(soft, truth.labels), truth.labels);
  std::cout << report.dump() << '\n';
}

struct BenchArgs {
  std::string config, model, data, out;
  std::string baseline_scaling;  // empty: take it from the config
  uint64_t seed = 0;
  bool has_seed = false;
};

void write_report_csv(const std::string& path,
                      const std::vector<std::string>& datasets,
                      const std::vector<std::string>& methods,
                      const Eigen::MatrixXd& scores,
                      const std::vector<MethodSummary>& summary) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  out << "dataset";
  for (const auto& m : methods) out << ',' << m;
  out << '\n';
  for (size_t i = 0; i < datasets.size(); ++i) {
    out << datasets[i];
    for (int j = 0; j < scores.cols(); ++j)
      out << ',' << fmt(scores(static_cast<int>(i), j));
    out << '\n';
  }
  out << "Mean";
  for (const auto& s : summary) out << ',' << fmt(s.mean);
  out << "\nMean-Rank";
  for (const auto& s : summary) out << ',' << fmt(s.mean_rank);
  out << "\nTop-3";
  for (const auto& s : summary) out << ',' << s.top3;
  out << "\nTop-1";
  for (const auto& s : summary) out << ',' << s.top1;
  out << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void cmd_bench(const BenchArgs& a) {
  RunConfig cfg = load_config_or_default(a.config);
  if (a.has_seed) cfg.eval.seed = a.seed;
  if (!a.baseline_scaling.empty())
    cfg.eval.baseline_scaling = a.baseline_scaling == "standard"
                                    ? BaselineScaling::standard
                                    : BaselineScaling::scaled;
  const Checkpoint ck = Checkpoint::load(a.model);
  const Encoder enc = ck.restore_encoder();

  const fs::path mpath = fs::path(a.data) / "manifest.json";
  std::ifstream mi(mpath);
  if (!mi) throw IoError("cannot open '" + mpath.string() + "'");
  json manifest;
  try {
    mi >> manifest;
  } catch (const json::exception& e) {
    throw IoError("'" + mpath.string() + "' is not a valid manifest: " + e.what());
  }
  if (!manifest.contains("datasets") || !manifest["datasets"].is_array() ||
      manifest["datasets"].empty())
    throw UsageError("'" + mpath.string() + "' lists no datasets");

  const std::vector<std::string> methods = {"kmeans", "gmm", "zeus-kmeans",
                                            "zeus-gmm"};
  const int n = static_cast<int>(manifest["datasets"].size());
  Eigen::MatrixXd ari_scores(n, 4), brier_scores(n, 4);
  std::vector<std::string> names;

  for (int i = 0; i < n; ++i) {
    const auto& entry = manifest["datasets"][i];
    std::string csv, meta;
    try {
      csv = entry.at("csv").get<std::string>();
      meta = entry.at("meta").get<std::string>();
    } catch (const json::exception& e) {
      throw IoError("'" + mpath.string() + "' has a malformed dataset entry: " +
                    e.what());
    }
    names.push_back(fs::path(csv).stem().string());
    const Dataset ds = read_dataset((fs::path(a.data) / csv).string(),
                                    (fs::path(a.data) / meta).string());
    const Eigen::MatrixXd xb =
        prepare_baseline(ds.x, ds.column_kinds, cfg.eval.baseline_scaling);

    KMeansConfig kc;
    kc.k = ds.k;
    kc.n_init = cfg.eval.kmeans_n_init;
    kc.seed = mix_seed(cfg.eval.seed, 4 * i);
    const KMeansResult km = kmeans(xb, kc);
    ari_scores(i, 0) = ari(km.labels, ds.labels) * 100.0;
    brier_scores(i, 0) =
        brier(match_columns(one_hot(km.labels, ds.k), ds.labels), ds.labels);

    GmmConfig gc;
    gc.k = ds.k;
    gc.covariance = GmmCovariance::full;
    gc.n_init = cfg.eval.gmm_n_init;
    gc.seed = mix_seed(cfg.eval.seed, 4 * i + 1);
    const GmmResult gm = gmm_em(xb, gc);
    ari_scores(i, 1) = ari(gm.labels, ds.labels) * 100.0;
    brier_scores(i, 1) = brier(match_columns(gm.resp, ds.labels), ds.labels);

    EvalOptions zk = cfg.eval;
    zk.seed = mix_seed(cfg.eval.seed, 4 * i + 2);
    const Assignment az =
        embed_and_cluster(enc, ds.x, ds.column_kinds, ds.k, AssignMethod::kmeans, zk);
    ari_scores(i, 2) = ari(az.labels, ds.labels) * 100.0;
    brier_scores(i, 2) =
        brier(match_columns(az.soft, ds.labels), ds.labels);

    EvalOptions zg = cfg.eval;
    zg.seed = mix_seed(cfg.eval.seed, 4 * i + 3);
    const Assignment ag =
        embed_and_cluster(enc, ds.x, ds.column_kinds, ds.k, AssignMethod::gmm, zg);
    ari_scores(i, 3) = ari(ag.labels, ds.labels) * 100.0;
    brier_scores(i, 3) = brier(match_columns(ag.soft, ds.labels), ds.labels);

    std::cerr << "bench " << (i + 1) << "/" << n << " " << names.back() << '\n';
  }

  const auto ari_summary = benchmark_aggregate(ari_scores, methods, true);
  const auto brier_summary = benchmark_aggregate(brier_scores, methods, false);
  write_report_csv(a.out + ".ari.csv", names, methods, ari_scores, ari_summary);
  write_report_csv(a.out + ".brier.csv", names, methods, brier_scores, brier_summary);

  json report;
  report["methods"] = methods;
  report["datasets"] = names;
  for (int i = 0; i < n; ++i) {
    json ra = json::array(), rb = json::array();
    for (int j = 0; j < 4; ++j) {
      ra.push_back(ari_scores(i, j));
      rb.push_back(brier_scores(i, j));
    }
    report["ari"].push_back(ra);
    report["brier"].push_back(rb);
  }
  auto summarize = [](const std::vector<MethodSummary>& rows) {
    json out = json::object();
    for (const auto& s : rows)
      out[s.name] = {{"mean", s.mean},
                     {"mean_rank", s.mean_rank},
                     {"top1", s.top1},
                     {"top3", s.top3}};
    return out;
  };
  report["summary"] = {{"ari", summarize(ari_summary)},
                       {"brier", summarize(brier_summary)}};
  std::ofstream jo(a.out + ".json", std::ios::trunc);
  if (!jo) throw IoError("cannot open '" + a.out + ".json' for writing");
  jo << report.dump(2) << '\n';
  if (!jo) throw IoError("failed writing '" + a.out + ".json'");

  std::cout << report["summary"].dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"zero-shot tabular clustering: synthetic pre-training, "
               "embedding, clustering, and evaluation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* g = app.add_subcommand("generate", "sample datasets from the prior");
  g->add_option("--config", gen.config, "run config json");
  g->add_option("--out", gen.out_dir, "output directory")->required();
  g->add_option("--count", gen.count, "datasets to generate (per provenance for 'both')");
  auto* gseed = g->add_option("--seed", gen.seed, "override the prior seed");
  g->add_option("--provenance", gen.provenance, "mixed|gaussian|transformed|both")
      ->check(CLI::IsMember({"mixed", "gaussian", "transformed", "both"}));
  g->callback([&] {
    gen.has_seed = gseed->count() > 0;
    cmd_generate(gen);
  });

  PretrainArgs pre;
  CLI::App* p = app.add_subcommand("pretrain", "pre-train the encoder on the prior");
  p->add_option("--config", pre.config, "run config json");
  p->add_option("--out", pre.out, "checkpoint path (best goes to PATH.best)")
      ->required();
  p->add_option("--resume", pre.resume, "continue from a saved checkpoint");
  auto* pseed = p->add_option("--seed", pre.seed, "override the train seed");
  p->callback([&] {
    pre.has_seed = pseed->count() > 0;
    cmd_pretrain(pre);
  });

  EmbedArgs emb;
  CLI::App* e = app.add_subcommand("embed", "write encoder embeddings for a dataset");
  e->add_option("--model", emb.model, "checkpoint path")->required();
  e->add_option("--input", emb.input, "dataset csv")->required();
  e->add_option("--meta", emb.meta, "dataset sidecar json")->required();
  e->add_option("--out", emb.out, "embedding csv")->required();
  e->callback([&] { cmd_embed(emb); });

  ClusterArgs clu;
  CLI::App* c = app.add_subcommand("cluster", "embed a dataset and cluster it");
  c->add_option("--config", clu.config, "run config json");
  c->add_option("--model", clu.model, "checkpoint path")->required();
  c->add_option("--input", clu.input, "dataset csv")->required();
  c->add_option("--meta", clu.meta, "dataset sidecar json")->required();
  c->add_option("--out", clu.out, "assignment csv")->required();
  c->add_option("--k", clu.k, "cluster count (default: the dataset's k)");
  c->add_option("--method", clu.method, "kmeans|gmm")
      ->check(CLI::IsMember({"kmeans", "gmm"}));
  auto* cseed = c->add_option("--seed", clu.seed, "override the eval seed");
  c->callback([&] {
    clu.has_seed = cseed->count() > 0;
    cmd_cluster(clu);
  });

  EvalArgs ev;
  CLI::App* v = app.add_subcommand("eval", "score an assignment against a dataset");
  v->add_option("--pred", ev.pred, "assignment csv")->required();
  v->add_option("--input", ev.input, "dataset csv")->required();
  v->add_option("--meta", ev.meta, "dataset sidecar json")->required();
  v->callback([&] { cmd_eval(ev); });

  BenchArgs ben;
  CLI::App* b = app.add_subcommand(
      "bench", "run baselines and the embedding pipeline over a dataset directory");
  b->add_option("--config", ben.config, "run config json");
  b->add_option("--model", ben.model, "checkpoint path")->required();
  b->add_option("--data", ben.data, "dataset directory with manifest.json")
      ->required();
  b->add_option("--out", ben.out, "report prefix (writes PREFIX.{ari,brier}.csv, PREFIX.json)")
      ->required();
  b->add_option("--baseline-scaling", ben.baseline_scaling, "standard|scaled")
      ->check(CLI::IsMember({"standard", "scaled"}));
  auto* bseed = b->add_option("--seed", ben.seed, "override the eval seed");
  b->callback([&] {
    ben.has_seed = bseed->count() > 0;
    cmd_bench(ben);
  });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 4;
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return 1;
  }
}

}  // namespace zeus
