#include "zeus/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "zeus/common.hpp"

namespace zeus {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace {

constexpr char kMagic[5] = {'Z', 'E', 'U', 'S', '1'};
constexpr int64_t kVersion = 1;

using nlohmann::json;

json history_to_json(const std::vector<HistoryRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"step", r.step},
                   {"loss", r.loss},
                   {"val_ari_gauss", r.val_ari_gauss},
                   {"val_ari_transf", r.val_ari_transf}});
  }
  return arr;
}

std::vector<HistoryRow> history_from_json(const json& arr) {
  std::vector<HistoryRow> rows;
  for (const auto& j : arr) {
    HistoryRow r;
    r.step = j.at("step").get<int64_t>();
    // non-finite losses (the step-0 eval) serialize as null
    const auto& loss = j.at("loss");
    r.loss = loss.is_null() ? std::numeric_limits<double>::quiet_NaN()
                            : loss.get<double>();
    r.val_ari_gauss = j.at("val_ari_gauss").get<double>();
    r.val_ari_transf = j.at("val_ari_transf").get<double>();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  json dir = json::array();
  int64_t offset = 0;
  for (const auto& t : tensors) {
    int64_t expect = 1;
    for (int64_t s : t.shape) expect *= s;
    if (expect != static_cast<int64_t>(t.values.size()))
      throw IoError("tensor '" + t.name + "' shape does not match value count");
    dir.push_back({{"name", t.name},
                   {"shape", t.shape},
                   {"offset", offset},
                   {"length", static_cast<int64_t>(t.values.size())}});
    offset += static_cast<int64_t>(t.values.size()) * 8;
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["prior"] = prior_to_json(prior);
  manifest["encoder"] = encoder_to_json(encoder_cfg);
  manifest["loss"] = loss_to_json(loss);
  manifest["train"] = train_to_json(train);
  manifest["step"] = step;
  manifest["adam_updates"] = adam_updates;
  manifest["history"] = history_to_json(history);
  manifest["tensors"] = dir;

  const std::string text = manifest.dump();
  const uint64_t manifest_len = text.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&manifest_len), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : tensors) {
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * 8));
  }
  out.flush();
  if (!out) throw IoError("failed writing checkpoint to '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("'" + path + "' is not a checkpoint file");

  uint64_t manifest_len = 0;
  in.read(reinterpret_cast<char*>(&manifest_len), 8);
  if (!in) throw IoError("checkpoint '" + path + "' is truncated");
  if (manifest_len > (1ull << 30))
    throw IoError("checkpoint '" + path + "' has an implausible manifest size");

  std::string text(manifest_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(manifest_len));
  if (!in) throw IoError("checkpoint '" + path + "' is truncated");

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("checkpoint '" + path + "' has a corrupt manifest: " + e.what());
  }

  Checkpoint ck;
  try {
    if (manifest.at("version").get<int64_t>() != kVersion)
      throw IoError("checkpoint '" + path + "' has an unsupported version");
    ck.prior = prior_from_json(manifest.at("prior"));
    ck.encoder_cfg = encoder_from_json(manifest.at("encoder"));
    ck.loss = loss_from_json(manifest.at("loss"));
    ck.train = train_from_json(manifest.at("train"));
    ck.step = manifest.at("step").get<int64_t>();
    ck.adam_updates = manifest.at("adam_updates").get<int64_t>();
    ck.history = history_from_json(manifest.at("history"));

    for (const auto& j : manifest.at("tensors")) {
      TensorEntry t;
      t.name = j.at("name").get<std::string>();
      t.shape = j.at("shape").get<std::vector<int64_t>>();
      const auto offset = j.at("offset").get<int64_t>();
      const auto length = j.at("length").get<int64_t>();
      int64_t expect = 1;
      for (int64_t s : t.shape) expect *= s;
      if (length < 0 || expect != length)
        throw IoError("checkpoint tensor '" + t.name + "' has inconsistent shape");
      in.seekg(static_cast<std::streamoff>(sizeof(kMagic) + 8 + manifest_len + offset));
      t.values.resize(static_cast<size_t>(length));
      in.read(reinterpret_cast<char*>(t.values.data()),
              static_cast<std::streamsize>(length * 8));
      if (!in) throw IoError("checkpoint '" + path + "' is truncated");
      ck.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw IoError("checkpoint '" + path + "' has a corrupt manifest: " + e.what());
  }
  return ck;
}

const TensorEntry* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

Encoder Checkpoint::restore_encoder() const {
  Encoder enc(encoder_cfg, /*seed=*/0);
  for (const auto& [name, param] : enc.parameters()) {
    const TensorEntry* t = find(name);
    if (t == nullptr) throw IoError("checkpoint is missing parameter '" + name + "'");
    if (t->values.size() != param.values().size())
      throw IoError("checkpoint parameter '" + name + "' has the wrong size");
    Tensor dst = param;  // shares the buffer the encoder reads
    dst.values() = t->values;
  }
  return enc;
}

std::vector<TensorEntry> snapshot_parameters(const Encoder& enc) {
  std::vector<TensorEntry> out;
  for (const auto& [name, param] : enc.parameters()) {
    TensorEntry t;
    t.name = name;
    t.shape.assign(param.shape().begin(), param.shape().end());
    t.values = param.values();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace zeus
