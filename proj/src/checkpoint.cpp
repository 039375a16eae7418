#include "bimcq/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "bimcq/config.hpp"

namespace bimcq {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'B', 'M', 'C', 'Q', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return value;
}

}  // namespace

Model Checkpoint::restore_model() const {
  Model model(train_config.model, 0);
  bool matched = true;
  auto named = model.named_parameters();
  if (named.size() != params.size()) matched = false;
  for (std::size_t i = 0; matched && i < named.size(); ++i) {
    if (named[i].first != params[i].name || named[i].second.shape() != params[i].shape)
      matched = false;
  }
  if (!matched)
    throw std::runtime_error("checkpoint: stored parameters do not match the stored model config");
  for (std::size_t i = 0; i < named.size(); ++i) named[i].second.data_vec() = params[i].data;
  model.apply_freeze(train_config.model.freeze);
  return model;
}

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg, const DiseaseVocab& vocab,
                           const TrainResult& result) {
  Checkpoint ckpt;
  ckpt.train_config = cfg;
  ckpt.train_config.model = model.config();  // resolved n_tokens / d_raw / freeze
  ckpt.vocab_names = vocab.names();
  ckpt.rng_state = result.final_rng_state;
  ckpt.epoch = static_cast<int>(result.epoch_losses.size());
  ckpt.loss_history = result.epoch_losses;
  for (const auto& [name, tensor] : model.named_parameters())
    ckpt.params.push_back(Checkpoint::ParamBlob{name, tensor.shape(), tensor.data_vec()});
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json manifest = json::array();
  std::size_t total_doubles = 0;
  for (const auto& blob : ckpt.params) {
    manifest.push_back(json{{"name", blob.name}, {"shape", blob.shape}});
    total_doubles += blob.data.size();
  }
  const json meta{{"train_config", train_config_to_json(ckpt.train_config)},
                  {"vocab", ckpt.vocab_names},
                  {"rng_state", ckpt.rng_state},
                  {"epoch", ckpt.epoch},
                  {"loss_history", ckpt.loss_history},
                  {"params", manifest}};
  const std::string meta_str = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(meta_str.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
  write_pod(out, static_cast<std::uint64_t>(total_doubles));

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& blob : ckpt.params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data.data());
    const std::size_t n = blob.data.size() * sizeof(double);
    out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(n));
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  }
  write_pod(out, hash);
  if (!out) throw std::runtime_error("checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                             " (expected " + std::to_string(kVersion) + ")");

  const auto meta_len = read_pod<std::uint64_t>(in, "meta length");
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw std::runtime_error("checkpoint: truncated metadata in " + path);
  json meta;
  try {
    meta = json::parse(meta_str);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint: corrupt metadata: " + std::string(e.what()));
  }

  Checkpoint ckpt;
  ckpt.train_config = train_config_from_json(meta.at("train_config"));
  ckpt.vocab_names = meta.at("vocab").get<std::vector<std::string>>();
  ckpt.rng_state = meta.at("rng_state").get<std::string>();
  ckpt.epoch = meta.at("epoch").get<int>();
  ckpt.loss_history = meta.at("loss_history").get<std::vector<double>>();

  const auto total_doubles = read_pod<std::uint64_t>(in, "blob size");
  std::size_t declared = 0;
  for (const auto& entry : meta.at("params")) {
    Checkpoint::ParamBlob blob;
    blob.name = entry.at("name").get<std::string>();
    blob.shape = entry.at("shape").get<std::vector<int>>();
    std::size_t n = 1;
    for (const int d : blob.shape) n *= static_cast<std::size_t>(d);
    blob.data.resize(n);
    declared += n;
    in.read(reinterpret_cast<char*>(blob.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated parameter '" + blob.name + "' in " + path);
    ckpt.params.push_back(std::move(blob));
  }
  if (declared != total_doubles)
    throw std::runtime_error("checkpoint: parameter sizes disagree with the declared total");

  // hash runs over the concatenated blob bytes in save order
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const auto& blob : ckpt.params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data.data());
    const std::size_t n = blob.data.size() * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= bytes[i];
      hash *= 0x100000001b3ULL;
    }
  }
  const auto stored_hash = read_pod<std::uint64_t>(in, "hash");
  if (stored_hash != hash)
    throw std::runtime_error("checkpoint: parameter data hash mismatch (corrupt file?)");

  char extra;
  if (in.read(&extra, 1)) throw std::runtime_error("checkpoint: trailing bytes in " + path);
  return ckpt;
}

}  // namespace bimcq
