#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bimcq/model.hpp"
#include "bimcq/training.hpp"

namespace bimcq {

// Versioned binary container: magic, version, JSON meta (configs, vocab,
// epoch, loss history, rng state, parameter manifest), then raw
// little-endian float64 parameter blobs with a trailing hash. Round-trips
// bitwise through save/load.
struct Checkpoint {
  struct ParamBlob {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
  };

  TrainConfig train_config;
  std::vector<std::string> vocab_names;
  std::string rng_state;
  int epoch = 0;
  std::vector<double> loss_history;
  std::vector<ParamBlob> params;

  // model rebuilt from the stored config with parameters copied in
  Model restore_model() const;
};

Checkpoint make_checkpoint(const Model& model, const TrainConfig& cfg, const DiseaseVocab& vocab,
                           const TrainResult& result);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace bimcq
