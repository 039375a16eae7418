#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bimcq/data.hpp"
#include "bimcq/mcq.hpp"
#include "bimcq/model.hpp"
#include "bimcq/tensor.hpp"

namespace bimcq {

enum class Objective { BiMcq, InfoNcePosOnly, InfoNcePosNeg };

// What the InfoNCE baselines score: "fusion" runs every image/prompt pair
// through the cross-attention heads (the model's own scoring path),
// "global_cosine" uses temperature-scaled cosine similarity of the global
// embeddings.
enum class InfoNceScoring { Fusion, GlobalCosine };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 8;
  double learning_rate = 1e-5;
  std::uint64_t seed = 42;
  Objective objective = Objective::BiMcq;
  double temperature = 0.07;  // InfoNCE only
  InfoNceScoring infonce_scoring = InfoNceScoring::Fusion;
  McqConfig mcq;
  ModelConfig model;

  void validate() const;
};

// L_total = mean CE over I2T instances + mean CE over T2I instances; a
// direction with zero instances contributes 0.
Tensor bimcq_loss(const std::vector<std::pair<Tensor, int>>& i2t,
                  const std::vector<std::pair<Tensor, int>>& t2i);

// Symmetric InfoNCE over matched (image, prompt) pairs: temperature-scaled
// cosine similarities of global embeddings, cross-entropy against the
// diagonal in both directions, averaged.
Tensor infonce_loss(const std::vector<std::pair<EncoderOutputs, EncoderOutputs>>& pairs,
                    double temperature);

// Generalized form used by the training loop: explicit image and prompt
// pools with per-image positive prompt sets (targets averaged over
// positives) and per-prompt positive image sets. With Fusion scoring the
// similarities are fusion-head logits; model may be null for GlobalCosine.
Tensor infonce_pool_loss(const std::vector<EncoderOutputs>& images,
                         const std::vector<EncoderOutputs>& prompts,
                         const std::vector<std::vector<int>>& image_positives,
                         const std::vector<std::vector<int>>& prompt_positives, double temperature,
                         InfoNceScoring scoring, const Model* model);

struct TrainResult {
  std::vector<double> epoch_losses;  // mean loss per epoch
  BuildStats stats;
  int batches_skipped = 0;  // InfoNCE batches with fewer than two pairs
  std::string final_rng_state;
};

// Fresh model for this config and dataset vocabulary; init is seeded from
// cfg.seed so identical configs give identical parameters.
Model build_model(const TrainConfig& cfg, const DiseaseVocab& vocab, int d_raw);

// Deterministic given (cfg, data): all randomness flows from cfg.seed via
// named substreams (init / shuffle / mcq). Throws on non-finite loss with
// an epoch/batch diagnostic.
TrainResult train(const TrainConfig& cfg, const Dataset& train_data, Model& model);

struct TrainOutput {
  Model model;
  TrainResult result;
};

TrainOutput train(const TrainConfig& cfg, const Dataset& train_data);

}  // namespace bimcq
