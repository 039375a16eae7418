#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bimcq/data.hpp"
#include "bimcq/prompts.hpp"
#include "bimcq/tensor.hpp"

namespace bimcq {

enum class FreezeMode { None, Image, ImageAndText };
enum class FusionMode { Separated, Shared };

struct ModelConfig {
  int d = 64;          // shared embedding width
  int heads = 4;       // attention heads, d % heads == 0
  int mlp_hidden = 0;  // 0 means d
  FreezeMode freeze = FreezeMode::None;
  FusionMode fusion = FusionMode::Separated;
  int d_raw = 16;      // raw patch width, must match the dataset
  int n_tokens = 0;    // tokenizer vocabulary size, filled before training
  int max_tokens = 64; // positional table rows

  int hidden() const { return mlp_hidden > 0 ? mlp_hidden : d; }
  void validate() const;
};

// Global plus local embeddings of one image or one token sequence.
struct EncoderOutputs {
  Tensor global;  // [1,d]
  Tensor local;   // [s,d]
};

// Direction-specific fusion: multi-head cross-attention (query = global
// embedding of the query side, keys/values = [global ; locals] of the
// candidate side) followed by a two-layer MLP producing a matching logit.
struct FusionHead {
  Tensor attn_w_out, attn_b_out;
  Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;

  std::vector<Tensor> tensors() const {
    return {attn_w_out, attn_b_out, mlp_w1, mlp_b1, mlp_w2, mlp_b2};
  }
};

class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }

  EncoderOutputs encode_image(const SynthImage& img) const;
  EncoderOutputs encode_text(const TokenSequence& tokens) const;

  // attention output h for one (query, candidate) pair, before the MLP
  Tensor fusion_hidden(const FusionHead& head, const EncoderOutputs& query,
                       const EncoderOutputs& candidate) const;
  Tensor fusion_logit(const FusionHead& head, const EncoderOutputs& query,
                      const EncoderOutputs& candidate) const;

  // one independent logit per candidate / option
  Tensor i2t_logits(const EncoderOutputs& query, const std::vector<EncoderOutputs>& candidates) const;
  Tensor t2i_logits(const EncoderOutputs& query, const std::vector<EncoderOutputs>& options) const;

  const FusionHead& i2t_head() const { return i2t_head_; }
  // in Shared mode this is the same parameter set as i2t_head
  const FusionHead& t2i_head() const { return cfg_.fusion == FusionMode::Shared ? i2t_head_ : t2i_head_; }

  void apply_freeze(FreezeMode mode);

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::vector<Tensor> trainable_parameters() const;

 private:
  ModelConfig cfg_;
  Tensor img_w_, img_b_;       // patch projection d_raw -> d
  Tensor tok_emb_, pos_emb_;   // text tables
  FusionHead i2t_head_;
  FusionHead t2i_head_;        // unused storage in Shared mode
};

}  // namespace bimcq
