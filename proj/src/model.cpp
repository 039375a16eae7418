#include "bimcq/model.hpp"

#include <cmath>
#include <stdexcept>

#include "bimcq/rng.hpp"

namespace bimcq {

namespace {

Tensor glorot(std::vector<int> shape, Rng& rng) {
  const int fan_in = shape[0];
  const int fan_out = shape.size() > 1 ? shape[1] : 1;
  const double stddev = std::sqrt(2.0 / (fan_in + fan_out));
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = stddev * rng.normal();
  return t;
}

Tensor zero_param(std::vector<int> shape) { return Tensor::zeros(std::move(shape), true); }

FusionHead make_head(const ModelConfig& cfg, Rng& rng) {
  FusionHead head;
  head.attn_w_out = glorot({cfg.d, cfg.d}, rng);
  head.attn_b_out = zero_param({cfg.d});
  head.mlp_w1 = glorot({cfg.d, cfg.hidden()}, rng);
  head.mlp_b1 = zero_param({cfg.hidden()});
  head.mlp_w2 = glorot({cfg.hidden(), 1}, rng);
  head.mlp_b2 = zero_param({1});
  return head;
}

void set_group_trainable(const std::vector<Tensor>& tensors, bool flag) {
  for (Tensor t : tensors) t.set_requires_grad(flag);
}

}  // namespace

void ModelConfig::validate() const {
  if (d < 1) throw std::invalid_argument("model config: d must be >= 1");
  if (heads < 1 || d % heads != 0)
    throw std::invalid_argument("model config: d (" + std::to_string(d) +
                                ") must be divisible by heads (" + std::to_string(heads) + ")");
  if (mlp_hidden < 0) throw std::invalid_argument("model config: mlp_hidden must be >= 0");
  if (d_raw < 1) throw std::invalid_argument("model config: d_raw must be >= 1");
  if (n_tokens < 1) throw std::invalid_argument("model config: n_tokens must be set before building");
  if (max_tokens < 1) throw std::invalid_argument("model config: max_tokens must be >= 1");
}

Model::Model(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(init_seed);
  img_w_ = glorot({cfg_.d_raw, cfg_.d}, rng);
  img_b_ = zero_param({cfg_.d});
  tok_emb_ = glorot({cfg_.n_tokens, cfg_.d}, rng);
  pos_emb_ = glorot({cfg_.max_tokens, cfg_.d}, rng);
  i2t_head_ = make_head(cfg_, rng);
  if (cfg_.fusion == FusionMode::Separated) t2i_head_ = make_head(cfg_, rng);
  apply_freeze(cfg_.freeze);
}

EncoderOutputs Model::encode_image(const SynthImage& img) const {
  if (img.d_raw != cfg_.d_raw)
    throw std::invalid_argument("encode_image: patch width " + std::to_string(img.d_raw) +
                                " does not match configured d_raw " + std::to_string(cfg_.d_raw));
  const Tensor patches = Tensor::from({img.n_patches, img.d_raw}, img.patches);
  EncoderOutputs out;
  out.local = tanh_act(add_bias(matmul(patches, img_w_), img_b_));
  out.global = mean_rows(out.local);
  return out;
}

EncoderOutputs Model::encode_text(const TokenSequence& tokens) const {
  const int len = tokens.size();
  if (len > cfg_.max_tokens)
    throw std::out_of_range("encode_text: sequence of " + std::to_string(len) +
                            " tokens exceeds positional table of " + std::to_string(cfg_.max_tokens));
  EncoderOutputs out;
  out.local = add(gather_rows(tok_emb_, tokens.ids), slice_rows(pos_emb_, 0, len));
  out.global = mean_rows(out.local);
  return out;
}

Tensor Model::fusion_hidden(const FusionHead& head, const EncoderOutputs& query,
                            const EncoderOutputs& candidate) const {
  const Tensor kv = concat_rows({candidate.global, candidate.local});
  return scaled_dot_attention(query.global, kv, kv, head.attn_w_out, head.attn_b_out, cfg_.heads);
}

Tensor Model::fusion_logit(const FusionHead& head, const EncoderOutputs& query,
                           const EncoderOutputs& candidate) const {
  const Tensor hidden = fusion_hidden(head, query, candidate);
  const Tensor h1 = tanh_act(add_bias(matmul(hidden, head.mlp_w1), head.mlp_b1));
  return add_bias(matmul(h1, head.mlp_w2), head.mlp_b2);
}

Tensor Model::i2t_logits(const EncoderOutputs& query, const std::vector<EncoderOutputs>& candidates) const {
  if (candidates.empty()) throw std::invalid_argument("i2t_logits: no candidates");
  std::vector<Tensor> logits;
  logits.reserve(candidates.size());
  for (const EncoderOutputs& candidate : candidates)
    logits.push_back(fusion_logit(i2t_head(), query, candidate));
  return stack_scalars(logits);
}

Tensor Model::t2i_logits(const EncoderOutputs& query, const std::vector<EncoderOutputs>& options) const {
  if (options.empty()) throw std::invalid_argument("t2i_logits: no options");
  std::vector<Tensor> logits;
  logits.reserve(options.size());
  for (const EncoderOutputs& option : options)
    logits.push_back(fusion_logit(t2i_head(), query, option));
  return stack_scalars(logits);
}

void Model::apply_freeze(FreezeMode mode) {
  cfg_.freeze = mode;
  set_group_trainable({img_w_, img_b_}, mode == FreezeMode::None);
  set_group_trainable({tok_emb_, pos_emb_}, mode != FreezeMode::ImageAndText);
  // fusion heads are always trainable
  set_group_trainable(i2t_head_.tensors(), true);
  if (cfg_.fusion == FusionMode::Separated) set_group_trainable(t2i_head_.tensors(), true);
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out{
      {"image.proj.w", img_w_}, {"image.proj.b", img_b_},
      {"text.tok_emb", tok_emb_}, {"text.pos_emb", pos_emb_},
  };
  const char* head_fields[] = {"attn_w_out", "attn_b_out", "mlp_w1", "mlp_b1", "mlp_w2", "mlp_b2"};
  const auto add_head = [&](const std::string& prefix, const FusionHead& head) {
    const auto tensors = head.tensors();
    for (std::size_t i = 0; i < tensors.size(); ++i)
      out.emplace_back(prefix + "." + head_fields[i], tensors[i]);
  };
  if (cfg_.fusion == FusionMode::Shared) {
    add_head("head.shared", i2t_head_);
  } else {
    add_head("head.i2t", i2t_head_);
    add_head("head.t2i", t2i_head_);
  }
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_parameters()) out.push_back(tensor);
  return out;
}

std::vector<Tensor> Model::trainable_parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_parameters())
    if (tensor.requires_grad()) out.push_back(tensor);
  return out;
}

}  // namespace bimcq
