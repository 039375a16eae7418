#include "bimcq/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "bimcq/adam.hpp"
#include "bimcq/rng.hpp"

namespace bimcq {

namespace {

Tensor mean_of_scalars(const std::vector<Tensor>& xs) {
  return scale(sum(stack_scalars(xs)), 1.0 / static_cast<double>(xs.size()));
}

// Per-disease prompt supervision: an image is paired with `there is c .`
// for each present disease, and (Pos-Neg only) with `there is no c .` for
// each absent one.
std::vector<PromptSpec> positive_prompt_specs(const LabelVector& labels, bool include_negative) {
  std::vector<PromptSpec> out;
  for (int c = 0; c < labels.size(); ++c) {
    if (labels.present(c)) out.push_back(PromptSpec({c}, {}));
    else if (include_negative) out.push_back(PromptSpec({}, {c}));
  }
  return out;
}

// Per-batch encoder cache so repeated prompts and images share one graph
// subtree per step.
class BatchEncoder {
 public:
  BatchEncoder(const Model& model, const Dataset& data, const Tokenizer& tokenizer)
      : model_(model), data_(data), tokenizer_(tokenizer) {}

  const EncoderOutputs& image(int dataset_index) {
    auto it = images_.find(dataset_index);
    if (it == images_.end())
      it = images_.emplace(dataset_index,
                           model_.encode_image(data_.images[static_cast<std::size_t>(dataset_index)]))
               .first;
    return it->second;
  }

  const EncoderOutputs& prompt(const PromptSpec& spec) {
    const std::string text = render(spec, data_.vocab);
    auto it = prompts_.find(text);
    if (it == prompts_.end())
      it = prompts_.emplace(text, model_.encode_text(tokenizer_.tokenize(text))).first;
    return it->second;
  }

 private:
  const Model& model_;
  const Dataset& data_;
  const Tokenizer& tokenizer_;
  std::map<int, EncoderOutputs> images_;
  std::map<std::string, EncoderOutputs> prompts_;
};

struct InfoNcePools {
  std::vector<EncoderOutputs> images;
  std::vector<EncoderOutputs> prompts;
  std::vector<std::vector<int>> image_positives;
  std::vector<std::vector<int>> prompt_positives;
};

// Pos-Only pairs each image with the affirmative prompt of every present
// disease (finding-free images have no pairs and are skipped); Pos-Neg
// adds the per-disease negative prompts as additional positives. Prompts
// are pooled by surface form, so a prompt is positive for every batch
// image it is consistent with by construction.
bool build_infonce_pools(const std::vector<int>& batch, const Dataset& data, Objective objective,
                         BatchEncoder& enc, InfoNcePools* pools, BuildStats* stats) {
  std::vector<PromptSpec> pool_specs;
  std::map<std::string, int> prompt_index;
  const auto intern = [&](const PromptSpec& spec) {
    const std::string text = render(spec, data.vocab);
    const auto it = prompt_index.find(text);
    if (it != prompt_index.end()) return it->second;
    const int id = static_cast<int>(pool_specs.size());
    prompt_index.emplace(text, id);
    pool_specs.push_back(spec);
    if (stats) stats->count_prompt(spec);
    return id;
  };

  for (const int idx : batch) {
    const LabelVector& labels = data.labels[static_cast<std::size_t>(idx)];
    std::vector<int> positives;
    for (const PromptSpec& spec :
         positive_prompt_specs(labels, objective == Objective::InfoNcePosNeg))
      positives.push_back(intern(spec));
    if (positives.empty()) continue;  // Pos-Only: nothing to affirm
    pools->image_positives.push_back(std::move(positives));
    pools->images.push_back(enc.image(idx));
    const int img_id = static_cast<int>(pools->images.size()) - 1;
    for (const int p : pools->image_positives.back()) {
      if (static_cast<int>(pools->prompt_positives.size()) <= p) pools->prompt_positives.resize(p + 1);
      pools->prompt_positives[static_cast<std::size_t>(p)].push_back(img_id);
    }
  }
  if (pools->images.size() < 2 || pool_specs.size() < 2) return false;
  for (const PromptSpec& spec : pool_specs) pools->prompts.push_back(enc.prompt(spec));
  pools->prompt_positives.resize(pool_specs.size());
  return true;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
  if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("train config: temperature must be > 0");
  mcq.validate();
  // n_tokens/d_raw are resolved against the dataset later; the structural
  // fields can be checked now
  if (model.d < 1) throw std::invalid_argument("model config: d must be >= 1");
  if (model.heads < 1 || model.d % model.heads != 0)
    throw std::invalid_argument("model config: d (" + std::to_string(model.d) +
                                ") must be divisible by heads (" + std::to_string(model.heads) + ")");
  if (model.mlp_hidden < 0) throw std::invalid_argument("model config: mlp_hidden must be >= 0");
}

Tensor bimcq_loss(const std::vector<std::pair<Tensor, int>>& i2t,
                  const std::vector<std::pair<Tensor, int>>& t2i) {
  const auto direction_loss = [](const std::vector<std::pair<Tensor, int>>& instances) -> Tensor {
    if (instances.empty()) return Tensor::scalar(0.0);
    std::vector<Tensor> losses;
    losses.reserve(instances.size());
    for (const auto& [logits, target] : instances) losses.push_back(cross_entropy(logits, target));
    return mean_of_scalars(losses);
  };
  if (i2t.empty() && t2i.empty()) return Tensor::scalar(0.0);
  if (i2t.empty()) return direction_loss(t2i);
  if (t2i.empty()) return direction_loss(i2t);
  return add(direction_loss(i2t), direction_loss(t2i));
}

Tensor infonce_pool_loss(const std::vector<EncoderOutputs>& images,
                         const std::vector<EncoderOutputs>& prompts,
                         const std::vector<std::vector<int>>& image_positives,
                         const std::vector<std::vector<int>>& prompt_positives, double temperature,
                         InfoNceScoring scoring, const Model* model) {
  const int n_img = static_cast<int>(images.size());
  const int n_txt = static_cast<int>(prompts.size());
  if (n_img < 2 || n_txt < 2)
    throw std::invalid_argument("infonce: need at least two images and two prompts");
  if (!(temperature > 0.0)) throw std::invalid_argument("infonce: temperature must be > 0");
  if (static_cast<int>(image_positives.size()) != n_img ||
      static_cast<int>(prompt_positives.size()) != n_txt)
    throw std::invalid_argument("infonce: positive set count mismatch");

  // logits[i][p] for image rows, reused transposed for prompt rows
  std::vector<std::vector<Tensor>> row_logits;
  if (scoring == InfoNceScoring::Fusion) {
    if (model == nullptr) throw std::invalid_argument("infonce: fusion scoring needs a model");
    row_logits.resize(static_cast<std::size_t>(n_img));
    for (int i = 0; i < n_img; ++i)
      for (int p = 0; p < n_txt; ++p)
        row_logits[static_cast<std::size_t>(i)].push_back(
            model->fusion_logit(model->i2t_head(), images[static_cast<std::size_t>(i)],
                                prompts[static_cast<std::size_t>(p)]));
  }

  std::vector<Tensor> terms;
  const auto ce_multi = [&](const Tensor& logits, const std::vector<int>& positives) {
    std::vector<Tensor> ces;
    for (const int p : positives) ces.push_back(cross_entropy(logits, p));
    return ces.size() == 1 ? ces[0] : mean_of_scalars(ces);
  };

  if (scoring == InfoNceScoring::Fusion) {
    std::vector<Tensor> img_terms, txt_terms;
    for (int i = 0; i < n_img; ++i) {
      if (image_positives[static_cast<std::size_t>(i)].empty())
        throw std::invalid_argument("infonce: image " + std::to_string(i) + " has no positives");
      img_terms.push_back(ce_multi(stack_scalars(row_logits[static_cast<std::size_t>(i)]),
                                   image_positives[static_cast<std::size_t>(i)]));
    }
    for (int p = 0; p < n_txt; ++p) {
      if (prompt_positives[static_cast<std::size_t>(p)].empty())
        throw std::invalid_argument("infonce: prompt " + std::to_string(p) + " has no positives");
      std::vector<Tensor> col;
      for (int i = 0; i < n_img; ++i) {
        // text->image direction goes through the T2I head
        col.push_back(model->fusion_logit(model->t2i_head(), prompts[static_cast<std::size_t>(p)],
                                          images[static_cast<std::size_t>(i)]));
      }
      txt_terms.push_back(ce_multi(stack_scalars(col), prompt_positives[static_cast<std::size_t>(p)]));
    }
    return scale(add(mean_of_scalars(img_terms), mean_of_scalars(txt_terms)), 0.5);
  }

  // global cosine: [n_img,d] x [n_txt,d]^T scaled by 1/temperature
  std::vector<Tensor> img_rows, txt_rows;
  for (const EncoderOutputs& e : images) img_rows.push_back(e.global);
  for (const EncoderOutputs& e : prompts) txt_rows.push_back(e.global);
  const Tensor zi = l2_normalize_rows(concat_rows(img_rows));
  const Tensor zt = l2_normalize_rows(concat_rows(txt_rows));
  const Tensor logits_it = scale(matmul_nt(zi, zt), 1.0 / temperature);
  const Tensor logits_ti = scale(matmul_nt(zt, zi), 1.0 / temperature);
  std::vector<Tensor> img_terms, txt_terms;
  for (int i = 0; i < n_img; ++i) {
    if (image_positives[static_cast<std::size_t>(i)].empty())
      throw std::invalid_argument("infonce: image " + std::to_string(i) + " has no positives");
    img_terms.push_back(ce_multi(slice_rows(logits_it, i, 1), image_positives[static_cast<std::size_t>(i)]));
  }
  for (int p = 0; p < n_txt; ++p) {
    if (prompt_positives[static_cast<std::size_t>(p)].empty())
      throw std::invalid_argument("infonce: prompt " + std::to_string(p) + " has no positives");
    txt_terms.push_back(ce_multi(slice_rows(logits_ti, p, 1), prompt_positives[static_cast<std::size_t>(p)]));
  }
  return scale(add(mean_of_scalars(img_terms), mean_of_scalars(txt_terms)), 0.5);
}

Tensor infonce_loss(const std::vector<std::pair<EncoderOutputs, EncoderOutputs>>& pairs,
                    double temperature) {
  if (pairs.size() < 2) throw std::invalid_argument("infonce_loss: need at least two pairs");
  std::vector<EncoderOutputs> images, prompts;
  std::vector<std::vector<int>> diag;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    images.push_back(pairs[i].first);
    prompts.push_back(pairs[i].second);
    diag.push_back({static_cast<int>(i)});
  }
  return infonce_pool_loss(images, prompts, diag, diag, temperature, InfoNceScoring::GlobalCosine,
                           nullptr);
}

Model build_model(const TrainConfig& cfg, const DiseaseVocab& vocab, int d_raw) {
  const Tokenizer tokenizer(vocab);
  ModelConfig model_cfg = cfg.model;
  model_cfg.n_tokens = tokenizer.vocab_size();
  model_cfg.d_raw = d_raw;
  model_cfg.max_tokens = Tokenizer::kMaxTokens;
  return Model(model_cfg, mix_seed(cfg.seed, "init"));
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_data, Model& model) {
  cfg.validate();
  if (train_data.size() == 0) throw std::invalid_argument("train: dataset is empty");
  const Tokenizer tokenizer(train_data.vocab);

  Adam adam(model.trainable_parameters(),
            AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  Rng shuffle_rng(mix_seed(cfg.seed, "shuffle"));

  TrainResult result;
  std::vector<int> order(static_cast<std::size_t>(train_data.size()));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0, batch_index = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size), ++batch_index) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      if (end - start < 2) break;  // a trailing singleton cannot form T2I options or pairs
      const std::vector<int> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));

      Rng mcq_rng(mix_seed(cfg.seed, "mcq", static_cast<std::uint64_t>(epoch),
                           static_cast<std::uint64_t>(batch_index)));
      BatchEncoder enc(model, train_data, tokenizer);

      try {
        Tensor loss;
        if (cfg.objective == Objective::BiMcq) {
          std::vector<LabelVector> batch_labels;
          for (const int idx : batch) batch_labels.push_back(train_data.labels[static_cast<std::size_t>(idx)]);
          const auto i2t = build_i2t(batch_labels, cfg.mcq, mcq_rng, &result.stats);
          const auto t2i = build_t2i(batch_labels, cfg.mcq, mcq_rng, &result.stats);

          std::vector<std::pair<Tensor, int>> i2t_logits, t2i_logits;
          for (const I2tInstance& inst : i2t) {
            std::vector<EncoderOutputs> candidates;
            for (const PromptSpec& spec : inst.candidates) candidates.push_back(enc.prompt(spec));
            i2t_logits.emplace_back(
                model.i2t_logits(enc.image(batch[static_cast<std::size_t>(inst.query_image_index)]),
                                 candidates),
                inst.correct);
          }
          for (const T2iInstance& inst : t2i) {
            std::vector<EncoderOutputs> options;
            for (const int opt : inst.options) options.push_back(enc.image(batch[static_cast<std::size_t>(opt)]));
            t2i_logits.emplace_back(model.t2i_logits(enc.prompt(inst.query_prompt), options),
                                    inst.correct);
          }
          loss = bimcq_loss(i2t_logits, t2i_logits);
        } else {
          InfoNcePools pools;
          if (!build_infonce_pools(batch, train_data, cfg.objective, enc, &pools, &result.stats)) {
            ++result.batches_skipped;
            continue;
          }
          loss = infonce_pool_loss(pools.images, pools.prompts, pools.image_positives,
                                   pools.prompt_positives, cfg.temperature, cfg.infonce_scoring, &model);
        }

        const double loss_value = loss.value();
        if (!std::isfinite(loss_value)) throw std::runtime_error("non-finite loss");
        adam.zero_grad();
        backward(loss);
        adam.step();
        loss_sum += loss_value;
        ++batches;
      } catch (const std::exception& e) {
        throw std::runtime_error("train: epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_index) + ": " + e.what());
      }
    }
    result.epoch_losses.push_back(batches > 0 ? loss_sum / batches : 0.0);
  }
  result.final_rng_state = shuffle_rng.state_string();
  return result;
}

TrainOutput train(const TrainConfig& cfg, const Dataset& train_data) {
  cfg.validate();
  if (train_data.size() == 0) throw std::invalid_argument("train: dataset is empty");
  const int d_raw = train_data.images.empty() ? cfg.model.d_raw : train_data.images[0].d_raw;
  Model model = build_model(cfg, train_data.vocab, d_raw);
  TrainResult result = train(cfg, train_data, model);
  return TrainOutput{std::move(model), std::move(result)};
}

}  // namespace bimcq
