#pragma once

#include <cstdint>
#include <vector>

#include "bimcq/prompts.hpp"
#include "bimcq/rng.hpp"

namespace bimcq {

struct McqConfig {
  int subset_size = 2;     // diseases per instance
  int max_candidates = 4;  // I2T candidate cap, <= 2^subset_size
  int min_t2i_options = 2;
  bool use_mixed = true;

  void validate() const;
};

// Image query over text candidates. Exactly one candidate is consistent
// with the query image's annotation and sits at `correct`.
struct I2tInstance {
  int query_image_index = 0;
  std::vector<PromptSpec> candidates;
  int correct = 0;
};

// Text query over batch image options. The prompt is consistent with the
// option at `correct` and with no other option.
struct T2iInstance {
  PromptSpec query_prompt;
  std::vector<int> options;  // batch image indices
  int correct = 0;
};

struct BuildStats {
  std::int64_t i2t_instances = 0;
  std::int64_t t2i_instances = 0;
  std::int64_t t2i_excluded = 0;  // prompts dropped for lack of distractors
  std::int64_t affirmative_prompts = 0;
  std::int64_t negative_prompts = 0;
  std::int64_t mixed_prompts = 0;

  void count_prompt(const PromptSpec& spec);
  void merge(const BuildStats& other);
};

// All 2^k polarity assignments over a random k-subset (mixed ones dropped
// when use_mixed is off, re-drawing the subset until the ground truth
// survives), capped at max_candidates by keeping the ground truth plus a
// uniform sample of distractors, then shuffled.
std::pair<std::vector<PromptSpec>, int> enumerate_candidates(const LabelVector& labels, int k,
                                                             const McqConfig& cfg, Rng& rng);

std::vector<I2tInstance> build_i2t(const std::vector<LabelVector>& batch_labels, const McqConfig& cfg,
                                   Rng& rng, BuildStats* stats = nullptr);

// One ground-truth prompt per image and sampled subset; batch images still
// consistent with the prompt are removed from the option pool, and prompts
// left with fewer than min_t2i_options-1 distractors are silently excluded
// (counted in stats).
std::vector<T2iInstance> build_t2i(const std::vector<LabelVector>& batch_labels, const McqConfig& cfg,
                                   Rng& rng, BuildStats* stats = nullptr);

}  // namespace bimcq
