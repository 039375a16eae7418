#include "bimcq/mcq.hpp"

#include <algorithm>
#include <stdexcept>

namespace bimcq {

namespace {

constexpr int kMaxRetries = 64;
constexpr int kT2iPromptsPerImage = 2;

PromptSpec assignment_spec(const std::vector<int>& subset, unsigned mask) {
  std::vector<int> affirmed, negated;
  for (std::size_t i = 0; i < subset.size(); ++i)
    ((mask >> i) & 1u ? affirmed : negated).push_back(subset[i]);
  return PromptSpec(std::move(affirmed), std::move(negated));
}

// subset whose ground-truth spec survives the mixed-prompt filter
std::vector<int> draw_subset(const LabelVector& labels, int k, const McqConfig& cfg, Rng& rng,
                             bool* ok) {
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::vector<int> subset = rng.sample_indices(labels.size(), k);
    if (cfg.use_mixed || ground_truth_spec(labels, subset).polarity() != Polarity::Mixed) {
      *ok = true;
      return subset;
    }
  }
  *ok = false;
  return {};
}

}  // namespace

void McqConfig::validate() const {
  if (subset_size < 1) throw std::invalid_argument("mcq config: subset_size must be >= 1");
  if (subset_size > 16) throw std::invalid_argument("mcq config: subset_size must be <= 16");
  if (max_candidates < 2) throw std::invalid_argument("mcq config: max_candidates must be >= 2");
  if (max_candidates > (1 << subset_size))
    throw std::invalid_argument("mcq config: max_candidates must be <= 2^subset_size");
  if (min_t2i_options < 2) throw std::invalid_argument("mcq config: min_t2i_options must be >= 2");
}

void BuildStats::count_prompt(const PromptSpec& spec) {
  switch (spec.polarity()) {
    case Polarity::Affirmative: ++affirmative_prompts; break;
    case Polarity::Negative: ++negative_prompts; break;
    case Polarity::Mixed: ++mixed_prompts; break;
  }
}

void BuildStats::merge(const BuildStats& other) {
  i2t_instances += other.i2t_instances;
  t2i_instances += other.t2i_instances;
  t2i_excluded += other.t2i_excluded;
  affirmative_prompts += other.affirmative_prompts;
  negative_prompts += other.negative_prompts;
  mixed_prompts += other.mixed_prompts;
}

std::pair<std::vector<PromptSpec>, int> enumerate_candidates(const LabelVector& labels, int k,
                                                             const McqConfig& cfg, Rng& rng) {
  cfg.validate();
  if (k > labels.size())
    throw std::invalid_argument("enumerate_candidates: subset size " + std::to_string(k) +
                                " exceeds vocabulary of " + std::to_string(labels.size()));
  bool ok = false;
  const std::vector<int> subset = draw_subset(labels, k, cfg, rng, &ok);
  if (!ok)
    throw std::runtime_error(
        "enumerate_candidates: no subset with a non-mixed ground truth after bounded retries");

  const PromptSpec truth = ground_truth_spec(labels, subset);
  std::vector<PromptSpec> pool;
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    PromptSpec spec = assignment_spec(subset, mask);
    if (!cfg.use_mixed && spec.polarity() == Polarity::Mixed) continue;
    pool.push_back(std::move(spec));
  }

  std::vector<PromptSpec> candidates;
  if (static_cast<int>(pool.size()) > cfg.max_candidates) {
    std::vector<PromptSpec> distractors;
    for (PromptSpec& spec : pool)
      if (!(spec == truth)) distractors.push_back(std::move(spec));
    rng.shuffle(distractors);
    distractors.resize(static_cast<std::size_t>(cfg.max_candidates - 1));
    candidates.push_back(truth);
    for (PromptSpec& spec : distractors) candidates.push_back(std::move(spec));
  } else {
    candidates = std::move(pool);
  }
  rng.shuffle(candidates);

  const auto it = std::find(candidates.begin(), candidates.end(), truth);
  return {candidates, static_cast<int>(it - candidates.begin())};
}

std::vector<I2tInstance> build_i2t(const std::vector<LabelVector>& batch_labels, const McqConfig& cfg,
                                   Rng& rng, BuildStats* stats) {
  if (batch_labels.empty()) throw std::invalid_argument("build_i2t: empty batch");
  std::vector<I2tInstance> out;
  out.reserve(batch_labels.size());
  for (std::size_t i = 0; i < batch_labels.size(); ++i) {
    auto [candidates, correct] = enumerate_candidates(batch_labels[i], cfg.subset_size, cfg, rng);
    if (stats) {
      ++stats->i2t_instances;
      for (const PromptSpec& c : candidates) stats->count_prompt(c);
    }
    out.push_back(I2tInstance{static_cast<int>(i), std::move(candidates), correct});
  }
  return out;
}

std::vector<T2iInstance> build_t2i(const std::vector<LabelVector>& batch_labels, const McqConfig& cfg,
                                   Rng& rng, BuildStats* stats) {
  cfg.validate();
  const int batch = static_cast<int>(batch_labels.size());
  if (batch < cfg.min_t2i_options)
    throw std::invalid_argument("build_t2i: batch of " + std::to_string(batch) +
                                " is smaller than min_t2i_options");

  std::vector<T2iInstance> out;
  for (int j = 0; j < batch; ++j) {
    std::vector<std::vector<int>> subsets;
    for (int t = 0; t < kT2iPromptsPerImage; ++t) {
      bool ok = false;
      std::vector<int> subset = draw_subset(batch_labels[static_cast<std::size_t>(j)],
                                            cfg.subset_size, cfg, rng, &ok);
      if (!ok) {
        if (stats) ++stats->t2i_excluded;
        continue;
      }
      if (std::find(subsets.begin(), subsets.end(), subset) != subsets.end()) continue;
      subsets.push_back(std::move(subset));
    }
    for (const std::vector<int>& subset : subsets) {
      PromptSpec prompt = ground_truth_spec(batch_labels[static_cast<std::size_t>(j)], subset);
      std::vector<int> options{j};
      for (int i = 0; i < batch; ++i) {
        if (i == j) continue;
        // images other than the source that are also consistent are dropped
        if (!is_consistent(prompt, batch_labels[static_cast<std::size_t>(i)])) options.push_back(i);
      }
      if (static_cast<int>(options.size()) < cfg.min_t2i_options) {
        if (stats) ++stats->t2i_excluded;
        continue;
      }
      rng.shuffle(options);
      const auto it = std::find(options.begin(), options.end(), j);
      T2iInstance inst;
      inst.query_prompt = std::move(prompt);
      inst.correct = static_cast<int>(it - options.begin());
      inst.options = std::move(options);
      out.push_back(std::move(inst));
    }
  }

  // cap against combinatorial blowup; with the current sampling the cap
  // only binds if kT2iPromptsPerImage grows
  const std::size_t cap = 2 * static_cast<std::size_t>(batch);
  if (out.size() > cap) {
    rng.shuffle(out);
    out.resize(cap);
  }
  if (stats) {
    stats->t2i_instances += static_cast<std::int64_t>(out.size());
    for (const T2iInstance& inst : out) stats->count_prompt(inst.query_prompt);
  }
  return out;
}

}  // namespace bimcq
