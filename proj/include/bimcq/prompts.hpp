#pragma once

#include <string>
#include <vector>

#include "bimcq/data.hpp"

namespace bimcq {

enum class Polarity { Affirmative, Negative, Mixed };

const char* polarity_name(Polarity p);

// Symbolic statement over disease subsets: which diseases it asserts present
// and which absent. Index lists are kept sorted ascending and disjoint.
struct PromptSpec {
  std::vector<int> affirmed;
  std::vector<int> negated;

  PromptSpec() = default;
  PromptSpec(std::vector<int> affirmed_ids, std::vector<int> negated_ids);

  Polarity polarity() const;
  bool operator==(const PromptSpec&) const = default;
};

// affirmed ⊆ present and negated ⊆ absent
bool is_consistent(const PromptSpec& spec, const LabelVector& labels);

// The unique spec over `subset` that matches the annotation: present
// diseases affirmed, absent ones negated.
PromptSpec ground_truth_spec(const LabelVector& labels, const std::vector<int>& subset);

// Surface templates:
//   affirmative  `there is a and b .`
//   negative     `there is no a and no b .`
//   mixed        `there is a , and there is no b .`
// Diseases are listed in ascending vocabulary order, so rendering is
// injective over valid specs.
std::string render(const PromptSpec& spec, const DiseaseVocab& vocab);

struct TokenSequence {
  std::vector<int> ids;

  int size() const { return static_cast<int>(ids.size()); }
  bool operator==(const TokenSequence&) const = default;
};

// Closed-vocabulary whitespace tokenizer: template words and punctuation
// first, then disease names in vocabulary order.
class Tokenizer {
 public:
  static constexpr int kMaxTokens = 64;

  explicit Tokenizer(const DiseaseVocab& vocab);

  TokenSequence tokenize(const std::string& text) const;
  int vocab_size() const { return static_cast<int>(words_.size()); }
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }

 private:
  std::vector<std::string> words_;
};

}  // namespace bimcq
