#include "bimcq/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace bimcq {

namespace {

const char* kTemplateWords[] = {",", ".", "and", "is", "no", "there"};

void check_sorted_unique(const std::vector<int>& ids, const char* side) {
  for (std::size_t i = 0; i + 1 < ids.size(); ++i)
    if (ids[i] >= ids[i + 1])
      throw std::invalid_argument(std::string("prompt spec: ") + side + " indices not strictly ascending");
}

void append_names(std::ostringstream& out, const std::vector<int>& ids, const DiseaseVocab& vocab,
                  const char* joiner) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << joiner;
    if (ids[i] < 0 || ids[i] >= vocab.size())
      throw std::invalid_argument("prompt spec: disease index " + std::to_string(ids[i]) +
                                  " out of range for vocabulary of " + std::to_string(vocab.size()));
    out << vocab.name(ids[i]);
  }
}

}  // namespace

const char* polarity_name(Polarity p) {
  switch (p) {
    case Polarity::Affirmative: return "affirmative";
    case Polarity::Negative: return "negative";
    case Polarity::Mixed: return "mixed";
  }
  return "?";
}

PromptSpec::PromptSpec(std::vector<int> affirmed_ids, std::vector<int> negated_ids)
    : affirmed(std::move(affirmed_ids)), negated(std::move(negated_ids)) {
  std::sort(affirmed.begin(), affirmed.end());
  std::sort(negated.begin(), negated.end());
  check_sorted_unique(affirmed, "affirmed");
  check_sorted_unique(negated, "negated");
  if (affirmed.empty() && negated.empty())
    throw std::invalid_argument("prompt spec: affirmed and negated are both empty");
  for (const int a : affirmed)
    if (std::binary_search(negated.begin(), negated.end(), a))
      throw std::invalid_argument("prompt spec: disease " + std::to_string(a) +
                                  " both affirmed and negated");
}

Polarity PromptSpec::polarity() const {
  if (negated.empty()) return Polarity::Affirmative;
  if (affirmed.empty()) return Polarity::Negative;
  return Polarity::Mixed;
}

bool is_consistent(const PromptSpec& spec, const LabelVector& labels) {
  for (const int a : spec.affirmed)
    if (!labels.present(a)) return false;
  for (const int n : spec.negated)
    if (labels.present(n)) return false;
  return true;
}

PromptSpec ground_truth_spec(const LabelVector& labels, const std::vector<int>& subset) {
  if (subset.empty()) throw std::invalid_argument("ground_truth_spec: subset is empty");
  std::vector<int> affirmed, negated;
  for (const int c : subset)
    (labels.present(c) ? affirmed : negated).push_back(c);
  return PromptSpec(std::move(affirmed), std::move(negated));
}

std::string render(const PromptSpec& spec, const DiseaseVocab& vocab) {
  std::ostringstream out;
  switch (spec.polarity()) {
    case Polarity::Affirmative:
      out << "there is ";
      append_names(out, spec.affirmed, vocab, " and ");
      break;
    case Polarity::Negative:
      out << "there is no ";
      append_names(out, spec.negated, vocab, " and no ");
      break;
    case Polarity::Mixed:
      out << "there is ";
      append_names(out, spec.affirmed, vocab, " and ");
      out << " , and there is no ";
      append_names(out, spec.negated, vocab, " and no ");
      break;
  }
  out << " .";
  return out.str();
}

Tokenizer::Tokenizer(const DiseaseVocab& vocab) {
  for (const char* w : kTemplateWords) words_.emplace_back(w);
  for (const std::string& name : vocab.names()) {
    if (std::find(words_.begin(), words_.end(), name) != words_.end())
      throw std::invalid_argument("tokenizer: disease name '" + name + "' collides with a template word");
    words_.push_back(name);
  }
}

TokenSequence Tokenizer::tokenize(const std::string& text) const {
  TokenSequence seq;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto it = std::find(words_.begin(), words_.end(), word);
    if (it == words_.end())
      throw std::runtime_error("tokenizer: word '" + word + "' is not in the vocabulary");
    seq.ids.push_back(static_cast<int>(it - words_.begin()));
  }
  if (seq.ids.empty()) throw std::runtime_error("tokenizer: empty token sequence");
  if (seq.size() > kMaxTokens)
    throw std::runtime_error("tokenizer: sequence of " + std::to_string(seq.size()) +
                             " tokens exceeds the maximum of " + std::to_string(kMaxTokens));
  return seq;
}

}  // namespace bimcq
