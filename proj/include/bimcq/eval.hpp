#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimcq/data.hpp"
#include "bimcq/model.hpp"

namespace bimcq {

enum class Protocol { POS = 0, NEG = 1, PNC = 2 };

const char* protocol_name(Protocol p);

// softmax([s_pos, s_neg])[0], computed so that pnc_score(a,b) and
// pnc_score(b,a) sum to exactly 1.0 and ties give exactly 0.5
double pnc_score(double s_pos, double s_neg);

struct ScoreMatrix {
  int n_samples = 0;
  int diseases = 0;
  Protocol protocol = Protocol::POS;
  std::vector<double> scores;  // row-major n_samples x diseases

  double at(int sample, int disease) const {
    return scores[static_cast<std::size_t>(sample) * diseases + disease];
  }
};

// Mann-Whitney AUC with ties counted 1/2, via average ranks in O(n log n).
// Returns nullopt when only one class is present (never a silent 0).
std::optional<double> auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

// (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)); 0 when any factor is 0
double mcc(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& labels);

// 2TP / (2TP + FP + FN); 0 when the denominator is 0
double f1(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& labels);

// Per image and disease c: POS = I2T logit of `there is c .`, NEG = I2T
// logit of `there is no c .`, PNC = softmax over the two. Evaluation goes
// through the I2T head only.
ScoreMatrix infer_scores(const Model& model, const Dataset& data, Protocol protocol);

struct RawLogits {
  int n_samples = 0;
  int diseases = 0;
  std::vector<double> pos;  // affirmative-prompt logits, n x d
  std::vector<double> neg;  // negative-prompt logits, n x d
};

RawLogits infer_raw_logits(const Model& model, const Dataset& data);
ScoreMatrix scores_from_logits(const RawLogits& raw, Protocol protocol);

struct MetricTriple {
  std::optional<double> auc;
  double f1 = 0.0;
  double mcc = 0.0;
};

struct EvalReport {
  std::vector<std::string> diseases;
  // per_disease[protocol][disease]; macro over diseases with both classes
  std::array<std::vector<MetricTriple>, 3> per_disease;
  std::array<MetricTriple, 3> macro;
  std::array<std::vector<int>, 3> macro_included;  // disease indices in the macro
  std::vector<std::string> warnings;
  std::string checkpoint_id;
  std::string dataset_id;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  std::string to_table() const;  // aligned text, column groups POS | NEG | PNC
};

// POS targets presence and scores the affirmative prompt; NEG targets
// absence (1 - y) and scores the negative prompt; PNC targets presence with
// the combined score. F1/MCC threshold 0.5 on a logistic squashing of the
// raw logits (equivalently logit > 0) or on PNC directly.
EvalReport evaluate(const Model& model, const Dataset& data);

// Same aggregation over externally supplied logits.
EvalReport evaluate_from_logits(const RawLogits& raw, const std::vector<LabelVector>& labels,
                                const DiseaseVocab& vocab);

// TSV rows: id, disease, polarity, truth flag, direction, then the d floats
// of the fusion attention output h for that (query, candidate) pair.
void dump_embeddings(const Model& model, const Dataset& data, const std::string& path);

}  // namespace bimcq
