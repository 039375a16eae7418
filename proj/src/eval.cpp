#include "bimcq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bimcq/prompts.hpp"

namespace bimcq {

// Affirmative and negative single-disease prompt encodings, then one
// forward per (image, prompt). Image rows are independent, so the loop
// runs under OpenMP against the frozen parameters.
RawLogits infer_raw_logits(const Model& model, const Dataset& data) {
  const Tokenizer tokenizer(data.vocab);
  if (model.config().n_tokens != tokenizer.vocab_size())
    throw std::invalid_argument("eval: model vocabulary (" + std::to_string(model.config().n_tokens) +
                                " tokens) does not match dataset vocabulary (" +
                                std::to_string(tokenizer.vocab_size()) + " tokens)");
  const int n = data.size();
  const int d = data.vocab.size();
  // width mismatches must surface before the parallel region below
  for (const SynthImage& img : data.images)
    if (img.d_raw != model.config().d_raw)
      throw std::invalid_argument("eval: image patch width " + std::to_string(img.d_raw) +
                                  " does not match model d_raw " +
                                  std::to_string(model.config().d_raw));

  std::vector<EncoderOutputs> pos_prompts, neg_prompts;
  {
    NoGradGuard guard;
    for (int c = 0; c < d; ++c) {
      pos_prompts.push_back(model.encode_text(tokenizer.tokenize(render(PromptSpec({c}, {}), data.vocab))));
      neg_prompts.push_back(model.encode_text(tokenizer.tokenize(render(PromptSpec({}, {c}), data.vocab))));
    }
  }

  RawLogits out;
  out.n_samples = n;
  out.diseases = d;
  out.pos.assign(static_cast<std::size_t>(n) * d, 0.0);
  out.neg.assign(static_cast<std::size_t>(n) * d, 0.0);

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    NoGradGuard guard;  // per iteration: OpenMP workers have their own flag
    const EncoderOutputs img = model.encode_image(data.images[static_cast<std::size_t>(i)]);
    for (int c = 0; c < d; ++c) {
      out.pos[static_cast<std::size_t>(i) * d + c] =
          model.fusion_logit(model.i2t_head(), img, pos_prompts[static_cast<std::size_t>(c)]).value();
      out.neg[static_cast<std::size_t>(i) * d + c] =
          model.fusion_logit(model.i2t_head(), img, neg_prompts[static_cast<std::size_t>(c)]).value();
    }
  }
  return out;
}

ScoreMatrix scores_from_logits(const RawLogits& raw, Protocol protocol) {
  ScoreMatrix out;
  out.n_samples = raw.n_samples;
  out.diseases = raw.diseases;
  out.protocol = protocol;
  out.scores.resize(static_cast<std::size_t>(raw.n_samples) * raw.diseases);
  for (std::size_t i = 0; i < out.scores.size(); ++i) {
    switch (protocol) {
      case Protocol::POS: out.scores[i] = raw.pos[i]; break;
      case Protocol::NEG: out.scores[i] = raw.neg[i]; break;
      case Protocol::PNC: out.scores[i] = pnc_score(raw.pos[i], raw.neg[i]); break;
    }
  }
  return out;
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "   -  ";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%6.3f", *v);
  return buf;
}

}  // namespace

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::POS: return "POS";
    case Protocol::NEG: return "NEG";
    case Protocol::PNC: return "PNC";
  }
  return "?";
}

double pnc_score(double s_pos, double s_neg) {
  if (!std::isfinite(s_pos) || !std::isfinite(s_neg))
    throw std::runtime_error("pnc_score: non-finite logit");
  if (s_pos >= s_neg) {
    const double t = std::exp(s_neg - s_pos);  // in (0, 1]
    double p = 1.0 / (1.0 + t);
    if (p >= 1.0) p = std::nextafter(1.0, 0.0);  // keep strictly inside (0,1)
    return p;
  }
  // defined as the exact complement of the flipped call so that
  // pnc_score(a,b) + pnc_score(b,a) == 1 holds bit-for-bit
  return 1.0 - pnc_score(s_neg, s_pos);
}

std::optional<double> auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (const std::uint8_t y : labels) n_pos += (y != 0);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // average ranks over tie groups; ranks are half-integers, exact in double
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double numerator =
      rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return numerator / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double mcc(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& labels) {
  if (pred.size() != labels.size()) throw std::invalid_argument("mcc: size mismatch");
  if (pred.empty()) throw std::invalid_argument("mcc: empty input");
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && labels[i]) ++tp;
    else if (!pred[i] && !labels[i]) ++tn;
    else if (pred[i] && !labels[i]) ++fp;
    else ++fn;
  }
  const double denom_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom_sq == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(denom_sq);
}

double f1(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& labels) {
  if (pred.size() != labels.size()) throw std::invalid_argument("f1: size mismatch");
  if (pred.empty()) throw std::invalid_argument("f1: empty input");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && labels[i]) ++tp;
    else if (pred[i] && !labels[i]) ++fp;
    else if (!pred[i] && labels[i]) ++fn;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

ScoreMatrix infer_scores(const Model& model, const Dataset& data, Protocol protocol) {
  return scores_from_logits(infer_raw_logits(model, data), protocol);
}

nlohmann::json EvalReport::to_json() const {
  using nlohmann::json;
  json out{{"checkpoint", checkpoint_id}, {"dataset", dataset_id}, {"seed", seed}};
  json protocols = json::object();
  for (int p = 0; p < 3; ++p) {
    const auto proto = static_cast<Protocol>(p);
    json per = json::object();
    for (std::size_t c = 0; c < diseases.size(); ++c) {
      const MetricTriple& m = per_disease[static_cast<std::size_t>(p)][c];
      per[diseases[c]] = json{{"auc", m.auc ? json(*m.auc) : json(nullptr)},
                              {"f1", m.f1},
                              {"mcc", m.mcc}};
    }
    const MetricTriple& m = macro[static_cast<std::size_t>(p)];
    protocols[protocol_name(proto)] =
        json{{"per_disease", per},
             {"macro", json{{"auc", m.auc ? json(*m.auc) : json(nullptr)}, {"f1", m.f1}, {"mcc", m.mcc}}}};
  }
  out["protocols"] = protocols;
  out["warnings"] = warnings;
  return out;
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  std::size_t name_w = 7;  // "disease"
  for (const std::string& d : diseases) name_w = std::max(name_w, d.size());
  name_w = std::max(name_w, std::string("macro").size());

  out << std::string(name_w, ' ') << "  ";
  for (const char* proto : {"POS", "NEG", "PNC"}) out << "|         " << proto << "          ";
  out << "\n" << std::string(name_w, ' ') << "  ";
  for (int p = 0; p < 3; ++p) out << "|   auc     f1    mcc  ";
  out << "\n";

  const auto row = [&](const std::string& name, const std::array<MetricTriple, 3>& vals) {
    out << name << std::string(name_w - name.size(), ' ') << "  ";
    for (int p = 0; p < 3; ++p) {
      const MetricTriple& m = vals[static_cast<std::size_t>(p)];
      out << "| " << format_metric(m.auc) << " " << format_metric(m.f1) << " " << format_metric(m.mcc)
          << " ";
    }
    out << "\n";
  };

  for (std::size_t c = 0; c < diseases.size(); ++c)
    row(diseases[c], {per_disease[0][c], per_disease[1][c], per_disease[2][c]});
  row("macro", macro);
  for (const std::string& w : warnings) out << "warning: " << w << "\n";
  return out.str();
}

EvalReport evaluate(const Model& model, const Dataset& data) {
  return evaluate_from_logits(infer_raw_logits(model, data), data.labels, data.vocab);
}

EvalReport evaluate_from_logits(const RawLogits& raw, const std::vector<LabelVector>& labels,
                                const DiseaseVocab& vocab) {
  if (static_cast<int>(labels.size()) != raw.n_samples || vocab.size() != raw.diseases)
    throw std::invalid_argument("evaluate: logits shape does not match labels/vocabulary");
  EvalReport report;
  report.diseases = vocab.names();

  for (int p = 0; p < 3; ++p) {
    const auto proto = static_cast<Protocol>(p);
    const ScoreMatrix m = scores_from_logits(raw, proto);
    auto& rows = report.per_disease[static_cast<std::size_t>(p)];
    rows.resize(static_cast<std::size_t>(raw.diseases));

    double sum_auc = 0, sum_f1 = 0, sum_mcc = 0;
    for (int c = 0; c < raw.diseases; ++c) {
      std::vector<double> scores(static_cast<std::size_t>(raw.n_samples));
      std::vector<std::uint8_t> targets(static_cast<std::size_t>(raw.n_samples));
      std::vector<std::uint8_t> pred(static_cast<std::size_t>(raw.n_samples));
      for (int i = 0; i < raw.n_samples; ++i) {
        const double s = m.at(i, c);
        scores[static_cast<std::size_t>(i)] = s;
        const bool present = labels[static_cast<std::size_t>(i)].present(c);
        targets[static_cast<std::size_t>(i)] = (proto == Protocol::NEG) ? !present : present;
        // POS/NEG squash the raw logit; PNC is already a probability
        const double prob = (proto == Protocol::PNC) ? s : logistic(s);
        pred[static_cast<std::size_t>(i)] = prob > 0.5;
      }
      MetricTriple& triple = rows[static_cast<std::size_t>(c)];
      triple.auc = auc(scores, targets);
      triple.f1 = f1(pred, targets);
      triple.mcc = mcc(pred, targets);
      if (triple.auc) {
        report.macro_included[static_cast<std::size_t>(p)].push_back(c);
        sum_auc += *triple.auc;
        sum_f1 += triple.f1;
        sum_mcc += triple.mcc;
      } else {
        report.warnings.push_back(std::string(protocol_name(proto)) + ": disease '" +
                                  vocab.name(c) + "' has single-class targets; omitted from macro");
      }
    }
    const auto& included = report.macro_included[static_cast<std::size_t>(p)];
    if (!included.empty()) {
      const double k = static_cast<double>(included.size());
      report.macro[static_cast<std::size_t>(p)] =
          MetricTriple{sum_auc / k, sum_f1 / k, sum_mcc / k};
    } else {
      report.macro[static_cast<std::size_t>(p)] = MetricTriple{std::nullopt, 0.0, 0.0};
    }
  }
  return report;
}

void dump_embeddings(const Model& model, const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_embeddings: cannot write " + path);
  const Tokenizer tokenizer(data.vocab);
  const int d = data.vocab.size();

  NoGradGuard guard;
  std::vector<EncoderOutputs> prompts;  // disease-major, affirmative then negative
  for (int c = 0; c < d; ++c) {
    prompts.push_back(model.encode_text(tokenizer.tokenize(render(PromptSpec({c}, {}), data.vocab))));
    prompts.push_back(model.encode_text(tokenizer.tokenize(render(PromptSpec({}, {c}), data.vocab))));
  }

  char buf[32];
  for (int i = 0; i < data.size(); ++i) {
    const EncoderOutputs img = model.encode_image(data.images[static_cast<std::size_t>(i)]);
    for (int c = 0; c < d; ++c) {
      for (int polarity = 0; polarity < 2; ++polarity) {
        const bool affirm = polarity == 0;
        const EncoderOutputs& prompt = prompts[static_cast<std::size_t>(2 * c + polarity)];
        const bool present = data.labels[static_cast<std::size_t>(i)].present(c);
        const bool truth = affirm ? present : !present;
        for (const char* direction : {"i2t", "t2i"}) {
          const bool is_i2t = direction[0] == 'i';
          const Tensor hidden = is_i2t
                                    ? model.fusion_hidden(model.i2t_head(), img, prompt)
                                    : model.fusion_hidden(model.t2i_head(), prompt, img);
          out << data.images[static_cast<std::size_t>(i)].id << '\t' << data.vocab.name(c) << '\t'
              << (affirm ? "pos" : "neg") << '\t' << (truth ? 1 : 0) << '\t' << direction;
          for (std::size_t x = 0; x < hidden.numel(); ++x) {
            std::snprintf(buf, sizeof(buf), "%.17g", hidden.data()[x]);
            out << '\t' << buf;
          }
          out << '\n';
        }
      }
    }
  }
  if (!out) throw std::runtime_error("dump_embeddings: short write to " + path);
}

}  // namespace bimcq
