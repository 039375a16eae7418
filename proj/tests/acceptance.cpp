// Acceptance suite: one line per criterion, nonzero exit if any fail.
//
//   1  autodiff finite-difference checks (ops + full fusion passes)
//   2  metric oracle equivalence (rank AUC vs pairwise; mcc/f1 recompute)
//   3  MCQ construction soundness + shuffle uniformity
//   4  objective comparison: Pos-Only InfoNCE lifts POS and breaks NEG,
//      the bidirectional MCQ objective keeps them balanced
//   5  separated vs shared fusion on NEG AUC (directional, 5 seeds)
//   6  mixed-prompt ablation plumbing
//   7  CLI determinism (train and eval twice)
//   8  PNC softmax identities

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimcq/checkpoint.hpp"
#include "bimcq/data.hpp"
#include "bimcq/eval.hpp"
#include "bimcq/mcq.hpp"
#include "bimcq/model.hpp"
#include "bimcq/rng.hpp"
#include "bimcq/tensor.hpp"
#include "bimcq/training.hpp"
#include "helpers.hpp"

using namespace bimcq;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail,
            double elapsed_s) {
  std::printf("[%s] criterion %d: %-28s %s (%.1fs)\n", pass ? "PASS" : "FAIL", criterion, name,
              detail.c_str(), elapsed_s);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

template <typename F>
void criterion(int number, const char* name, double budget_s, F&& body) {
  const auto t0 = Clock::now();
  bool pass = false;
  std::string detail;
  try {
    detail = body(&pass);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  if (elapsed > budget_s) {
    pass = false;
    detail += " [over the " + std::to_string(static_cast<int>(budget_s)) + "s budget]";
  }
  report(number, name, pass, detail, elapsed);
}

// ---------- shared helpers ----------

Tensor random_param(std::vector<int> shape, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(-2.0, 2.0);
  return t;
}

// the acceptance training setup: D=4, 1500 train / 500 test, d=32, 10 epochs
struct Setup {
  Dataset train;
  Dataset test;
};

Setup make_setup(std::uint64_t seed) {
  SynthConfig dc;  // defaults: D=4, P=6, d_raw=16, amplitude 3, noise 0.5, n=2000
  dc.n_samples = 2000;
  const Dataset full = generate_dataset(dc, mix_seed(seed, "data"));
  const auto [tr, te] = split(full.size(), {0.75, 0.25}, seed);
  Setup s;
  s.train.vocab = s.test.vocab = full.vocab;
  for (const int i : tr) {
    s.train.images.push_back(full.images[static_cast<std::size_t>(i)]);
    s.train.labels.push_back(full.labels[static_cast<std::size_t>(i)]);
  }
  for (const int i : te) {
    s.test.images.push_back(full.images[static_cast<std::size_t>(i)]);
    s.test.labels.push_back(full.labels[static_cast<std::size_t>(i)]);
  }
  return s;
}

TrainConfig acceptance_train_config(std::uint64_t seed, Objective objective) {
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 8;
  tc.learning_rate = 1e-2;
  tc.seed = seed;
  tc.objective = objective;
  tc.model.d = 32;
  tc.model.heads = 4;
  return tc;
}

std::optional<double> pairwise_auc(const std::vector<double>& scores,
                                   const std::vector<std::uint8_t>& labels) {
  double wins = 0, ties = 0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    ++n_pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) wins += 1;
      else if (scores[i] == scores[j]) ties += 1;
    }
  }
  n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  return (wins + 0.5 * ties) / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// ---------- criteria ----------

std::string run_autodiff_checks(bool* pass) {
  constexpr int kSeeds = 50;
  int checks = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(9000 + static_cast<std::uint64_t>(seed));
    {
      Tensor a = random_param({3, 4}, rng), b = random_param({4, 2}, rng);
      test_helpers::check_gradients({a, b}, [&] { return sum(tanh_act(matmul(a, b))); });
      ++checks;
    }
    {
      Tensor a = random_param({3, 4}, rng), b = random_param({5, 4}, rng);
      test_helpers::check_gradients({a, b}, [&] { return sum(tanh_act(matmul_nt(a, b))); });
      ++checks;
    }
    {
      Tensor a = random_param({3, 5}, rng), b = random_param({3, 5}, rng),
             bias = random_param({5}, rng);
      test_helpers::check_gradients({a, b, bias},
                                    [&] { return sum(tanh_act(add_bias(add(a, b), bias))); });
      ++checks;
    }
    {
      Tensor x = random_param({2, 6}, rng), v = random_param({6, 1}, rng);
      test_helpers::check_gradients({x, v}, [&] { return sum(matmul(softmax(x), v)); });
      ++checks;
    }
    {
      Tensor logits = random_param({5}, rng);
      const int target = static_cast<int>(rng.uniform_int(5));
      test_helpers::check_gradients({logits}, [&] { return cross_entropy(logits, target); });
      ++checks;
    }
    {
      Tensor x = random_param({4, 6}, rng), v = random_param({6, 1}, rng);
      test_helpers::check_gradients(
          {x, v}, [&] { return sum(matmul(l2_normalize_rows(mean_rows(x)), v)); });
      ++checks;
    }
    {
      Tensor q = random_param({1, 8}, rng), k = random_param({3, 8}, rng),
             v = random_param({3, 8}, rng), w = random_param({8, 8}, rng),
             b = random_param({8}, rng);
      test_helpers::check_gradients(
          {q, k, v, w, b}, [&] { return sum(tanh_act(scaled_dot_attention(q, k, v, w, b, 2))); });
      ++checks;
    }
  }
  // full i2t / t2i forward passes over every trainable parameter group
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(9500 + static_cast<std::uint64_t>(seed));
    ModelConfig mc;
    mc.d = 8;
    mc.heads = 2;
    mc.d_raw = 6;
    mc.n_tokens = 10;
    mc.max_tokens = 12;
    Model model(mc, 7700 + static_cast<std::uint64_t>(seed));
    SynthImage img;
    img.n_patches = 3;
    img.d_raw = 6;
    img.patches.resize(18);
    for (double& v : img.patches) v = rng.uniform(-1.5, 1.5);
    TokenSequence t0, t1;
    for (int i = 0; i < 4; ++i) t0.ids.push_back(static_cast<int>(rng.uniform_int(10)));
    for (int i = 0; i < 5; ++i) t1.ids.push_back(static_cast<int>(rng.uniform_int(10)));
    test_helpers::check_gradients(model.trainable_parameters(), [&] {
      const EncoderOutputs q = model.encode_image(img);
      const std::vector<EncoderOutputs> cands{model.encode_text(t0), model.encode_text(t1)};
      return add(cross_entropy(model.i2t_logits(q, cands), 1),
                 cross_entropy(model.t2i_logits(cands[0], {q, q}), 0));
    });
    ++checks;
  }
  *pass = true;
  return std::to_string(checks) + " gradient checks, step 1e-4, rel err <= 1e-4";
}

std::string run_metric_oracles(bool* pass) {
  Rng rng(41);
  int auc_cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(199));
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = std::floor(rng.uniform(-4, 4) * 4.0) / 4.0;
      labels[static_cast<std::size_t>(i)] = rng.bernoulli(0.4);
    }
    const auto fast = auc(scores, labels);
    const auto slow = pairwise_auc(scores, labels);
    if (fast.has_value() != slow.has_value()) {
      *pass = false;
      return "auc definedness disagrees with the pairwise oracle";
    }
    if (fast && *fast != *slow) {
      *pass = false;
      return "auc differs from the pairwise oracle at trial " + std::to_string(trial);
    }
    ++auc_cases;
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(60));
    std::vector<std::uint8_t> pred(static_cast<std::size_t>(n)), truth(static_cast<std::size_t>(n));
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (int i = 0; i < n; ++i) {
      pred[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
      truth[static_cast<std::size_t>(i)] = rng.bernoulli(0.5);
      if (pred[static_cast<std::size_t>(i)] && truth[static_cast<std::size_t>(i)]) ++tp;
      else if (!pred[static_cast<std::size_t>(i)] && !truth[static_cast<std::size_t>(i)]) ++tn;
      else if (pred[static_cast<std::size_t>(i)]) ++fp;
      else ++fn;
    }
    const double denom_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    const double expected_mcc = denom_sq == 0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(denom_sq);
    const double expected_f1 = (2 * tp + fp + fn) == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
    if (std::abs(mcc(pred, truth) - expected_mcc) > 1e-12 ||
        std::abs(f1(pred, truth) - expected_f1) > 1e-12) {
      *pass = false;
      return "mcc/f1 differ from the direct formula at trial " + std::to_string(trial);
    }
  }
  *pass = true;
  return std::to_string(auc_cases) + " auc instances exact; 1000 mcc/f1 recomputations within 1e-12";
}

std::string run_mcq_soundness(bool* pass) {
  Rng batch_rng(42), build_rng(43);
  int instances = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    McqConfig cfg;
    cfg.subset_size = 1 + (trial % 2);
    cfg.max_candidates = std::min(4, 1 << cfg.subset_size);
    cfg.use_mixed = (trial / 2) % 2 == 0;
    std::vector<LabelVector> batch;
    for (int b = 0; b < 8; ++b) {
      LabelVector lv(4);
      for (int c = 0; c < 4; ++c) lv.set(c, batch_rng.bernoulli(0.3));
      batch.push_back(std::move(lv));
    }
    BuildStats stats;
    for (const I2tInstance& inst : build_i2t(batch, cfg, build_rng, &stats)) {
      int consistent = 0;
      for (const PromptSpec& cand : inst.candidates)
        consistent += is_consistent(cand, batch[static_cast<std::size_t>(inst.query_image_index)]);
      const bool correct_ok =
          is_consistent(inst.candidates[static_cast<std::size_t>(inst.correct)],
                        batch[static_cast<std::size_t>(inst.query_image_index)]);
      if (consistent != 1 || !correct_ok) {
        *pass = false;
        return "i2t instance fails the brute-force scan at trial " + std::to_string(trial);
      }
      if (!cfg.use_mixed)
        for (const PromptSpec& cand : inst.candidates)
          if (cand.polarity() == Polarity::Mixed) {
            *pass = false;
            return "mixed candidate emitted with use_mixed=false";
          }
      ++instances;
    }
    for (const T2iInstance& inst : build_t2i(batch, cfg, build_rng, &stats)) {
      int consistent = 0;
      for (const int opt : inst.options)
        consistent += is_consistent(inst.query_prompt, batch[static_cast<std::size_t>(opt)]);
      const int source = inst.options[static_cast<std::size_t>(inst.correct)];
      if (consistent != 1 || !is_consistent(inst.query_prompt, batch[static_cast<std::size_t>(source)])) {
        *pass = false;
        return "t2i instance fails the brute-force scan at trial " + std::to_string(trial);
      }
      ++instances;
    }
  }
  // shuffle uniformity, k=1
  McqConfig cfg;
  cfg.subset_size = 1;
  cfg.max_candidates = 2;
  LabelVector labels(4);
  labels.set(0, true);
  labels.set(2, true);
  Rng rng(44);
  int at_zero = 0;
  const int total = 10000;
  for (int i = 0; i < total; ++i)
    at_zero += enumerate_candidates(labels, 1, cfg, rng).second == 0;
  const double freq = static_cast<double>(at_zero) / total;
  if (freq < 0.48 || freq > 0.52) {
    *pass = false;
    return "correct-position frequency " + std::to_string(freq) + " outside 0.5 +/- 0.02";
  }
  *pass = true;
  return std::to_string(instances) + " instances sound; correct-position freq " +
         std::to_string(freq);
}

struct ObjectiveMeans {
  double pos = 0, neg = 0;
};

std::string run_objective_comparison(bool* pass) {
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  ObjectiveMeans bimcq, posonly;
  double max_seed_seconds = 0;
  for (const std::uint64_t seed : seeds) {
    const auto seed_t0 = Clock::now();
    const Setup setup = make_setup(seed);
    for (const Objective obj : {Objective::BiMcq, Objective::InfoNcePosOnly}) {
      const TrainConfig tc = acceptance_train_config(seed, obj);
      TrainOutput out = train(tc, setup.train);
      const EvalReport r = evaluate(out.model, setup.test);
      ObjectiveMeans& m = obj == Objective::BiMcq ? bimcq : posonly;
      m.pos += r.macro[0].auc.value_or(0.5) / static_cast<double>(seeds.size());
      m.neg += r.macro[1].auc.value_or(0.5) / static_cast<double>(seeds.size());
    }
    max_seed_seconds =
        std::max(max_seed_seconds, std::chrono::duration<double>(Clock::now() - seed_t0).count());
  }
  const double bimcq_gap = bimcq.pos - bimcq.neg;
  const double posonly_gap = posonly.pos - posonly.neg;
  const bool a = posonly.pos >= 0.80 && posonly_gap >= 0.15;
  const bool b = bimcq.pos >= 0.80 && bimcq_gap <= 0.05;
  const bool c = posonly_gap - bimcq_gap >= 0.10;
  const bool budget = max_seed_seconds < 600.0;
  *pass = a && b && c && budget;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "pos-only POS %.3f gap %.3f (a:%s); mcq POS %.3f gap %.3f (b:%s); diff %.3f (c:%s)",
                posonly.pos, posonly_gap, a ? "ok" : "FAIL", bimcq.pos, bimcq_gap, b ? "ok" : "FAIL",
                posonly_gap - bimcq_gap, c ? "ok" : "FAIL");
  return buf;
}

std::string run_fusion_comparison(bool* pass) {
  double neg_separated = 0, neg_shared = 0;
  for (const std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Setup setup = make_setup(seed);
    for (const FusionMode mode : {FusionMode::Separated, FusionMode::Shared}) {
      TrainConfig tc = acceptance_train_config(seed, Objective::BiMcq);
      tc.model.fusion = mode;
      TrainOutput out = train(tc, setup.train);
      const EvalReport r = evaluate(out.model, setup.test);
      (mode == FusionMode::Separated ? neg_separated : neg_shared) +=
          r.macro[1].auc.value_or(0.5) / 5.0;
    }
  }
  *pass = neg_separated >= neg_shared;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mean NEG macro AUC: separated %.3f vs shared %.3f", neg_separated,
                neg_shared);
  return buf;
}

std::string run_mixed_ablation(bool* pass) {
  const Setup setup = make_setup(6);
  BuildStats with_mixed, without_mixed;
  for (const bool mixed : {true, false}) {
    TrainConfig tc = acceptance_train_config(6, Objective::BiMcq);
    tc.epochs = 2;  // plumbing check, not a performance claim
    tc.mcq.use_mixed = mixed;
    TrainOutput out = train(tc, setup.train);
    if (out.result.epoch_losses.size() != 2 || !std::isfinite(out.result.epoch_losses.back())) {
      *pass = false;
      return "training did not run to completion";
    }
    (mixed ? with_mixed : without_mixed) = out.result.stats;
  }
  *pass = with_mixed.mixed_prompts > 0 && without_mixed.mixed_prompts == 0 &&
          without_mixed.i2t_instances > 0 && without_mixed.t2i_instances > 0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mixed prompts: %lld with, %lld without",
                static_cast<long long>(with_mixed.mixed_prompts),
                static_cast<long long>(without_mixed.mixed_prompts));
  return buf;
}

std::string run_cli_determinism(bool* pass) {
  const test_helpers::TempDir dir;
  const nlohmann::json cfg{
      {"seed", 33},
      {"data",
       {{"n_samples", 160}, {"diseases", 3}, {"patches", 4}, {"d_raw", 8}, {"dir", dir.str("data")}}},
      {"model", {{"d", 16}, {"heads", 2}}},
      {"train", {{"epochs", 2}, {"batch_size", 8}, {"learning_rate", 0.005}}},
      {"paths", {{"checkpoint", dir.str("m.ckpt")}, {"report", dir.str("r.json")}}}};
  {
    std::ofstream out(dir.str("cfg.json"));
    out << cfg.dump(2);
  }
  const auto run = [&](const std::string& args) {
    const std::string cmd =
        std::string(BIMCQ_CLI_PATH) + " " + args + " >> " + dir.str("log.txt") + " 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  if (!run("gen-data --config " + dir.str("cfg.json"))) {
    *pass = false;
    return "gen-data failed";
  }
  if (!run("train --config " + dir.str("cfg.json")) ||
      !run("train --config " + dir.str("cfg.json") + " --out " + dir.str("m2.ckpt"))) {
    *pass = false;
    return "train failed";
  }
  const std::string ckpt_a = test_helpers::read_file_text(dir.str("m.ckpt"));
  const std::string ckpt_b = test_helpers::read_file_text(dir.str("m2.ckpt"));
  if (ckpt_a.empty() || ckpt_a != ckpt_b) {
    *pass = false;
    return "checkpoints differ between identical runs";
  }
  if (!run("eval --config " + dir.str("cfg.json")) ||
      !run("eval --config " + dir.str("cfg.json") + " --out " + dir.str("r2.json"))) {
    *pass = false;
    return "eval failed";
  }
  const std::string report_a = test_helpers::read_file_text(dir.str("r.json"));
  if (report_a.empty() || report_a != test_helpers::read_file_text(dir.str("r2.json"))) {
    *pass = false;
    return "reports differ between identical runs";
  }
  *pass = true;
  return "checkpoints and reports bitwise identical across reruns";
}

std::string run_pnc_identities(bool* pass) {
  Rng rng(55);
  if (pnc_score(1.25, 1.25) != 0.5 || pnc_score(-40.0, -40.0) != 0.5) {
    *pass = false;
    return "tie does not give exactly 0.5";
  }
  for (int trial = 0; trial < 5000; ++trial) {
    const double a = rng.uniform(-42, 42), b = rng.uniform(-42, 42);
    const double p = pnc_score(a, b);
    if (!(p > 0.0 && p < 1.0) || p + pnc_score(b, a) != 1.0) {
      *pass = false;
      return "complement identity violated";
    }
  }
  for (const double s_neg : {-7.0, 0.0, 3.25}) {
    double prev = -1;
    for (double s_pos = -25.0; s_pos <= 25.0; s_pos += 0.125) {
      const double p = pnc_score(s_pos, s_neg);
      if (p <= prev) {
        *pass = false;
        return "monotonicity sweep failed";
      }
      prev = p;
    }
  }
  *pass = true;
  return "tie = 0.5 exact; 5000 complements exact; monotone on all sweeps";
}

}  // namespace

int main() {
  std::printf("acceptance suite\n----------------\n");
  criterion(1, "autodiff correctness", 60.0, run_autodiff_checks);
  criterion(2, "metric oracle equivalence", 60.0, run_metric_oracles);
  criterion(3, "mcq construction soundness", 60.0, run_mcq_soundness);
  criterion(8, "pnc identities", 60.0, run_pnc_identities);
  criterion(6, "mixed-prompt ablation", 300.0, run_mixed_ablation);
  criterion(7, "cli determinism", 300.0, run_cli_determinism);
  criterion(4, "objective comparison", 1800.0, run_objective_comparison);
  criterion(5, "separated vs shared fusion", 1200.0, run_fusion_comparison);
  if (g_failures == 0) {
    std::printf("----------------\nall criteria passed\n");
    return 0;
  }
  std::printf("----------------\n%d criteria FAILED\n", g_failures);
  return 1;
}
