// Command-line driver: dataset generation, training, evaluation, ablation
// grids and embedding dumps, all wired through one JSON config file with
// dotted --set overrides.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bimcq/checkpoint.hpp"
#include "bimcq/config.hpp"
#include "bimcq/data.hpp"
#include "bimcq/eval.hpp"
#include "bimcq/rng.hpp"
#include "bimcq/training.hpp"

namespace {

using namespace bimcq;
using nlohmann::json;

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;

  RunConfig load() const {
    std::vector<std::string> all = overrides;
    if (seed_set) all.push_back("seed=" + std::to_string(seed));
    return RunConfig::from_file(config_path, all);
  }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "JSON config file");
  if (config_required) opt->required();
  cmd->add_option("--set", args.overrides, "override config values, e.g. --set train.epochs=5");
  cmd->add_option("--seed", args.seed, "override the top-level seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

Dataset select_split(const StoredDataset& stored, const std::string& split) {
  if (split == "train") return stored.train;
  if (split == "test") return stored.test;
  throw std::invalid_argument("unknown split '" + split + "' (expected train | test)");
}

void check_vocab(const Checkpoint& ckpt, const Dataset& data) {
  if (ckpt.vocab_names != data.vocab.names())
    throw std::runtime_error("checkpoint vocabulary does not match dataset vocabulary");
}

int cmd_gen_data(const CommonArgs& args, const std::string& out_override) {
  RunConfig cfg = args.load();
  if (!out_override.empty()) cfg.data_dir = out_override;

  const Dataset full = generate_dataset(cfg.synth, mix_seed(cfg.seed, "data"));
  const auto [train_idx, test_idx] =
      split(full.size(), {cfg.train_fraction, 1.0 - cfg.train_fraction}, cfg.seed);

  StoredDataset stored;
  stored.config = cfg.synth;
  stored.seed = cfg.seed;
  stored.train_fraction = cfg.train_fraction;
  stored.train.vocab = stored.test.vocab = full.vocab;
  for (const int i : train_idx) {
    stored.train.images.push_back(full.images[static_cast<std::size_t>(i)]);
    stored.train.labels.push_back(full.labels[static_cast<std::size_t>(i)]);
  }
  for (const int i : test_idx) {
    stored.test.images.push_back(full.images[static_cast<std::size_t>(i)]);
    stored.test.labels.push_back(full.labels[static_cast<std::size_t>(i)]);
  }
  save_dataset(stored, cfg.data_dir);

  std::cout << "dataset: " << cfg.data_dir << "\n"
            << "samples: " << full.size() << " (train " << train_idx.size() << ", test "
            << test_idx.size() << ")\n"
            << "diseases: " << full.vocab.size() << "\n";
  std::cout << "realized prevalence:";
  for (int c = 0; c < full.vocab.size(); ++c) {
    int count = 0;
    for (const LabelVector& lv : full.labels) count += lv.present(c);
    std::printf(" %s=%.3f", full.vocab.name(c).c_str(),
                full.size() > 0 ? static_cast<double>(count) / full.size() : 0.0);
  }
  std::cout << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& out_override) {
  RunConfig cfg = args.load();
  if (!out_override.empty()) cfg.checkpoint_path = out_override;

  const StoredDataset stored = load_dataset(cfg.data_dir);
  TrainConfig tc = cfg.train;
  tc.model.d_raw = stored.config.d_raw;

  TrainOutput out = train(tc, stored.train);
  for (std::size_t e = 0; e < out.result.epoch_losses.size(); ++e)
    std::printf("epoch %zu: mean loss %.6f\n", e + 1, out.result.epoch_losses[e]);
  const BuildStats& s = out.result.stats;
  if (tc.objective == Objective::BiMcq)
    std::printf("instances: i2t %lld, t2i %lld (excluded %lld); prompts: %lld affirmative, %lld "
                "negative, %lld mixed\n",
                static_cast<long long>(s.i2t_instances), static_cast<long long>(s.t2i_instances),
                static_cast<long long>(s.t2i_excluded), static_cast<long long>(s.affirmative_prompts),
                static_cast<long long>(s.negative_prompts), static_cast<long long>(s.mixed_prompts));
  else
    std::printf("pairs: %lld affirmative, %lld negative prompts; %d batches skipped\n",
                static_cast<long long>(s.affirmative_prompts),
                static_cast<long long>(s.negative_prompts), out.result.batches_skipped);

  ensure_parent_dir(cfg.checkpoint_path);
  save_checkpoint(make_checkpoint(out.model, tc, stored.train.vocab, out.result), cfg.checkpoint_path);
  std::cout << "checkpoint: " << cfg.checkpoint_path << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args, std::string checkpoint_path, std::string data_dir,
             std::string out_path, const std::string& split_name) {
  if (!args.config_path.empty()) {
    RunConfig cfg = args.load();
    if (checkpoint_path.empty()) checkpoint_path = cfg.checkpoint_path;
    if (data_dir.empty()) data_dir = cfg.data_dir;
    if (out_path.empty()) out_path = cfg.report_path;
  }
  if (checkpoint_path.empty() || data_dir.empty() || out_path.empty())
    throw std::invalid_argument("eval needs --checkpoint, --data and --out (or a --config with paths)");

  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const StoredDataset stored = load_dataset(data_dir);
  const Dataset data = select_split(stored, split_name);
  check_vocab(ckpt, data);
  const Model model = ckpt.restore_model();

  EvalReport report = evaluate(model, data);
  report.checkpoint_id = checkpoint_path;
  report.dataset_id = data_dir + ":" + split_name;
  report.seed = ckpt.train_config.seed;

  ensure_parent_dir(out_path);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("eval: cannot write " + out_path);
  out << report.to_json().dump(2) << "\n";
  std::cout << report.to_table();
  std::cout << "report: " << out_path << "\n";
  return 0;
}

int cmd_dump_embeddings(const CommonArgs& args, std::string checkpoint_path, std::string data_dir,
                        std::string out_path, const std::string& split_name) {
  if (!args.config_path.empty()) {
    RunConfig cfg = args.load();
    if (checkpoint_path.empty()) checkpoint_path = cfg.checkpoint_path;
    if (data_dir.empty()) data_dir = cfg.data_dir;
    if (out_path.empty()) out_path = cfg.embeddings_path;
  }
  if (checkpoint_path.empty() || data_dir.empty() || out_path.empty())
    throw std::invalid_argument(
        "dump-embeddings needs --checkpoint, --data and --out (or a --config with paths)");

  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const StoredDataset stored = load_dataset(data_dir);
  const Dataset data = select_split(stored, split_name);
  check_vocab(ckpt, data);
  const Model model = ckpt.restore_model();
  ensure_parent_dir(out_path);
  dump_embeddings(model, data, out_path);
  std::cout << "embeddings: " << out_path << "\n";
  return 0;
}

std::string cell_name(Objective obj, FusionMode fus, FreezeMode frz, bool mixed) {
  return to_string(obj) + "_" + to_string(fus) + "_" + to_string(frz) + (mixed ? "_mixed" : "_nomixed");
}

int cmd_ablate(const CommonArgs& args) {
  const RunConfig cfg = args.load();
  const StoredDataset stored = load_dataset(cfg.data_dir);
  std::filesystem::create_directories(cfg.ablate.out_dir);

  struct CellResult {
    std::string name;
    bool failed = false;
    std::string error;
    std::vector<std::array<double, 3>> per_seed;  // POS/NEG/PNC macro AUC
  };
  std::vector<CellResult> cells;

  for (const Objective obj : cfg.ablate.objectives)
    for (const FusionMode fus : cfg.ablate.fusions)
      for (const FreezeMode frz : cfg.ablate.freezes)
        for (const bool mixed : cfg.ablate.use_mixed) {
          CellResult cell;
          cell.name = cell_name(obj, fus, frz, mixed);
          for (const std::uint64_t seed : cfg.ablate.seeds) {
            try {
              TrainConfig tc = cfg.train;
              tc.objective = obj;
              tc.model.fusion = fus;
              tc.model.freeze = frz;
              tc.mcq.use_mixed = mixed;
              tc.seed = seed;
              tc.model.d_raw = stored.config.d_raw;

              TrainOutput out = train(tc, stored.train);
              const std::string cell_dir =
                  cfg.ablate.out_dir + "/" + cell.name + "/seed" + std::to_string(seed);
              std::filesystem::create_directories(cell_dir);
              save_checkpoint(make_checkpoint(out.model, tc, stored.train.vocab, out.result),
                              cell_dir + "/model.ckpt");

              EvalReport report = evaluate(out.model, stored.test);
              report.checkpoint_id = cell_dir + "/model.ckpt";
              report.dataset_id = cfg.data_dir + ":test";
              report.seed = seed;
              std::ofstream rep(cell_dir + "/report.json");
              rep << report.to_json().dump(2) << "\n";

              cell.per_seed.push_back({report.macro[0].auc.value_or(0.5),
                                       report.macro[1].auc.value_or(0.5),
                                       report.macro[2].auc.value_or(0.5)});
              std::printf("cell %s seed %llu: POS %.3f NEG %.3f PNC %.3f\n", cell.name.c_str(),
                          static_cast<unsigned long long>(seed), cell.per_seed.back()[0],
                          cell.per_seed.back()[1], cell.per_seed.back()[2]);
            } catch (const std::exception& e) {
              cell.failed = true;
              cell.error = e.what();
              std::cerr << "cell " << cell.name << " seed " << seed << " failed: " << e.what() << "\n";
            }
          }
          cells.push_back(std::move(cell));
        }

  // combined comparison table: rows = settings, columns = macro AUC means
  std::cout << "\nsetting                                              POS    NEG    PNC   (mean over "
            << cfg.ablate.seeds.size() << " seed(s))\n";
  json summary = json::array();
  bool any_failed = false;
  for (const CellResult& cell : cells) {
    std::array<double, 3> mean{0, 0, 0};
    for (const auto& v : cell.per_seed)
      for (int p = 0; p < 3; ++p) mean[static_cast<std::size_t>(p)] += v[static_cast<std::size_t>(p)];
    if (!cell.per_seed.empty())
      for (int p = 0; p < 3; ++p) mean[static_cast<std::size_t>(p)] /= static_cast<double>(cell.per_seed.size());
    std::printf("%-50s %6.3f %6.3f %6.3f%s\n", cell.name.c_str(), mean[0], mean[1], mean[2],
                cell.failed ? "  [FAILED]" : "");
    json cell_json{{"name", cell.name}, {"failed", cell.failed},
                   {"mean", {{"pos", mean[0]}, {"neg", mean[1]}, {"pnc", mean[2]}}}};
    json per_seed = json::array();
    for (std::size_t s = 0; s < cell.per_seed.size(); ++s)
      per_seed.push_back(json{{"seed", cfg.ablate.seeds[s]},
                              {"pos", cell.per_seed[s][0]},
                              {"neg", cell.per_seed[s][1]},
                              {"pnc", cell.per_seed[s][2]}});
    cell_json["per_seed"] = per_seed;
    if (cell.failed) cell_json["error"] = cell.error;
    summary.push_back(std::move(cell_json));
    any_failed = any_failed || cell.failed;
  }
  std::ofstream sum(cfg.ablate.out_dir + "/summary.json");
  sum << summary.dump(2) << "\n";
  std::cout << "summary: " << cfg.ablate.out_dir << "/summary.json\n";
  return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bidirectional multiple-choice vision-language alignment"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, ablate_args, dump_args;
  std::string gen_out, train_out;
  std::string eval_ckpt, eval_data, eval_out, eval_split = "test";
  std::string dump_ckpt, dump_data, dump_out, dump_split = "test";

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
  add_common(gen, gen_args);
  gen->add_option("--out", gen_out, "output dataset directory (overrides data.dir)");

  auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(tr, train_args);
  tr->add_option("--out", train_out, "checkpoint path (overrides paths.checkpoint)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint and write a report");
  add_common(ev, eval_args, false);
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint file");
  ev->add_option("--data", eval_data, "dataset directory");
  ev->add_option("--out", eval_out, "report JSON path");
  ev->add_option("--split", eval_split, "dataset split to evaluate (train | test)");

  auto* ab = app.add_subcommand("ablate", "run the objective/fusion/freeze/mixed grid");
  add_common(ab, ablate_args);

  auto* du = app.add_subcommand("dump-embeddings", "write fusion hidden vectors as TSV");
  add_common(du, dump_args, false);
  du->add_option("--checkpoint", dump_ckpt, "checkpoint file");
  du->add_option("--data", dump_data, "dataset directory");
  du->add_option("--out", dump_out, "TSV output path");
  du->add_option("--split", dump_split, "dataset split to dump (train | test)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(gen_args, gen_out);
    if (tr->parsed()) return cmd_train(train_args, train_out);
    if (ev->parsed()) return cmd_eval(eval_args, eval_ckpt, eval_data, eval_out, eval_split);
    if (ab->parsed()) return cmd_ablate(ablate_args);
    if (du->parsed()) return cmd_dump_embeddings(dump_args, dump_ckpt, dump_data, dump_out, dump_split);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
