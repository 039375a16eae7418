#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimcq/data.hpp"
#include "bimcq/training.hpp"

namespace bimcq {

std::string to_string(Objective v);
std::string to_string(FusionMode v);
std::string to_string(FreezeMode v);
std::string to_string(InfoNceScoring v);
Objective objective_from_string(const std::string& s);
FusionMode fusion_from_string(const std::string& s);
FreezeMode freeze_from_string(const std::string& s);
InfoNceScoring infonce_scoring_from_string(const std::string& s);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// One structured JSON config file per command; dotted --set overrides
// (e.g. train.epochs=5) are applied before validation.
struct RunConfig {
  std::uint64_t seed = 42;

  SynthConfig synth;
  double train_fraction = 0.75;
  std::string data_dir = "data/synth";

  TrainConfig train;  // holds mcq + model sections

  std::string checkpoint_path = "out/model.ckpt";
  std::string report_path = "out/report.json";
  std::string embeddings_path = "out/embeddings.tsv";

  struct Ablate {
    std::vector<Objective> objectives{Objective::BiMcq, Objective::InfoNcePosOnly,
                                      Objective::InfoNcePosNeg};
    std::vector<FusionMode> fusions{FusionMode::Separated, FusionMode::Shared};
    std::vector<FreezeMode> freezes{FreezeMode::None};
    std::vector<bool> use_mixed{true};
    std::vector<std::uint64_t> seeds;  // empty means {top-level seed}
    std::string out_dir = "out/ablate";
  } ablate;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path, const std::vector<std::string>& overrides);
  nlohmann::json to_json() const;
};

// parses "section.key=value" and applies it to the config json
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace bimcq
