#include "bimcq/config.hpp"

#include <fstream>
#include <stdexcept>

namespace bimcq {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::string& section,
                         std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* k : known)
      if (key == k) {
        found = true;
        break;
      }
    if (!found)
      throw std::invalid_argument("config: unknown key '" + key + "' in section '" + section + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: invalid value for '") + key + "'");
  }
}

}  // namespace

std::string to_string(Objective v) {
  switch (v) {
    case Objective::BiMcq: return "bimcq";
    case Objective::InfoNcePosOnly: return "infonce_pos_only";
    case Objective::InfoNcePosNeg: return "infonce_pos_neg";
  }
  return "?";
}

std::string to_string(FusionMode v) {
  return v == FusionMode::Separated ? "separated" : "shared";
}

std::string to_string(FreezeMode v) {
  switch (v) {
    case FreezeMode::None: return "none";
    case FreezeMode::Image: return "image";
    case FreezeMode::ImageAndText: return "image_and_text";
  }
  return "?";
}

std::string to_string(InfoNceScoring v) {
  return v == InfoNceScoring::Fusion ? "fusion" : "global_cosine";
}

Objective objective_from_string(const std::string& s) {
  if (s == "bimcq") return Objective::BiMcq;
  if (s == "infonce_pos_only") return Objective::InfoNcePosOnly;
  if (s == "infonce_pos_neg") return Objective::InfoNcePosNeg;
  throw std::invalid_argument("config: unknown objective '" + s +
                              "' (expected bimcq | infonce_pos_only | infonce_pos_neg)");
}

FusionMode fusion_from_string(const std::string& s) {
  if (s == "separated") return FusionMode::Separated;
  if (s == "shared") return FusionMode::Shared;
  throw std::invalid_argument("config: unknown fusion mode '" + s + "' (expected separated | shared)");
}

FreezeMode freeze_from_string(const std::string& s) {
  if (s == "none") return FreezeMode::None;
  if (s == "image") return FreezeMode::Image;
  if (s == "image_and_text") return FreezeMode::ImageAndText;
  throw std::invalid_argument("config: unknown freeze mode '" + s +
                              "' (expected none | image | image_and_text)");
}

InfoNceScoring infonce_scoring_from_string(const std::string& s) {
  if (s == "fusion") return InfoNceScoring::Fusion;
  if (s == "global_cosine") return InfoNceScoring::GlobalCosine;
  throw std::invalid_argument("config: unknown infonce_scoring '" + s +
                              "' (expected fusion | global_cosine)");
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"seed", cfg.seed},
              {"objective", to_string(cfg.objective)},
              {"temperature", cfg.temperature},
              {"infonce_scoring", to_string(cfg.infonce_scoring)},
              {"mcq",
               {{"subset_size", cfg.mcq.subset_size},
                {"max_candidates", cfg.mcq.max_candidates},
                {"min_t2i_options", cfg.mcq.min_t2i_options},
                {"use_mixed", cfg.mcq.use_mixed}}},
              {"model",
               {{"d", cfg.model.d},
                {"heads", cfg.model.heads},
                {"mlp_hidden", cfg.model.mlp_hidden},
                {"freeze", to_string(cfg.model.freeze)},
                {"fusion", to_string(cfg.model.fusion)},
                {"d_raw", cfg.model.d_raw},
                {"n_tokens", cfg.model.n_tokens},
                {"max_tokens", cfg.model.max_tokens}}}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = get_or(j, "epochs", cfg.epochs);
  cfg.batch_size = get_or(j, "batch_size", cfg.batch_size);
  cfg.learning_rate = get_or(j, "learning_rate", cfg.learning_rate);
  cfg.seed = get_or(j, "seed", cfg.seed);
  if (j.contains("objective")) cfg.objective = objective_from_string(j.at("objective").get<std::string>());
  cfg.temperature = get_or(j, "temperature", cfg.temperature);
  if (j.contains("infonce_scoring"))
    cfg.infonce_scoring = infonce_scoring_from_string(j.at("infonce_scoring").get<std::string>());
  if (j.contains("mcq")) {
    const json& m = j.at("mcq");
    cfg.mcq.subset_size = get_or(m, "subset_size", cfg.mcq.subset_size);
    cfg.mcq.max_candidates = get_or(m, "max_candidates", cfg.mcq.max_candidates);
    cfg.mcq.min_t2i_options = get_or(m, "min_t2i_options", cfg.mcq.min_t2i_options);
    cfg.mcq.use_mixed = get_or(m, "use_mixed", cfg.mcq.use_mixed);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    cfg.model.d = get_or(m, "d", cfg.model.d);
    cfg.model.heads = get_or(m, "heads", cfg.model.heads);
    cfg.model.mlp_hidden = get_or(m, "mlp_hidden", cfg.model.mlp_hidden);
    if (m.contains("freeze")) cfg.model.freeze = freeze_from_string(m.at("freeze").get<std::string>());
    if (m.contains("fusion")) cfg.model.fusion = fusion_from_string(m.at("fusion").get<std::string>());
    cfg.model.d_raw = get_or(m, "d_raw", cfg.model.d_raw);
    cfg.model.n_tokens = get_or(m, "n_tokens", cfg.model.n_tokens);
    cfg.model.max_tokens = get_or(m, "max_tokens", cfg.model.max_tokens);
  }
  return cfg;
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown_keys(j, "top level", {"seed", "data", "mcq", "model", "train", "paths", "ablate"});
  RunConfig cfg;
  cfg.seed = get_or(j, "seed", cfg.seed);

  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown_keys(d, "data",
                        {"n_samples", "diseases", "patches", "d_raw", "prevalence", "signal_amplitude",
                         "noise_std", "patches_per_finding", "train_fraction", "dir"});
    cfg.synth.n_samples = get_or(d, "n_samples", cfg.synth.n_samples);
    cfg.synth.diseases = get_or(d, "diseases", cfg.synth.diseases);
    cfg.synth.patches = get_or(d, "patches", cfg.synth.patches);
    cfg.synth.d_raw = get_or(d, "d_raw", cfg.synth.d_raw);
    if (d.contains("prevalence")) {
      if (d.at("prevalence").is_number()) {
        cfg.synth.prevalence.assign(static_cast<std::size_t>(cfg.synth.diseases),
                                    d.at("prevalence").get<double>());
      } else {
        cfg.synth.prevalence = d.at("prevalence").get<std::vector<double>>();
      }
    }
    cfg.synth.signal_amplitude = get_or(d, "signal_amplitude", cfg.synth.signal_amplitude);
    cfg.synth.noise_std = get_or(d, "noise_std", cfg.synth.noise_std);
    cfg.synth.patches_per_finding = get_or(d, "patches_per_finding", cfg.synth.patches_per_finding);
    cfg.train_fraction = get_or(d, "train_fraction", cfg.train_fraction);
    cfg.data_dir = get_or(d, "dir", cfg.data_dir);
  }

  json train_section = j.value("train", json::object());
  reject_unknown_keys(train_section, "train",
                      {"epochs", "batch_size", "learning_rate", "objective", "temperature",
                       "infonce_scoring"});
  if (j.contains("mcq")) {
    reject_unknown_keys(j.at("mcq"), "mcq",
                        {"subset_size", "max_candidates", "min_t2i_options", "use_mixed"});
    train_section["mcq"] = j.at("mcq");
  }
  if (j.contains("model")) {
    reject_unknown_keys(j.at("model"), "model",
                        {"d", "heads", "mlp_hidden", "freeze", "fusion"});
    train_section["model"] = j.at("model");
  }
  cfg.train = train_config_from_json(train_section);
  cfg.train.seed = cfg.seed;
  cfg.train.model.d_raw = cfg.synth.d_raw;

  if (j.contains("paths")) {
    const json& p = j.at("paths");
    reject_unknown_keys(p, "paths", {"checkpoint", "report", "embeddings"});
    cfg.checkpoint_path = get_or(p, "checkpoint", cfg.checkpoint_path);
    cfg.report_path = get_or(p, "report", cfg.report_path);
    cfg.embeddings_path = get_or(p, "embeddings", cfg.embeddings_path);
  }

  if (j.contains("ablate")) {
    const json& a = j.at("ablate");
    reject_unknown_keys(a, "ablate",
                        {"objectives", "fusions", "freezes", "use_mixed", "seeds", "out_dir"});
    if (a.contains("objectives")) {
      cfg.ablate.objectives.clear();
      for (const auto& v : a.at("objectives"))
        cfg.ablate.objectives.push_back(objective_from_string(v.get<std::string>()));
    }
    if (a.contains("fusions")) {
      cfg.ablate.fusions.clear();
      for (const auto& v : a.at("fusions"))
        cfg.ablate.fusions.push_back(fusion_from_string(v.get<std::string>()));
    }
    if (a.contains("freezes")) {
      cfg.ablate.freezes.clear();
      for (const auto& v : a.at("freezes"))
        cfg.ablate.freezes.push_back(freeze_from_string(v.get<std::string>()));
    }
    if (a.contains("use_mixed")) cfg.ablate.use_mixed = a.at("use_mixed").get<std::vector<bool>>();
    if (a.contains("seeds")) cfg.ablate.seeds = a.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.ablate.out_dir = get_or(a, "out_dir", cfg.ablate.out_dir);
  }
  if (cfg.ablate.seeds.empty()) cfg.ablate.seeds = {cfg.seed};

  cfg.synth.validate();
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
    throw std::invalid_argument("config: train_fraction must be in (0,1)");
  cfg.train.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config: " + path + " is not valid JSON: " + e.what());
  }
  for (const std::string& assignment : overrides) apply_override(j, assignment);
  return from_json(j);
}

json RunConfig::to_json() const {
  json train_j = train_config_to_json(train);
  const json mcq_j = train_j.at("mcq");
  json model_j = train_j.at("model");
  model_j.erase("d_raw");
  model_j.erase("n_tokens");
  model_j.erase("max_tokens");
  train_j.erase("mcq");
  train_j.erase("model");
  train_j.erase("seed");
  return json{{"seed", seed},
              {"data",
               {{"n_samples", synth.n_samples},
                {"diseases", synth.diseases},
                {"patches", synth.patches},
                {"d_raw", synth.d_raw},
                {"prevalence", synth.effective_prevalence()},
                {"signal_amplitude", synth.signal_amplitude},
                {"noise_std", synth.noise_std},
                {"patches_per_finding", synth.patches_per_finding},
                {"train_fraction", train_fraction},
                {"dir", data_dir}}},
              {"mcq", mcq_j},
              {"model", model_j},
              {"train", train_j},
              {"paths",
               {{"checkpoint", checkpoint_path},
                {"report", report_path},
                {"embeddings", embeddings_path}}}};
}

void apply_override(json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("config: --set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  std::string pointer = "/";
  for (const char c : key) pointer += (c == '.') ? '/' : c;
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings stay strings
  }
  try {
    j[json::json_pointer(pointer)] = parsed;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config: cannot set '" + key + "': " + e.what());
  }
}

}  // namespace bimcq
