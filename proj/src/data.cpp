#include "bimcq/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "bimcq/rng.hpp"

namespace bimcq {

namespace {

using nlohmann::json;

const char* kFindingPool[] = {
    "atelectasis", "cardiomegaly", "effusion",      "infiltration", "mass",
    "nodule",      "pneumonia",    "pneumothorax",  "consolidation", "edema",
    "emphysema",   "fibrosis",     "pleural_thickening", "hernia",
};

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

void write_f64_file(const std::string& path, const std::vector<SynthImage>& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  for (const SynthImage& img : images)
    out.write(reinterpret_cast<const char*>(img.patches.data()),
              static_cast<std::streamsize>(img.patches.size() * sizeof(double)));
  if (!out) throw std::runtime_error("dataset: short write to " + path);
}

std::vector<SynthImage> read_f64_file(const std::string& path, const std::vector<std::string>& ids,
                                      int n_patches, int d_raw) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot read " + path);
  const std::size_t per_image = static_cast<std::size_t>(n_patches) * d_raw;
  std::vector<SynthImage> images(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    images[i].id = ids[i];
    images[i].n_patches = n_patches;
    images[i].d_raw = d_raw;
    images[i].patches.resize(per_image);
    in.read(reinterpret_cast<char*>(images[i].patches.data()),
            static_cast<std::streamsize>(per_image * sizeof(double)));
    if (!in) throw std::runtime_error("dataset: " + path + " truncated at image " + std::to_string(i));
  }
  char extra;
  if (in.read(&extra, 1)) throw std::runtime_error("dataset: " + path + " has trailing bytes");
  return images;
}

json config_to_json(const SynthConfig& cfg) {
  return json{{"diseases", cfg.diseases},
              {"patches", cfg.patches},
              {"d_raw", cfg.d_raw},
              {"prevalence", cfg.effective_prevalence()},
              {"signal_amplitude", cfg.signal_amplitude},
              {"noise_std", cfg.noise_std},
              {"patches_per_finding", cfg.patches_per_finding},
              {"n_samples", cfg.n_samples}};
}

SynthConfig config_from_json(const json& j) {
  SynthConfig cfg;
  cfg.diseases = j.at("diseases").get<int>();
  cfg.patches = j.at("patches").get<int>();
  cfg.d_raw = j.at("d_raw").get<int>();
  cfg.prevalence = j.at("prevalence").get<std::vector<double>>();
  cfg.signal_amplitude = j.at("signal_amplitude").get<double>();
  cfg.noise_std = j.at("noise_std").get<double>();
  cfg.patches_per_finding = j.at("patches_per_finding").get<int>();
  cfg.n_samples = j.at("n_samples").get<int>();
  return cfg;
}

json split_to_json(const Dataset& part, const std::string& file) {
  json labels = json::array();
  json ids = json::array();
  for (const LabelVector& lv : part.labels) {
    json row = json::array();
    for (const std::uint8_t b : lv.bits) row.push_back(static_cast<int>(b));
    labels.push_back(std::move(row));
  }
  for (const SynthImage& img : part.images) ids.push_back(img.id);
  return json{{"file", file}, {"count", part.size()}, {"ids", ids}, {"labels", labels}};
}

Dataset split_from_json(const json& j, const std::string& dir, const DiseaseVocab& vocab,
                        int n_patches, int d_raw) {
  Dataset part;
  part.vocab = vocab;
  const auto ids = j.at("ids").get<std::vector<std::string>>();
  if (static_cast<int>(ids.size()) != j.at("count").get<int>())
    throw std::runtime_error("dataset: id count does not match declared count");
  part.images = read_f64_file(dir + "/" + j.at("file").get<std::string>(), ids, n_patches, d_raw);
  for (const auto& row : j.at("labels")) {
    LabelVector lv(vocab.size());
    if (static_cast<int>(row.size()) != vocab.size())
      throw std::runtime_error("dataset: label row width does not match vocabulary");
    for (int c = 0; c < vocab.size(); ++c) lv.set(c, row[static_cast<std::size_t>(c)].get<int>() != 0);
    part.labels.push_back(std::move(lv));
  }
  if (part.labels.size() != part.images.size())
    throw std::runtime_error("dataset: label count does not match image count");
  return part;
}

}  // namespace

DiseaseVocab::DiseaseVocab(std::vector<std::string> names) {
  names_.reserve(names.size());
  for (std::string& raw : names) {
    std::string name = lowercase(trim(raw));
    if (name.empty()) throw std::invalid_argument("vocab: empty disease name");
    if (name.find_first_of(" \t\n") != std::string::npos)
      throw std::invalid_argument("vocab: disease name '" + name + "' contains whitespace");
    if (std::find(names_.begin(), names_.end(), name) != names_.end())
      throw std::invalid_argument("vocab: duplicate disease name '" + name + "'");
    names_.push_back(std::move(name));
  }
}

int DiseaseVocab::index_of(const std::string& name) const {
  const std::string needle = lowercase(trim(name));
  const auto it = std::find(names_.begin(), names_.end(), needle);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

DiseaseVocab DiseaseVocab::default_vocab(int d) {
  std::vector<std::string> names;
  const int pool = static_cast<int>(std::size(kFindingPool));
  for (int i = 0; i < d; ++i)
    names.push_back(i < pool ? kFindingPool[i] : "finding_" + std::to_string(i + 1));
  return DiseaseVocab(std::move(names));
}

bool LabelVector::any() const {
  return std::any_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
}

bool LabelVector::all() const {
  return std::all_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
}

void SynthConfig::validate() const {
  if (diseases < 1) throw std::invalid_argument("synth config: diseases must be >= 1");
  if (patches < 1) throw std::invalid_argument("synth config: patches must be >= 1");
  if (d_raw < 1) throw std::invalid_argument("synth config: d_raw must be >= 1");
  if (diseases > d_raw)
    throw std::invalid_argument("synth config: diseases must be <= d_raw for orthonormal directions");
  if (!prevalence.empty() && static_cast<int>(prevalence.size()) != diseases)
    throw std::invalid_argument("synth config: prevalence must have one entry per disease");
  for (const double p : effective_prevalence())
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("synth config: prevalence must be in (0,1)");
  if (!(signal_amplitude >= 0.0))
    throw std::invalid_argument("synth config: signal_amplitude must be >= 0");
  if (noise_std < 0.0) throw std::invalid_argument("synth config: noise_std must be >= 0");
  if (patches_per_finding < 1 || patches_per_finding > patches)
    throw std::invalid_argument("synth config: patches_per_finding must be in [1, patches]");
  if (n_samples < 0) throw std::invalid_argument("synth config: n_samples must be >= 0");
}

std::vector<double> SynthConfig::effective_prevalence() const {
  if (!prevalence.empty()) return prevalence;
  return std::vector<double>(static_cast<std::size_t>(diseases), 0.3);
}

std::vector<std::vector<double>> disease_directions(const SynthConfig& cfg, std::uint64_t seed) {
  Rng rng(mix_seed(seed, "directions"));
  std::vector<std::vector<double>> dirs;
  dirs.reserve(static_cast<std::size_t>(cfg.diseases));
  for (int c = 0; c < cfg.diseases; ++c) {
    std::vector<double> v(static_cast<std::size_t>(cfg.d_raw));
    // Gram-Schmidt against previous directions; redraw on near-degeneracy
    for (int attempt = 0;; ++attempt) {
      for (double& x : v) x = rng.normal();
      for (const auto& u : dirs) {
        double dot = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * u[i];
      }
      const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      if (norm > 1e-8) {
        for (double& x : v) x /= norm;
        break;
      }
      if (attempt > 16) throw std::runtime_error("synth: failed to draw orthonormal directions");
    }
    dirs.push_back(std::move(v));
  }
  return dirs;
}

Dataset generate_dataset(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto dirs = disease_directions(cfg, seed);
  const auto prevalence = cfg.effective_prevalence();

  Dataset out;
  out.vocab = DiseaseVocab::default_vocab(cfg.diseases);
  out.images.resize(static_cast<std::size_t>(cfg.n_samples));
  out.labels.resize(static_cast<std::size_t>(cfg.n_samples));

  for (int i = 0; i < cfg.n_samples; ++i) {
    Rng rng(mix_seed(seed, "sample", static_cast<std::uint64_t>(i)));
    LabelVector lv(cfg.diseases);
    for (int c = 0; c < cfg.diseases; ++c) lv.set(c, rng.bernoulli(prevalence[static_cast<std::size_t>(c)]));

    SynthImage img;
    std::ostringstream id;
    id << "synth_" << std::setw(6) << std::setfill('0') << i;
    img.id = id.str();
    img.n_patches = cfg.patches;
    img.d_raw = cfg.d_raw;
    img.patches.assign(static_cast<std::size_t>(cfg.patches) * cfg.d_raw, 0.0);

    for (int c = 0; c < cfg.diseases; ++c) {
      if (!lv.present(c)) continue;
      const auto rows = rng.sample_indices(cfg.patches, cfg.patches_per_finding);
      for (const int r : rows) {
        double* row = img.patches.data() + static_cast<std::size_t>(r) * cfg.d_raw;
        for (int x = 0; x < cfg.d_raw; ++x)
          row[x] += cfg.signal_amplitude * dirs[static_cast<std::size_t>(c)][static_cast<std::size_t>(x)];
      }
    }
    if (cfg.noise_std > 0.0)
      for (double& x : img.patches) x += cfg.noise_std * rng.normal();

    out.images[static_cast<std::size_t>(i)] = std::move(img);
    out.labels[static_cast<std::size_t>(i)] = std::move(lv);
  }
  return out;
}

std::pair<std::vector<std::string>, std::vector<LabelVector>> load_labels(const std::string& path,
                                                                          const DiseaseVocab& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("labels: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("labels: " + path + " is empty (no header)");
  const auto header = split_on(line, ',');
  int idx_col = -1, label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string h = lowercase(trim(header[i]));
    if (h == "image index") idx_col = static_cast<int>(i);
    if (h == "finding labels") label_col = static_cast<int>(i);
  }
  if (idx_col < 0 || label_col < 0)
    throw std::runtime_error("labels: header must contain 'Image Index' and 'Finding Labels' columns");

  std::vector<std::string> ids;
  std::vector<LabelVector> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_on(line, ',');
    if (static_cast<int>(fields.size()) <= std::max(idx_col, label_col))
      throw std::runtime_error("labels: line " + std::to_string(line_no) + ": expected at least " +
                               std::to_string(std::max(idx_col, label_col) + 1) + " columns");
    const std::string id = trim(fields[static_cast<std::size_t>(idx_col)]);
    const std::string finding = trim(fields[static_cast<std::size_t>(label_col)]);
    if (id.empty() || finding.empty())
      throw std::runtime_error("labels: line " + std::to_string(line_no) + ": empty field");

    LabelVector lv(vocab.size());
    if (lowercase(finding) != "no finding") {
      for (const std::string& raw : split_on(finding, '|')) {
        const std::string token = trim(raw);
        const int c = vocab.index_of(token);
        if (c < 0)
          throw std::runtime_error("labels: line " + std::to_string(line_no) +
                                   ": unknown disease label '" + token + "'");
        lv.set(c, true);
      }
    }
    ids.push_back(id);
    labels.push_back(std::move(lv));
  }
  return {std::move(ids), std::move(labels)};
}

std::pair<std::vector<int>, std::vector<int>> split(int n, std::pair<double, double> fractions,
                                                    std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("split: n must be >= 0");
  if (std::abs(fractions.first + fractions.second - 1.0) > 1e-9)
    throw std::invalid_argument("split: fractions must sum to 1");
  if (fractions.first < 0.0 || fractions.second < 0.0)
    throw std::invalid_argument("split: fractions must be nonnegative");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, "split"));
  rng.shuffle(order);
  // floor-then-remainder: train gets floor(n * fraction), test the rest
  const int n_train = static_cast<int>(std::floor(static_cast<double>(n) * fractions.first));
  std::vector<int> train(order.begin(), order.begin() + n_train);
  std::vector<int> test(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

void save_dataset(const StoredDataset& stored, const std::string& dir) {
  std::filesystem::create_directories(dir);
  json meta{{"format", "bimcq-dataset"},
            {"version", 1},
            {"seed", stored.seed},
            {"train_fraction", stored.train_fraction},
            {"config", config_to_json(stored.config)},
            {"vocab", stored.train.vocab.names()},
            {"patch_shape", {stored.config.patches, stored.config.d_raw}},
            {"splits",
             {{"train", split_to_json(stored.train, "train.f64")},
              {"test", split_to_json(stored.test, "test.f64")}}}};
  write_f64_file(dir + "/train.f64", stored.train.images);
  write_f64_file(dir + "/test.f64", stored.test.images);
  std::ofstream out(dir + "/meta.json");
  if (!out) throw std::runtime_error("dataset: cannot write " + dir + "/meta.json");
  out << meta.dump(2) << "\n";
}

StoredDataset load_dataset(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) throw std::runtime_error("dataset: cannot open " + dir + "/meta.json");
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw std::runtime_error("dataset: malformed meta.json: " + std::string(e.what()));
  }
  if (meta.value("format", "") != "bimcq-dataset")
    throw std::runtime_error("dataset: " + dir + " is not a dataset directory");
  if (meta.value("version", 0) != 1)
    throw std::runtime_error("dataset: unsupported version in " + dir);

  StoredDataset stored;
  stored.config = config_from_json(meta.at("config"));
  stored.seed = meta.at("seed").get<std::uint64_t>();
  stored.train_fraction = meta.value("train_fraction", 0.0);
  const DiseaseVocab vocab(meta.at("vocab").get<std::vector<std::string>>());
  stored.train = split_from_json(meta.at("splits").at("train"), dir, vocab, stored.config.patches,
                                 stored.config.d_raw);
  stored.test = split_from_json(meta.at("splits").at("test"), dir, vocab, stored.config.patches,
                                stored.config.d_raw);
  return stored;
}

}  // namespace bimcq
