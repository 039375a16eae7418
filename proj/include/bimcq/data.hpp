#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bimcq {

// Ordered disease vocabulary. Names are lowercase-normalized on
// construction; duplicates, empties and names with whitespace are rejected.
class DiseaseVocab {
 public:
  DiseaseVocab() = default;
  explicit DiseaseVocab(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& names() const { return names_; }
  // -1 when absent; lookup is lowercase-normalized
  int index_of(const std::string& name) const;

  // first `d` names from a fixed pool of chest findings, then synthetic ones
  static DiseaseVocab default_vocab(int d);

 private:
  std::vector<std::string> names_;
};

// Multi-hot annotation over a fixed vocabulary.
struct LabelVector {
  std::vector<std::uint8_t> bits;

  LabelVector() = default;
  explicit LabelVector(int d) : bits(static_cast<std::size_t>(d), 0) {}

  int size() const { return static_cast<int>(bits.size()); }
  bool present(int i) const { return bits.at(static_cast<std::size_t>(i)) != 0; }
  void set(int i, bool v) { bits.at(static_cast<std::size_t>(i)) = v ? 1 : 0; }
  bool any() const;
  bool all() const;
  bool operator==(const LabelVector&) const = default;
};

// Patch-grid stand-in for an image: P rows of raw visual evidence.
struct SynthImage {
  std::string id;
  int n_patches = 0;
  int d_raw = 0;
  std::vector<double> patches;  // row-major P x d_raw

  const double* patch_row(int p) const { return patches.data() + static_cast<std::size_t>(p) * d_raw; }
};

struct SynthConfig {
  int diseases = 4;
  int patches = 6;
  int d_raw = 16;
  std::vector<double> prevalence;  // length `diseases`, each in (0,1); default 0.3
  double signal_amplitude = 3.0;
  double noise_std = 0.5;
  int patches_per_finding = 2;
  int n_samples = 2000;

  void validate() const;  // throws invalid_argument naming the offending field
  std::vector<double> effective_prevalence() const;
};

struct Dataset {
  DiseaseVocab vocab;
  std::vector<SynthImage> images;
  std::vector<LabelVector> labels;

  int size() const { return static_cast<int>(images.size()); }
};

// Synthetic multi-label dataset. Each disease is present independently with
// its prevalence; presence adds signal_amplitude * u_c (fixed orthonormal
// per-disease direction drawn once from the seed) to patches_per_finding
// random patch rows; Gaussian noise everywhere. Fully determined by
// (cfg, seed); samples use independent substreams so generation could run
// in parallel without changing the output.
Dataset generate_dataset(const SynthConfig& cfg, std::uint64_t seed);

// The per-disease unit directions for a given (cfg, seed); exposed so tests
// can verify signal recoverability.
std::vector<std::vector<double>> disease_directions(const SynthConfig& cfg, std::uint64_t seed);

// ChestXray14-style label CSV: header row with `Image Index` and
// `Finding Labels` columns, labels `|`-separated, literal `No Finding`
// meaning the all-false vector. Unknown disease names are an error naming
// the line and token.
std::pair<std::vector<std::string>, std::vector<LabelVector>> load_labels(const std::string& path,
                                                                          const DiseaseVocab& vocab);

// Deterministic disjoint covering partition. Train gets floor(n * fraction),
// the remainder goes to test; both sides returned sorted.
std::pair<std::vector<int>, std::vector<int>> split(int n, std::pair<double, double> fractions,
                                                    std::uint64_t seed);

// On-disk layout: <dir>/meta.json plus one flat little-endian float64 blob
// per split (train.f64 / test.f64), shapes and labels recorded in the meta.
struct StoredDataset {
  SynthConfig config;
  std::uint64_t seed = 0;
  double train_fraction = 0.0;
  Dataset train;
  Dataset test;
};

void save_dataset(const StoredDataset& stored, const std::string& dir);
StoredDataset load_dataset(const std::string& dir);

}  // namespace bimcq
