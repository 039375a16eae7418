#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace bimcq {

// Seed mixing for named substreams. All randomness in a run flows from one
// top-level seed; substreams are derived by hashing the seed with a stream
// name and optional indices, so changing one consumer never shifts another.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view name);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);
std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t a, std::uint64_t b);

// mt19937_64 with hand-rolled distributions. The standard pins the engine's
// output sequence but not uniform_real/normal_distribution, so we implement
// our own to keep runs bitwise reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform double in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller; one value per call, cached pair unused
  // on purpose so the consumption pattern stays obvious.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // uniform integer in [0, n), rejection sampled to avoid modulo bias
  std::uint64_t uniform_int(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // uniformly chosen k-subset of [0, n), returned sorted ascending
  std::vector<int> sample_indices(int n, int k);

  std::string state_string() const;
  void restore_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace bimcq
