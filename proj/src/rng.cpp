#include "bimcq/rng.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bimcq {

namespace {

// splitmix64 finalizer; good avalanche, cheap, stable across platforms
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name) {
  return mix64(seed ^ mix64(hash_name(name)));
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  return mix64(mix_seed(seed, name) ^ mix64(index));
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view name, std::uint64_t a, std::uint64_t b) {
  return mix64(mix_seed(seed, name, a) ^ mix64(b + 0x51ed270b758f94e3ULL));
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::vector<int> Rng::sample_indices(int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("Rng::sample_indices: k out of range");
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  // partial Fisher-Yates: first k slots end up a uniform k-subset
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(uniform_int(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string Rng::state_string() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::restore_state(const std::string& state) {
  std::istringstream in(state);
  in >> engine_;
  if (!in) throw std::runtime_error("Rng::restore_state: malformed state string");
}

}  // namespace bimcq
