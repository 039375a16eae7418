#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bimcq/tensor.hpp"

namespace test_helpers {

// Central finite differences against the recorded backward pass. `rebuild`
// must construct a fresh scalar loss from the live parameter tensors, so
// perturbing a parameter element changes the rebuilt loss.
inline void check_gradients(const std::vector<bimcq::Tensor>& params,
                            const std::function<bimcq::Tensor()>& rebuild, double step = 1e-4,
                            double tol = 1e-4) {
  using bimcq::Tensor;
  for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
  bimcq::Tensor loss = rebuild();
  bimcq::backward(loss);

  std::vector<std::vector<double>> analytic;
  for (const Tensor& p : params)
    analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(p.numel(), 0.0));

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    for (std::size_t j = 0; j < p.numel(); ++j) {
      const double saved = p.data()[j];
      p.data()[j] = saved + step;
      const double plus = rebuild().value();
      p.data()[j] = saved - step;
      const double minus = rebuild().value();
      p.data()[j] = saved;
      const double fd = (plus - minus) / (2.0 * step);
      const double a = analytic[pi][j];
      const double err = std::abs(a - fd);
      const double scale = std::max({1.0, std::abs(a), std::abs(fd)});
      if (err > tol * scale)
        throw std::runtime_error("gradient mismatch at param " + std::to_string(pi) + " elem " +
                                 std::to_string(j) + ": analytic " + std::to_string(a) +
                                 " vs finite-difference " + std::to_string(fd));
    }
  }
}

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() /
           ("bimcq_test_" + std::to_string(rng()) + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str(const std::string& sub = "") const {
    return sub.empty() ? path.string() : (path / sub).string();
  }
};

inline std::vector<double> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<double> out;
  double v;
  while (in.read(reinterpret_cast<char*>(&v), sizeof(v))) out.push_back(v);
  return out;
}

inline std::string read_file_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace test_helpers
