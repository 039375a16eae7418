#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bimcq/adam.hpp"
#include "bimcq/rng.hpp"
#include "bimcq/tensor.hpp"

using namespace bimcq;

TEST_CASE("zero gradients leave parameters unchanged") {
  Tensor p = Tensor::from({4}, {1.0, -2.0, 3.0, 0.5}, true);
  const std::vector<double> before = p.data_vec();
  Adam adam({p}, AdamConfig{0.01, 0.9, 0.999, 1e-8});
  p.grad_buffer();  // allocated, all zeros
  for (int i = 0; i < 5; ++i) adam.step();
  CHECK(p.data_vec() == before);
  CHECK(adam.step_count() == 5);
}

TEST_CASE("first step moves each coordinate by about the learning rate") {
  const double lr = 0.01;
  for (const double g : {1.0, -0.5, 250.0, 1e-3}) {
    Tensor p = Tensor::from({3}, {0.0, 1.0, -1.0}, true);
    auto& grad = p.grad_buffer();
    for (double& v : grad) v = g;
    const std::vector<double> before = p.data_vec();
    Adam adam({p}, AdamConfig{lr, 0.9, 0.999, 1e-8});
    adam.step();
    for (int i = 0; i < 3; ++i) {
      const double delta = p.data()[i] - before[static_cast<std::size_t>(i)];
      // bias-corrected first step: delta = -lr * g / (|g| + eps)
      CHECK(std::abs(delta) == doctest::Approx(lr).epsilon(1e-4));
      CHECK(std::signbit(delta) == !std::signbit(g));
    }
  }
}

TEST_CASE("gradients are left untouched by step") {
  Tensor p = Tensor::from({2}, {1.0, 2.0}, true);
  auto& grad = p.grad_buffer();
  grad[0] = 0.3;
  grad[1] = -0.6;
  Adam adam({p}, AdamConfig{0.01, 0.9, 0.999, 1e-8});
  adam.step();
  CHECK(p.grad()[0] == 0.3);
  CHECK(p.grad()[1] == -0.6);
  adam.zero_grad();
  CHECK(p.grad()[0] == 0.0);
}

TEST_CASE("200 steps on the squared norm descend monotonically after warm-up") {
  Rng rng(5);
  Tensor w = Tensor::zeros({8}, true);
  for (std::size_t i = 0; i < w.numel(); ++i) w.data()[i] = rng.uniform(-1.0, 1.0);
  Adam adam({w}, AdamConfig{1e-2, 0.9, 0.999, 1e-8});

  const auto norm = [&] {
    double sq = 0;
    for (std::size_t i = 0; i < w.numel(); ++i) sq += w.data()[i] * w.data()[i];
    return std::sqrt(sq);
  };

  double prev = norm();
  for (int step = 1; step <= 200; ++step) {
    adam.zero_grad();
    auto& g = w.grad_buffer();
    for (std::size_t i = 0; i < w.numel(); ++i) g[i] = 2.0 * w.data()[i];  // d/dw ||w||^2
    adam.step();
    const double current = norm();
    if (step > 10) CHECK(current < prev);
    prev = current;
  }
  CHECK(prev < 0.5);
}
