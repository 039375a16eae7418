#pragma once

#include <cstdint>
#include <vector>

#include "bimcq/tensor.hpp"

namespace bimcq {

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over a fixed parameter list. Moment buffers
// live here, one pair per parameter, same shape. step() reads grads and
// leaves them untouched; the caller zeroes between steps.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  std::vector<Tensor> params_;
  std::vector<Moments> moments_;
  std::int64_t step_count_ = 0;
  AdamConfig cfg_;
};

}  // namespace bimcq
