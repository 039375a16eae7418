#include "bimcq/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace bimcq {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  moments_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    moments_[i].first.assign(params_[i].numel(), 0.0);
    moments_[i].second.assign(params_[i].numel(), 0.0);
  }
}

void Adam::step() {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    Moments& mom = moments_[i];
    if (mom.first.size() != p.numel())
      throw std::runtime_error("adam: parameter " + std::to_string(i) + " changed shape since construction");
    if (!p.has_grad()) continue;  // no gradient ever reached this parameter
    const std::vector<double>& g = p.grad();
    double* w = p.data();
    for (std::size_t j = 0; j < g.size(); ++j) {
      mom.first[j] = cfg_.beta1 * mom.first[j] + (1.0 - cfg_.beta1) * g[j];
      mom.second[j] = cfg_.beta2 * mom.second[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double m_hat = mom.first[j] / bc1;
      const double v_hat = mom.second[j] / bc2;
      w[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace bimcq
