#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bimcq {

namespace detail {

struct TensorImpl {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily the first time backward touches it
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward_fn;  // accumulates into parents' grads
};

}  // namespace detail

// Dense row-major float64 tensor participating in a dynamic reverse-mode
// graph. A Tensor is a cheap shared handle; ops record parents and a
// backward closure on the output when gradients are enabled. Shapes are
// rank 1 ([n]) or rank 2 ([m,n]).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor identity(int n);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }
  bool is_scalar() const { return numel() == 1; }
  // row/col view valid for rank 1 and 2: cols is the last axis
  int cols() const { return impl_->shape.back(); }
  int rows() const { return static_cast<int>(numel()) / cols(); }

  double value() const;  // scalar accessor
  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& data_vec() { return impl_->data; }
  const std::vector<double>& data_vec() const { return impl_->data; }
  double at(int i, int j) const { return impl_->data[static_cast<std::size_t>(i) * cols() + j]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }
  bool has_grad() const { return !impl_->grad.empty(); }
  const std::vector<double>& grad() const { return impl_->grad; }
  std::vector<double>& grad_buffer();  // allocates zeros on first use
  void zero_grad();

  detail::TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<detail::TensorImpl>& impl_ptr() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

// While alive on a thread, ops on that thread do not record the graph.
// Used for forward-only scoring (evaluation may run image loops in
// parallel against a frozen parameter snapshot).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

std::string shape_string(const std::vector<int>& shape);

// ---- recorded operations ----

Tensor matmul(const Tensor& a, const Tensor& b);     // [m,k] x [k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m,k] x [n,k]^T
Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor add_bias(const Tensor& x, const Tensor& bias);  // rows of x + bias[n]
Tensor scale(const Tensor& x, double s);
Tensor tanh_act(const Tensor& x);
Tensor softmax(const Tensor& x);  // along the last axis, max-stabilized
Tensor cross_entropy(const Tensor& logits, int target);  // rank-1 logits -> scalar
Tensor sum(const Tensor& x);      // -> scalar
Tensor mean_rows(const Tensor& x);  // [s,d] -> [1,d]
Tensor concat_rows(const std::vector<Tensor>& parts);  // same cols
Tensor concat_cols(const std::vector<Tensor>& parts);  // same rows
Tensor slice_cols(const Tensor& x, int begin, int len);
Tensor slice_rows(const Tensor& x, int begin, int len);
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);
Tensor stack_scalars(const std::vector<Tensor>& xs);  // -> [n]
Tensor l2_normalize_rows(const Tensor& x);

// Multi-head scaled dot-product attention for a single query row.
// q [1,d], k/v [s,d]; per head scale 1/sqrt(d/heads); concatenated head
// outputs go through the learned output projection w_out [d,d] + b_out [d].
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& w_out, const Tensor& b_out, int heads);

// Populates grad buffers of every requires_grad ancestor of `loss` with
// d(loss)/d(ancestor). Repeated calls without zeroing accumulate.
void backward(const Tensor& loss);

}  // namespace bimcq
