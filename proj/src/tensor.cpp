#include "bimcq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "bimcq/kernels.hpp"

namespace bimcq {

namespace {

thread_local int g_no_grad_depth = 0;

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (const int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

void check_shape(const std::vector<int>& shape) {
  if (shape.empty() || shape.size() > 2)
    throw std::invalid_argument("tensor: rank must be 1 or 2, got " + shape_string(shape));
  for (const int d : shape)
    if (d <= 0) throw std::invalid_argument("tensor: nonpositive dimension in " + shape_string(shape));
}

std::vector<double>& grad_of(detail::TensorImpl& impl) {
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), 0.0);
  return impl.grad;
}

bool want_graph(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

Tensor make_output(std::vector<int> shape, bool track) {
  Tensor out = Tensor::zeros(std::move(shape));
  out.set_requires_grad(track);
  return out;
}

void attach(Tensor& out, std::vector<Tensor> parents, std::function<void(detail::TensorImpl&)> fn) {
  if (!out.requires_grad()) return;
  auto* impl = out.impl();
  impl->parents.reserve(parents.size());
  for (const Tensor& p : parents) impl->parents.push_back(p.impl_ptr());
  impl->backward_fn = std::move(fn);
}

void require_finite(const Tensor& x, const char* op) {
  for (const double v : x.data_vec())
    if (!std::isfinite(v)) throw std::runtime_error(std::string(op) + ": non-finite input value");
}

}  // namespace

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  check_shape(shape);
  Tensor t;
  t.impl_ = std::make_shared<detail::TensorImpl>();
  t.impl_->data.assign(shape_numel(shape), 0.0);
  t.impl_->shape = std::move(shape);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("tensor: " + shape_string(shape) + " does not hold " +
                                std::to_string(values.size()) + " values");
  Tensor t;
  t.impl_ = std::make_shared<detail::TensorImpl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(values);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::identity(int n) {
  Tensor t = zeros({n, n});
  for (int i = 0; i < n; ++i) t.data()[static_cast<std::size_t>(i) * n + i] = 1.0;
  return t;
}

double Tensor::value() const {
  if (!is_scalar()) throw std::runtime_error("Tensor::value: not a scalar, shape " + shape_string(shape()));
  return impl_->data[0];
}

std::vector<double>& Tensor::grad_buffer() { return grad_of(*impl_); }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    throw std::invalid_argument("matmul: expects rank-2 operands, got " + shape_string(a.shape()) +
                                " and " + shape_string(b.shape()));
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions do not match: " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_output({m, n}, want_graph({&a, &b}));
  kernels::matmul_nn(a.data(), b.data(), out.data(), m, k, n, false);
  attach(out, {a, b}, [m, k, n](detail::TensorImpl& o) {
    auto& pa = *o.parents[0];
    auto& pb = *o.parents[1];
    if (pa.requires_grad)  // dA += dY * B^T
      kernels::matmul_nt(o.grad.data(), pb.data.data(), grad_of(pa).data(), m, n, k, true);
    if (pb.requires_grad)  // dB += A^T * dY
      kernels::matmul_tn(pa.data.data(), o.grad.data(), grad_of(pb).data(), k, m, n, true);
  });
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    throw std::invalid_argument("matmul_nt: expects rank-2 operands, got " + shape_string(a.shape()) +
                                " and " + shape_string(b.shape()));
  if (a.cols() != b.cols())
    throw std::invalid_argument("matmul_nt: inner dimensions do not match: " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()) + " transposed");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out = make_output({m, n}, want_graph({&a, &b}));
  kernels::matmul_nt(a.data(), b.data(), out.data(), m, k, n, false);
  attach(out, {a, b}, [m, k, n](detail::TensorImpl& o) {
    auto& pa = *o.parents[0];
    auto& pb = *o.parents[1];
    if (pa.requires_grad)  // dA += dY * B
      kernels::matmul_nn(o.grad.data(), pb.data.data(), grad_of(pa).data(), m, n, k, true);
    if (pb.requires_grad)  // dB += dY^T * A
      kernels::matmul_tn(o.grad.data(), pa.data.data(), grad_of(pb).data(), n, m, k, true);
  });
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("add: shape mismatch: " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  Tensor out = make_output(a.shape(), want_graph({&a, &b}));
  const std::size_t n = a.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
  attach(out, {a, b}, [n](detail::TensorImpl& o) {
    for (auto& parent : o.parents) {
      if (!parent->requires_grad) continue;
      auto& g = grad_of(*parent);
      for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i];
    }
  });
  return out;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.numel() != static_cast<std::size_t>(x.cols()))
    throw std::invalid_argument("add_bias: bias " + shape_string(bias.shape()) +
                                " does not match columns of " + shape_string(x.shape()));
  const int rows = x.rows(), cols = x.cols();
  Tensor out = make_output(x.shape(), want_graph({&x, &bias}));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.data()[static_cast<std::size_t>(r) * cols + c] =
          x.data()[static_cast<std::size_t>(r) * cols + c] + bias.data()[c];
  attach(out, {x, bias}, [rows, cols](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    auto& pb = *o.parents[1];
    if (px.requires_grad) {
      auto& g = grad_of(px);
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = grad_of(pb);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g[c] += o.grad[static_cast<std::size_t>(r) * cols + c];
    }
  });
  return out;
}

Tensor scale(const Tensor& x, double s) {
  Tensor out = make_output(x.shape(), want_graph({&x}));
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * s;
  attach(out, {x}, [n, s](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i] * s;
  });
  return out;
}

Tensor tanh_act(const Tensor& x) {
  Tensor out = make_output(x.shape(), want_graph({&x}));
  kernels::tanh_forward(x.data(), out.data(), x.numel());
  attach(out, {x}, [](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    for (std::size_t i = 0; i < o.data.size(); ++i) g[i] += o.grad[i] * (1.0 - o.data[i] * o.data[i]);
  });
  return out;
}

Tensor softmax(const Tensor& x) {
  require_finite(x, "softmax");
  const int rows = x.rows(), cols = x.cols();
  Tensor out = make_output(x.shape(), want_graph({&x}));
  kernels::softmax_rows(x.data(), out.data(), rows, cols);
  attach(out, {x}, [rows, cols](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    for (int r = 0; r < rows; ++r) {
      const double* y = o.data.data() + static_cast<std::size_t>(r) * cols;
      const double* dy = o.grad.data() + static_cast<std::size_t>(r) * cols;
      double dot = 0.0;
      for (int j = 0; j < cols; ++j) dot += y[j] * dy[j];
      double* gx = g.data() + static_cast<std::size_t>(r) * cols;
      for (int j = 0; j < cols; ++j) gx[j] += y[j] * (dy[j] - dot);
    }
  });
  return out;
}

Tensor cross_entropy(const Tensor& logits, int target) {
  if (logits.rows() != 1)
    throw std::invalid_argument("cross_entropy: expects a logit vector, got " +
                                shape_string(logits.shape()));
  const int n = static_cast<int>(logits.numel());
  if (target < 0 || target >= n)
    throw std::out_of_range("cross_entropy: target " + std::to_string(target) +
                            " out of range for " + std::to_string(n) + " logits");
  require_finite(logits, "cross_entropy");
  const double* x = logits.data();
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
  const double lse = mx + std::log(sum);
  Tensor out = make_output({1}, want_graph({&logits}));
  out.data()[0] = lse - x[target];
  attach(out, {logits}, [n, target, mx, sum](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    const double dl = o.grad[0];
    for (int i = 0; i < n; ++i) {
      const double p = std::exp(px.data[i] - mx) / sum;  // softmax(logits)
      g[i] += dl * (p - (i == target ? 1.0 : 0.0));
    }
  });
  return out;
}

Tensor sum(const Tensor& x) {
  Tensor out = make_output({1}, want_graph({&x}));
  out.data()[0] = std::accumulate(x.data(), x.data() + x.numel(), 0.0);
  attach(out, {x}, [](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    for (double& v : g) v += o.grad[0];
  });
  return out;
}

Tensor mean_rows(const Tensor& x) {
  if (x.shape().size() != 2)
    throw std::invalid_argument("mean_rows: expects rank-2 input, got " + shape_string(x.shape()));
  const int rows = x.rows(), cols = x.cols();
  Tensor out = make_output({1, cols}, want_graph({&x}));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out.data()[c] += x.data()[static_cast<std::size_t>(r) * cols + c];
  const double inv = 1.0 / rows;
  for (int c = 0; c < cols; ++c) out.data()[c] *= inv;
  attach(out, {x}, [rows, cols, inv](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) g[static_cast<std::size_t>(r) * cols + c] += o.grad[c] * inv;
  });
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  const int cols = parts[0].cols();
  int rows = 0;
  bool track = false;
  for (const Tensor& p : parts) {
    if (p.cols() != cols)
      throw std::invalid_argument("concat_rows: column mismatch: " + shape_string(p.shape()));
    rows += p.rows();
    track = track || (grad_enabled() && p.requires_grad());
  }
  Tensor out = make_output({rows, cols}, track);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data(), p.data() + p.numel(), out.data() + off);
    off += p.numel();
  }
  attach(out, parts, [](detail::TensorImpl& o) {
    std::size_t off2 = 0;
    for (auto& parent : o.parents) {
      const std::size_t n = parent->data.size();
      if (parent->requires_grad) {
        auto& g = grad_of(*parent);
        for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[off2 + i];
      }
      off2 += n;
    }
  });
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  const int rows = parts[0].rows();
  int cols = 0;
  bool track = false;
  std::vector<int> widths;
  widths.reserve(parts.size());
  for (const Tensor& p : parts) {
    if (p.rows() != rows)
      throw std::invalid_argument("concat_cols: row mismatch: " + shape_string(p.shape()));
    widths.push_back(p.cols());
    cols += p.cols();
    track = track || (grad_enabled() && p.requires_grad());
  }
  Tensor out = make_output({rows, cols}, track);
  int coff = 0;
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    const Tensor& p = parts[pi];
    for (int r = 0; r < rows; ++r)
      std::copy(p.data() + static_cast<std::size_t>(r) * widths[pi],
                p.data() + static_cast<std::size_t>(r + 1) * widths[pi],
                out.data() + static_cast<std::size_t>(r) * cols + coff);
    coff += widths[pi];
  }
  attach(out, parts, [rows, cols, widths](detail::TensorImpl& o) {
    int coff2 = 0;
    for (std::size_t pi = 0; pi < o.parents.size(); ++pi) {
      auto& parent = *o.parents[pi];
      if (parent.requires_grad) {
        auto& g = grad_of(parent);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < widths[pi]; ++c)
            g[static_cast<std::size_t>(r) * widths[pi] + c] +=
                o.grad[static_cast<std::size_t>(r) * cols + coff2 + c];
      }
      coff2 += widths[pi];
    }
  });
  return out;
}

Tensor slice_cols(const Tensor& x, int begin, int len) {
  if (x.shape().size() != 2)
    throw std::invalid_argument("slice_cols: expects rank-2 input, got " + shape_string(x.shape()));
  if (begin < 0 || len <= 0 || begin + len > x.cols())
    throw std::invalid_argument("slice_cols: range [" + std::to_string(begin) + "," +
                                std::to_string(begin + len) + ") invalid for " +
                                shape_string(x.shape()));
  const int rows = x.rows(), cols = x.cols();
  Tensor out = make_output({rows, len}, want_graph({&x}));
  for (int r = 0; r < rows; ++r)
    std::copy(x.data() + static_cast<std::size_t>(r) * cols + begin,
              x.data() + static_cast<std::size_t>(r) * cols + begin + len,
              out.data() + static_cast<std::size_t>(r) * len);
  attach(out, {x}, [rows, cols, begin, len](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < len; ++c)
        g[static_cast<std::size_t>(r) * cols + begin + c] += o.grad[static_cast<std::size_t>(r) * len + c];
  });
  return out;
}

Tensor slice_rows(const Tensor& x, int begin, int len) {
  if (x.shape().size() != 2)
    throw std::invalid_argument("slice_rows: expects rank-2 input, got " + shape_string(x.shape()));
  if (begin < 0 || len <= 0 || begin + len > x.rows())
    throw std::invalid_argument("slice_rows: range [" + std::to_string(begin) + "," +
                                std::to_string(begin + len) + ") invalid for " +
                                shape_string(x.shape()));
  const int cols = x.cols();
  Tensor out = make_output({len, cols}, want_graph({&x}));
  std::copy(x.data() + static_cast<std::size_t>(begin) * cols,
            x.data() + static_cast<std::size_t>(begin + len) * cols, out.data());
  attach(out, {x}, [begin, cols](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    const std::size_t off = static_cast<std::size_t>(begin) * cols;
    for (std::size_t i = 0; i < o.grad.size(); ++i) g[off + i] += o.grad[i];
  });
  return out;
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  if (table.shape().size() != 2)
    throw std::invalid_argument("gather_rows: expects rank-2 table, got " + shape_string(table.shape()));
  if (ids.empty()) throw std::invalid_argument("gather_rows: empty id list");
  const int cols = table.cols();
  for (const int id : ids)
    if (id < 0 || id >= table.rows())
      throw std::out_of_range("gather_rows: id " + std::to_string(id) + " out of range for " +
                              shape_string(table.shape()));
  Tensor out = make_output({static_cast<int>(ids.size()), cols}, want_graph({&table}));
  for (std::size_t r = 0; r < ids.size(); ++r)
    std::copy(table.data() + static_cast<std::size_t>(ids[r]) * cols,
              table.data() + static_cast<std::size_t>(ids[r] + 1) * cols, out.data() + r * cols);
  attach(out, {table}, [ids, cols](detail::TensorImpl& o) {
    auto& pt = *o.parents[0];
    if (!pt.requires_grad) return;
    auto& g = grad_of(pt);
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (int c = 0; c < cols; ++c)
        g[static_cast<std::size_t>(ids[r]) * cols + c] += o.grad[r * cols + c];
  });
  return out;
}

Tensor stack_scalars(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw std::invalid_argument("stack_scalars: empty list");
  bool track = false;
  for (const Tensor& x : xs) {
    if (!x.is_scalar())
      throw std::invalid_argument("stack_scalars: element has shape " + shape_string(x.shape()));
    track = track || (grad_enabled() && x.requires_grad());
  }
  Tensor out = make_output({static_cast<int>(xs.size())}, track);
  for (std::size_t i = 0; i < xs.size(); ++i) out.data()[i] = xs[i].data()[0];
  attach(out, xs, [](detail::TensorImpl& o) {
    for (std::size_t i = 0; i < o.parents.size(); ++i) {
      auto& parent = *o.parents[i];
      if (parent.requires_grad) grad_of(parent)[0] += o.grad[i];
    }
  });
  return out;
}

Tensor l2_normalize_rows(const Tensor& x) {
  const int rows = x.rows(), cols = x.cols();
  Tensor out = make_output(x.shape(), want_graph({&x}));
  std::vector<double> norms(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * cols;
    double sq = 0.0;
    for (int c = 0; c < cols; ++c) sq += xr[c] * xr[c];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw std::runtime_error("l2_normalize_rows: zero row " + std::to_string(r));
    norms[static_cast<std::size_t>(r)] = norm;
    double* yr = out.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) yr[c] = xr[c] / norm;
  }
  attach(out, {x}, [rows, cols, norms](detail::TensorImpl& o) {
    auto& px = *o.parents[0];
    if (!px.requires_grad) return;
    auto& g = grad_of(px);
    for (int r = 0; r < rows; ++r) {
      const double* y = o.data.data() + static_cast<std::size_t>(r) * cols;
      const double* dy = o.grad.data() + static_cast<std::size_t>(r) * cols;
      double dot = 0.0;
      for (int c = 0; c < cols; ++c) dot += y[c] * dy[c];
      const double inv = 1.0 / norms[static_cast<std::size_t>(r)];
      double* gx = g.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) gx[c] += (dy[c] - dot * y[c]) * inv;
    }
  });
  return out;
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor& w_out, const Tensor& b_out, int heads) {
  const int d = q.cols();
  if (heads <= 0 || d % heads != 0)
    throw std::invalid_argument("scaled_dot_attention: width " + std::to_string(d) +
                                " not divisible by " + std::to_string(heads) + " heads");
  if (q.rows() != 1)
    throw std::invalid_argument("scaled_dot_attention: query must be a single row, got " +
                                shape_string(q.shape()));
  if (k.cols() != d || v.cols() != d || k.rows() != v.rows())
    throw std::invalid_argument("scaled_dot_attention: key/value shapes " + shape_string(k.shape()) +
                                "/" + shape_string(v.shape()) + " do not match query width " +
                                std::to_string(d));
  const int head_dim = d / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Tensor qh = slice_cols(q, h * head_dim, head_dim);
    const Tensor kh = slice_cols(k, h * head_dim, head_dim);
    const Tensor vh = slice_cols(v, h * head_dim, head_dim);
    const Tensor weights = softmax(scale(matmul_nt(qh, kh), inv_scale));
    head_outputs.push_back(matmul(weights, vh));
  }
  const Tensor merged = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  return add_bias(matmul(merged, w_out), b_out);
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be a scalar, got " +
                                (loss.defined() ? shape_string(loss.shape()) : std::string("null")));
  // iterative post-order DFS for a topological order
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> seen;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
  stack.emplace_back(loss.impl(), 0);
  seen.insert(loss.impl());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::TensorImpl* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // intermediate grads are scratch for this invocation; only leaves
  // (parameters, constants) accumulate across calls
  for (detail::TensorImpl* node : order)
    if (node->backward_fn && !node->grad.empty()) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  grad_of(*loss.impl())[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorImpl* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
}

}  // namespace bimcq
