#pragma once

#include <vector>

#include "cscn/gemm.hpp"
#include "cscn/tensor.hpp"

namespace cscn {

// Gradients of one layer application; shapes mirror the forward arguments.
template <typename T>
struct LayerGradsT {
  TensorT<T> grad_weights;
  TensorT<T> grad_bias;
  TensorT<T> grad_input;
};

using LayerGrads = LayerGradsT<float>;

// out[i] = sum_j weights[i][j] * x[j] + bias[i]. An empty bias tensor means
// the layer is a pure linear map.
template <typename T>
TensorT<T> fc_forward(const TensorT<T>& x, const TensorT<T>& weights,
                      const TensorT<T>& bias) {
  if (x.rank() != 1)
    throw DimensionError("fc_forward: input must be a vector, got " + x.shape().str());
  if (weights.rank() != 2 || weights.extent(1) != x.size())
    throw DimensionError("fc_forward: weights " + weights.shape().str() +
                         " incompatible with input " + x.shape().str());
  const std::size_t m = weights.extent(0);
  const std::size_t n = weights.extent(1);
  if (!bias.empty() && bias.size() != m)
    throw DimensionError("fc_forward: bias " + bias.shape().str() + " vs " +
                         std::to_string(m) + " rows");
  TensorT<T> out(Shape{m});
  for (std::size_t i = 0; i < m; ++i)
    out[i] = detail::dot(weights.data() + i * n, x.data(), n) +
             (bias.empty() ? T{0} : bias[i]);
  return out;
}

// grad_weights[i][j] = grad_out[i] * x[j]; grad_bias = grad_out;
// grad_input[j] = sum_i weights[i][j] * grad_out[i].
// grad_bias mirrors the forward call: empty when the layer had no bias.
template <typename T>
LayerGradsT<T> fc_backward(const TensorT<T>& grad_out, const TensorT<T>& cached_x,
                           const TensorT<T>& weights, bool has_bias = true) {
  if (weights.rank() != 2 || grad_out.rank() != 1 || cached_x.rank() != 1 ||
      grad_out.size() != weights.extent(0) || cached_x.size() != weights.extent(1))
    throw DimensionError("fc_backward: grad " + grad_out.shape().str() + ", input " +
                         cached_x.shape().str() + " inconsistent with weights " +
                         weights.shape().str());
  const std::size_t m = weights.extent(0);
  const std::size_t n = weights.extent(1);

  LayerGradsT<T> g;
  g.grad_weights = TensorT<T>(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const T go = grad_out[i];
    T* row = g.grad_weights.data() + i * n;
    const T* xp = cached_x.data();
    for (std::size_t j = 0; j < n; ++j) row[j] = go * xp[j];
  }
  if (has_bias) g.grad_bias = grad_out;
  g.grad_input = TensorT<T>(Shape{n});
  T* gi = g.grad_input.data();
  for (std::size_t i = 0; i < m; ++i) {
    const T go = grad_out[i];
    const T* wrow = weights.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) gi[j] += go * wrow[j];
  }
  return g;
}

namespace detail {

// Per-thread patch-matrix scratch, grown on demand.
template <typename T>
std::vector<T>& conv_scratch(std::size_t need, int which) {
  thread_local std::vector<T> buf[2];
  auto& b = buf[which];
  if (b.size() < need) b.resize(need);
  return b;
}

template <typename T>
void check_conv_args(const TensorT<T>& input, const TensorT<T>& kernels,
                     const TensorT<T>& bias, const char* where) {
  if (input.rank() != 3)
    throw DimensionError(std::string(where) + ": input must be CxHxW, got " +
                         input.shape().str());
  if (kernels.rank() != 4 || kernels.extent(2) != kernels.extent(3))
    throw DimensionError(std::string(where) + ": kernels must be OxCxkxk, got " +
                         kernels.shape().str());
  if (kernels.extent(2) % 2 == 0)
    throw ConfigError(std::string(where) + ": kernel size must be odd, got " +
                      std::to_string(kernels.extent(2)));
  if (kernels.extent(1) != input.extent(0))
    throw DimensionError(std::string(where) + ": kernel channels " +
                         kernels.shape().str() + " vs input " + input.shape().str());
  if (!bias.empty() && bias.size() != kernels.extent(0))
    throw DimensionError(std::string(where) + ": bias " + bias.shape().str() + " vs " +
                         std::to_string(kernels.extent(0)) + " kernels");
}

}  // namespace detail

// Stride-1 convolution with (k-1)/2 zero padding; the output keeps the input's
// spatial size. Realized as im2col feeding the matrix-multiply kernel.
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& kernels,
                          const TensorT<T>& bias) {
  detail::check_conv_args(input, kernels, bias, "conv2d_forward");
  const std::size_t C = input.extent(0), H = input.extent(1), W = input.extent(2);
  const std::size_t O = kernels.extent(0), k = kernels.extent(2);
  const std::size_t hw = H * W, rows = C * k * k;

  const T* col = input.data();  // k == 1: the patch matrix is the input itself
  if (k != 1) {
    auto& buf = detail::conv_scratch<T>(rows * hw, 0);
    detail::im2col(input.data(), C, H, W, k, buf.data());
    col = buf.data();
  }

  TensorT<T> out(Shape{O, H, W});
  detail::gemm(O, rows, hw, kernels.data(), col, out.data());
  if (!bias.empty())
    for (std::size_t o = 0; o < O; ++o) {
      T* orow = out.data() + o * hw;
      const T b = bias[o];
      for (std::size_t p = 0; p < hw; ++p) orow[p] += b;
    }
  return out;
}

// grad_kernels = cross-correlation of the padded input with grad_out;
// grad_bias[o] = sum over grad_out channel o; grad_input = the patch products
// scattered back through the padding (full correlation with rotated kernels,
// cropped to the input size).
template <typename T>
LayerGradsT<T> conv2d_backward(const TensorT<T>& grad_out, const TensorT<T>& cached_input,
                               const TensorT<T>& kernels) {
  detail::check_conv_args(cached_input, kernels, TensorT<T>{}, "conv2d_backward");
  const std::size_t C = cached_input.extent(0), H = cached_input.extent(1),
                    W = cached_input.extent(2);
  const std::size_t O = kernels.extent(0), k = kernels.extent(2);
  if (grad_out.rank() != 3 || grad_out.extent(0) != O || grad_out.extent(1) != H ||
      grad_out.extent(2) != W)
    throw DimensionError("conv2d_backward: grad_out " + grad_out.shape().str() +
                         " vs expected " + Shape{O, H, W}.str());
  const std::size_t hw = H * W, rows = C * k * k;

  const T* col = cached_input.data();
  if (k != 1) {
    auto& buf = detail::conv_scratch<T>(rows * hw, 0);
    detail::im2col(cached_input.data(), C, H, W, k, buf.data());
    col = buf.data();
  }

  LayerGradsT<T> g;
  g.grad_bias = TensorT<T>(Shape{O});
  for (std::size_t o = 0; o < O; ++o) {
    const T* gr = grad_out.data() + o * hw;
    T s{0};
    for (std::size_t p = 0; p < hw; ++p) s += gr[p];
    g.grad_bias[o] = s;
  }

  g.grad_weights = TensorT<T>(Shape{O, C, k, k});
  detail::gemm_abt(O, hw, rows, grad_out.data(), col, g.grad_weights.data());

  g.grad_input = TensorT<T>(Shape{C, H, W});
  if (k == 1) {
    detail::gemm_atb(rows, O, hw, kernels.data(), grad_out.data(), g.grad_input.data());
  } else {
    auto& gcol = detail::conv_scratch<T>(rows * hw, 1);
    detail::gemm_atb(rows, O, hw, kernels.data(), grad_out.data(), gcol.data());
    detail::col2im_add(gcol.data(), C, H, W, k, g.grad_input.data());
  }
  return g;
}

// max(0, x) elementwise.
template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> out = x;
  for (auto& v : out)
    if (v < T{0}) v = T{0};
  return out;
}

// Passes gradient where x > 0; zero where x <= 0 (ties at zero give zero).
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& cached_x) {
  check_same_shape(grad_out, cached_x, "relu_backward");
  TensorT<T> g(grad_out.shape());
  const T* go = grad_out.data();
  const T* xp = cached_x.data();
  T* gp = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) gp[i] = xp[i] > T{0} ? go[i] : T{0};
  return g;
}

template <typename T>
struct MseResultT {
  T loss;
  TensorT<T> grad;
};

// loss = (1/N) sum (pred - target)^2 over all N elements; grad wrt pred.
template <typename T>
MseResultT<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  check_same_shape(pred, target, "mse_loss");
  const std::size_t n = pred.size();
  MseResultT<T> r;
  r.grad = TensorT<T>(pred.shape());
  const T* pp = pred.data();
  const T* tp = target.data();
  T* gp = r.grad.data();
  const T scale = T{2} / static_cast<T>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T d = pp[i] - tp[i];
    acc += static_cast<double>(d) * static_cast<double>(d);
    gp[i] = scale * d;
  }
  r.loss = static_cast<T>(acc / static_cast<double>(n));
  return r;
}

}  // namespace cscn
