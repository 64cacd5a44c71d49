#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cscn/layers.hpp"
#include "cscn/rng.hpp"
#include "cscn/sensing.hpp"
#include "cscn/tensor.hpp"

namespace cscn {

enum class Architecture : std::uint8_t { csrnet = 1, asrnet = 2 };

inline const char* to_string(Architecture a) {
  return a == Architecture::csrnet ? "csrnet" : "asrnet";
}

inline Architecture architecture_from_string(const std::string& s) {
  if (s == "csrnet") return Architecture::csrnet;
  if (s == "asrnet") return Architecture::asrnet;
  throw ConfigError("unknown architecture '" + s + "' (want csrnet or asrnet)");
}

// Three convolutional layers; ReLU follows layers 1 and 2, never layer 3 so
// the stack can emit negative corrections. Layer 1 consumes one channel,
// layer 3 emits one.
struct ConvStackSpec {
  std::array<std::size_t, 3> channels{64, 32, 1};  // feature maps per layer
  std::array<std::size_t, 3> kernels{11, 1, 7};

  static ConvStackSpec standard() { return {}; }
  // Small enough for exhaustive finite-difference checks.
  static ConvStackSpec compact() { return {{8, 4, 1}, {5, 1, 3}}; }

  std::size_t in_channels(std::size_t layer) const {
    return layer == 0 ? 1 : channels[layer - 1];
  }

  void validate() const {
    if (channels[2] != 1)
      throw ConfigError("ConvStackSpec: last layer must emit one feature map");
    for (std::size_t l = 0; l < 3; ++l) {
      if (channels[l] == 0) throw ConfigError("ConvStackSpec: channel counts must be positive");
      if (kernels[l] % 2 == 0)
        throw ConfigError("ConvStackSpec: kernel sizes must be odd, got " +
                          std::to_string(kernels[l]));
    }
  }

  bool operator==(const ConvStackSpec&) const = default;
};

template <typename T>
struct ConvStackParamsT {
  std::array<TensorT<T>, 3> kernels;  // O x C x k x k
  std::array<TensorT<T>, 3> biases;   // O

  ConvStackSpec spec() const {
    ConvStackSpec s;
    for (std::size_t l = 0; l < 3; ++l) {
      s.channels[l] = kernels[l].extent(0);
      s.kernels[l] = kernels[l].extent(2);
    }
    return s;
  }
};

template <typename T>
struct ConvStackCacheT {
  TensorT<T> input;                     // 1 x B x B
  std::array<TensorT<T>, 2> preact;     // conv1/conv2 outputs before ReLU
  std::array<TensorT<T>, 2> activated;  // inputs to conv2/conv3
};

template <typename T>
struct ConvStackGradsT {
  std::array<TensorT<T>, 3> kernels;
  std::array<TensorT<T>, 3> biases;
  TensorT<T> input;
};

// conv -> ReLU -> conv -> ReLU -> conv, spatial size preserved throughout.
template <typename T>
std::pair<TensorT<T>, ConvStackCacheT<T>> conv_stack_forward(
    const TensorT<T>& input, const ConvStackParamsT<T>& params) {
  ConvStackCacheT<T> cache;
  cache.input = input;
  cache.preact[0] = conv2d_forward(input, params.kernels[0], params.biases[0]);
  cache.activated[0] = relu(cache.preact[0]);
  cache.preact[1] = conv2d_forward(cache.activated[0], params.kernels[1], params.biases[1]);
  cache.activated[1] = relu(cache.preact[1]);
  TensorT<T> out = conv2d_forward(cache.activated[1], params.kernels[2], params.biases[2]);
  return {std::move(out), std::move(cache)};
}

// Forward without retaining intermediates; reconstruction path.
template <typename T>
TensorT<T> conv_stack_infer(const TensorT<T>& input, const ConvStackParamsT<T>& params) {
  TensorT<T> h = conv2d_forward(input, params.kernels[0], params.biases[0]);
  for (auto& v : h)
    if (v < T{0}) v = T{0};
  h = conv2d_forward(h, params.kernels[1], params.biases[1]);
  for (auto& v : h)
    if (v < T{0}) v = T{0};
  return conv2d_forward(h, params.kernels[2], params.biases[2]);
}

template <typename T>
ConvStackGradsT<T> conv_stack_backward(const ConvStackParamsT<T>& params,
                                       const ConvStackCacheT<T>& cache,
                                       const TensorT<T>& grad_out) {
  if (cache.input.rank() != 3 || cache.activated[0].shape() != cache.preact[0].shape() ||
      cache.activated[1].shape() != cache.preact[1].shape() ||
      cache.input.extent(0) != params.kernels[0].extent(1) ||
      cache.preact[0].extent(0) != params.kernels[0].extent(0) ||
      cache.preact[1].extent(0) != params.kernels[1].extent(0))
    throw ContractError("conv_stack_backward: cache does not match these parameters");

  ConvStackGradsT<T> g;
  LayerGradsT<T> l3 = conv2d_backward(grad_out, cache.activated[1], params.kernels[2]);
  g.kernels[2] = std::move(l3.grad_weights);
  g.biases[2] = std::move(l3.grad_bias);
  TensorT<T> gp = relu_backward(l3.grad_input, cache.preact[1]);

  LayerGradsT<T> l2 = conv2d_backward(gp, cache.activated[0], params.kernels[1]);
  g.kernels[1] = std::move(l2.grad_weights);
  g.biases[1] = std::move(l2.grad_bias);
  gp = relu_backward(l2.grad_input, cache.preact[0]);

  LayerGradsT<T> l1 = conv2d_backward(gp, cache.input, params.kernels[0]);
  g.kernels[0] = std::move(l1.grad_weights);
  g.biases[0] = std::move(l1.grad_bias);
  g.input = std::move(l1.grad_input);
  return g;
}

// ---------------------------------------------------------------------------
// CSRNet: measurement -> learned initial reconstruction (FC) -> deep stage ->
// residual stage. Both conv stages refine additively, so zero weights leave
// the preliminary image untouched.

template <typename T>
struct CsrNetParamsT {
  SensingConfig config;
  std::uint64_t matrix_seed = 0;  // the fixed sampling matrix this model was trained against
  TensorT<T> initial_weights;     // B^2 x m
  TensorT<T> initial_bias;        // B^2
  ConvStackParamsT<T> deep_stack;
  ConvStackParamsT<T> residual_stack;
};

template <typename T>
struct CsrNetCacheT {
  TensorT<T> measurement;
  ConvStackCacheT<T> deep;      // input is the FC image
  ConvStackCacheT<T> residual;  // input is the deep-stage output
};

template <typename T>
struct CsrNetGradsT {
  TensorT<T> initial_weights;
  TensorT<T> initial_bias;
  ConvStackGradsT<T> deep;
  ConvStackGradsT<T> residual;
};

using CsrNetParams = CsrNetParamsT<float>;

template <typename T>
std::pair<TensorT<T>, CsrNetCacheT<T>> csrnet_forward(const TensorT<T>& y,
                                                      const CsrNetParamsT<T>& params) {
  const std::size_t B = params.config.block_size;
  if (y.size() != params.initial_weights.extent(1))
    throw DimensionError("csrnet_forward: measurement " + y.shape().str() +
                         " vs expected length " +
                         std::to_string(params.initial_weights.extent(1)));
  CsrNetCacheT<T> cache;
  cache.measurement = y;

  TensorT<T> x0 = fc_forward(y, params.initial_weights, params.initial_bias)
                      .reshaped(Shape{1, B, B});
  auto [deep_corr, deep_cache] = conv_stack_forward(x0, params.deep_stack);
  TensorT<T> x1 = add(x0, deep_corr);
  auto [res_corr, res_cache] = conv_stack_forward(x1, params.residual_stack);
  TensorT<T> out = add(x1, res_corr).reshaped(Shape{B, B});

  cache.deep = std::move(deep_cache);
  cache.residual = std::move(res_cache);
  return {std::move(out), std::move(cache)};
}

template <typename T>
TensorT<T> csrnet_infer(const TensorT<T>& y, const CsrNetParamsT<T>& params) {
  const std::size_t B = params.config.block_size;
  TensorT<T> x0 = fc_forward(y, params.initial_weights, params.initial_bias)
                      .reshaped(Shape{1, B, B});
  TensorT<T> x1 = add(x0, conv_stack_infer(x0, params.deep_stack));
  return add(x1, conv_stack_infer(x1, params.residual_stack)).reshaped(Shape{B, B});
}

template <typename T>
CsrNetGradsT<T> csrnet_backward(const CsrNetParamsT<T>& params, const CsrNetCacheT<T>& cache,
                                const TensorT<T>& grad_output) {
  const std::size_t B = params.config.block_size;
  if (grad_output.size() != B * B)
    throw DimensionError("csrnet_backward: grad " + grad_output.shape().str() +
                         " vs block " + std::to_string(B) + "x" + std::to_string(B));
  if (cache.measurement.size() != params.initial_weights.extent(1) ||
      cache.deep.input.shape() != Shape{1, B, B})
    throw ContractError("csrnet_backward: cache does not match these parameters");

  TensorT<T> g = grad_output.reshaped(Shape{1, B, B});

  // skip connections: each stage input receives the downstream gradient plus
  // the stack's own input gradient
  ConvStackGradsT<T> res_g = conv_stack_backward(params.residual_stack, cache.residual, g);
  TensorT<T> g_x1 = add(g, res_g.input);
  ConvStackGradsT<T> deep_g = conv_stack_backward(params.deep_stack, cache.deep, g_x1);
  TensorT<T> g_x0 = add(g_x1, deep_g.input);

  LayerGradsT<T> fc_g = fc_backward(g_x0.reshaped(Shape{B * B}), cache.measurement,
                                    params.initial_weights);

  CsrNetGradsT<T> grads;
  grads.initial_weights = std::move(fc_g.grad_weights);
  grads.initial_bias = std::move(fc_g.grad_bias);
  grads.deep = std::move(deep_g);
  grads.residual = std::move(res_g);
  return grads;
}

// ---------------------------------------------------------------------------
// ASRNet: learned sampling (FC, bias-free by default), learned initial
// reconstruction (FC), residual stage with additive skip. The sampling and
// reconstruction halves are usable independently.

template <typename T>
struct AsrNetParamsT {
  SensingConfig config;
  TensorT<T> sampling_weights;  // m x B^2
  TensorT<T> sampling_bias;     // empty unless explicitly enabled
  TensorT<T> initial_weights;   // B^2 x m
  TensorT<T> initial_bias;      // B^2
  ConvStackParamsT<T> residual_stack;
};

template <typename T>
struct AsrNetCacheT {
  TensorT<T> block_vec;    // vectorized input block
  TensorT<T> measurement;  // sampling output
  ConvStackCacheT<T> residual;
};

template <typename T>
struct AsrNetGradsT {
  TensorT<T> sampling_weights;
  TensorT<T> sampling_bias;  // empty when the layer has no bias
  TensorT<T> initial_weights;
  TensorT<T> initial_bias;
  ConvStackGradsT<T> residual;
  TensorT<T> input;  // gradient wrt the input block
};

using AsrNetParams = AsrNetParamsT<float>;

template <typename T>
struct AsrNetForwardT {
  TensorT<T> reconstruction;  // B x B
  TensorT<T> measurement;     // length m
  AsrNetCacheT<T> cache;
};

template <typename T>
TensorT<T> asrnet_sample(const TensorT<T>& block, const AsrNetParamsT<T>& params) {
  const std::size_t B = params.config.block_size;
  if (block.size() != B * B)
    throw DimensionError("asrnet_sample: block " + block.shape().str() + " vs " +
                         std::to_string(B) + "x" + std::to_string(B));
  return fc_forward(block.reshaped(Shape{B * B}), params.sampling_weights,
                    params.sampling_bias);
}

template <typename T>
TensorT<T> asrnet_reconstruct(const TensorT<T>& y, const AsrNetParamsT<T>& params) {
  const std::size_t B = params.config.block_size;
  TensorT<T> x0 = fc_forward(y, params.initial_weights, params.initial_bias)
                      .reshaped(Shape{1, B, B});
  return add(x0, conv_stack_infer(x0, params.residual_stack)).reshaped(Shape{B, B});
}

template <typename T>
AsrNetForwardT<T> asrnet_forward(const TensorT<T>& block, const AsrNetParamsT<T>& params) {
  const std::size_t B = params.config.block_size;
  AsrNetForwardT<T> r;
  r.cache.block_vec = block.reshaped(Shape{B * B});
  r.measurement = asrnet_sample(block, params);
  r.cache.measurement = r.measurement;

  TensorT<T> x0 = fc_forward(r.measurement, params.initial_weights, params.initial_bias)
                      .reshaped(Shape{1, B, B});
  auto [res_corr, res_cache] = conv_stack_forward(x0, params.residual_stack);
  r.reconstruction = add(x0, res_corr).reshaped(Shape{B, B});
  r.cache.residual = std::move(res_cache);
  return r;
}

template <typename T>
AsrNetGradsT<T> asrnet_backward(const AsrNetParamsT<T>& params, const AsrNetCacheT<T>& cache,
                                const TensorT<T>& grad_output) {
  const std::size_t B = params.config.block_size;
  if (grad_output.size() != B * B)
    throw DimensionError("asrnet_backward: grad " + grad_output.shape().str() + " vs block " +
                         std::to_string(B) + "x" + std::to_string(B));
  if (cache.block_vec.size() != params.sampling_weights.extent(1) ||
      cache.measurement.size() != params.sampling_weights.extent(0) ||
      cache.residual.input.shape() != Shape{1, B, B})
    throw ContractError("asrnet_backward: cache does not match these parameters");

  TensorT<T> g = grad_output.reshaped(Shape{1, B, B});
  ConvStackGradsT<T> res_g = conv_stack_backward(params.residual_stack, cache.residual, g);
  TensorT<T> g_x0 = add(g, res_g.input).reshaped(Shape{B * B});

  LayerGradsT<T> fc_init = fc_backward(g_x0, cache.measurement, params.initial_weights);
  LayerGradsT<T> fc_samp = fc_backward(fc_init.grad_input, cache.block_vec,
                                       params.sampling_weights,
                                       /*has_bias=*/!params.sampling_bias.empty());

  AsrNetGradsT<T> grads;
  grads.sampling_weights = std::move(fc_samp.grad_weights);
  grads.sampling_bias = std::move(fc_samp.grad_bias);
  grads.initial_weights = std::move(fc_init.grad_weights);
  grads.initial_bias = std::move(fc_init.grad_bias);
  grads.residual = std::move(res_g);
  grads.input = std::move(fc_samp.grad_input);
  return grads;
}

// ---------------------------------------------------------------------------
// Initialization: He-normal conv kernels, 1/sqrt(fan_in) FC weights, zero
// biases. Draw order is fixed (layers in network order, row-major within a
// tensor), so a seed pins every parameter.

template <typename T>
ConvStackParamsT<T> init_conv_stack(const ConvStackSpec& spec, SeededRng& rng) {
  spec.validate();
  ConvStackParamsT<T> p;
  for (std::size_t l = 0; l < 3; ++l) {
    const std::size_t out = spec.channels[l];
    const std::size_t in = spec.in_channels(l);
    const std::size_t k = spec.kernels[l];
    const double stddev = std::sqrt(2.0 / static_cast<double>(in * k * k));
    p.kernels[l] = random_normal_tensor<T>(Shape{out, in, k, k}, rng, stddev);
    p.biases[l] = TensorT<T>(Shape{out});
  }
  return p;
}

template <typename T>
CsrNetParamsT<T> init_csrnet(const SensingConfig& config, const ConvStackSpec& spec,
                             std::uint64_t matrix_seed, std::uint64_t init_seed) {
  const std::size_t n = config.n(), m = config.m();
  SeededRng rng(init_seed);
  CsrNetParamsT<T> p;
  p.config = config;
  p.matrix_seed = matrix_seed;
  p.initial_weights =
      random_normal_tensor<T>(Shape{n, m}, rng, std::sqrt(1.0 / static_cast<double>(m)));
  p.initial_bias = TensorT<T>(Shape{n});
  p.deep_stack = init_conv_stack<T>(spec, rng);
  p.residual_stack = init_conv_stack<T>(spec, rng);
  return p;
}

template <typename T>
AsrNetParamsT<T> init_asrnet(const SensingConfig& config, const ConvStackSpec& spec,
                             std::uint64_t init_seed, bool with_sampling_bias = false) {
  const std::size_t n = config.n(), m = config.m();
  SeededRng rng(init_seed);
  AsrNetParamsT<T> p;
  p.config = config;
  p.sampling_weights =
      random_normal_tensor<T>(Shape{m, n}, rng, std::sqrt(1.0 / static_cast<double>(n)));
  if (with_sampling_bias) p.sampling_bias = TensorT<T>(Shape{m});
  p.initial_weights =
      random_normal_tensor<T>(Shape{n, m}, rng, std::sqrt(1.0 / static_cast<double>(m)));
  p.initial_bias = TensorT<T>(Shape{n});
  p.residual_stack = init_conv_stack<T>(spec, rng);
  return p;
}

// ---------------------------------------------------------------------------
// Multiply-accumulates per reconstructed block. The ASRNet sampling FC is
// acquisition, not reconstruction, and is excluded.

inline std::uint64_t conv_stack_flops(const SensingConfig& config, const ConvStackSpec& spec) {
  const std::uint64_t positions = config.n();
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < 3; ++l)
    total += static_cast<std::uint64_t>(spec.channels[l]) * spec.in_channels(l) *
             spec.kernels[l] * spec.kernels[l] * positions;
  return total;
}

inline std::uint64_t flop_count(Architecture arch, const SensingConfig& config,
                                const ConvStackSpec& spec = ConvStackSpec::standard()) {
  const std::uint64_t fc = static_cast<std::uint64_t>(config.m()) * config.n();
  const std::uint64_t stack = conv_stack_flops(config, spec);
  return arch == Architecture::csrnet ? fc + 2 * stack : fc + stack;
}

// ---------------------------------------------------------------------------
// Ordered parameter/gradient views for the optimizer. Empty tensors (absent
// sampling bias) are kept in place so the two lists always align.

template <typename T>
std::vector<TensorT<T>*> parameter_list(ConvStackParamsT<T>& p) {
  return {&p.kernels[0], &p.biases[0], &p.kernels[1], &p.biases[1], &p.kernels[2], &p.biases[2]};
}

template <typename T>
std::vector<TensorT<T>*> parameter_list(CsrNetParamsT<T>& p) {
  std::vector<TensorT<T>*> v{&p.initial_weights, &p.initial_bias};
  for (auto* t : parameter_list(p.deep_stack)) v.push_back(t);
  for (auto* t : parameter_list(p.residual_stack)) v.push_back(t);
  return v;
}

template <typename T>
std::vector<TensorT<T>*> parameter_list(AsrNetParamsT<T>& p) {
  std::vector<TensorT<T>*> v{&p.sampling_weights, &p.sampling_bias, &p.initial_weights,
                             &p.initial_bias};
  for (auto* t : parameter_list(p.residual_stack)) v.push_back(t);
  return v;
}

template <typename T>
std::vector<const TensorT<T>*> gradient_list(const ConvStackGradsT<T>& g) {
  return {&g.kernels[0], &g.biases[0], &g.kernels[1], &g.biases[1], &g.kernels[2], &g.biases[2]};
}

template <typename T>
std::vector<const TensorT<T>*> gradient_list(const CsrNetGradsT<T>& g) {
  std::vector<const TensorT<T>*> v{&g.initial_weights, &g.initial_bias};
  for (auto* t : gradient_list(g.deep)) v.push_back(t);
  for (auto* t : gradient_list(g.residual)) v.push_back(t);
  return v;
}

template <typename T>
std::vector<const TensorT<T>*> gradient_list(const AsrNetGradsT<T>& g) {
  std::vector<const TensorT<T>*> v{&g.sampling_weights, &g.sampling_bias, &g.initial_weights,
                                   &g.initial_bias};
  for (auto* t : gradient_list(g.residual)) v.push_back(t);
  return v;
}

}  // namespace cscn
