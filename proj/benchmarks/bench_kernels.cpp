#include <benchmark/benchmark.h>

#include "cscn/evaluation.hpp"
#include "cscn/layers.hpp"
#include "cscn/models.hpp"
#include "cscn/rng.hpp"

using namespace cscn;

namespace {

Tensor noise(Shape shape, std::uint64_t seed, double stddev = 1.0) {
  SeededRng rng(seed);
  return random_normal_tensor<float>(shape, rng, stddev);
}

void BM_FcForward256(benchmark::State& state) {
  Tensor x = noise(Shape{256}, 1);
  Tensor w = noise(Shape{1024, 256}, 2, 0.06);
  Tensor b(Shape{1024});
  for (auto _ : state) {
    Tensor out = fc_forward(x, w, b);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_FcForward256);

void BM_Conv2dForward_64x11(benchmark::State& state) {
  Tensor in = noise(Shape{1, 32, 32}, 3);
  Tensor k = noise(Shape{64, 1, 11, 11}, 4, 0.13);
  Tensor b(Shape{64});
  for (auto _ : state) {
    Tensor out = conv2d_forward(in, k, b);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Conv2dForward_64x11);

void BM_Conv2dBackward_64x11(benchmark::State& state) {
  Tensor in = noise(Shape{1, 32, 32}, 5);
  Tensor k = noise(Shape{64, 1, 11, 11}, 6, 0.13);
  Tensor go = noise(Shape{64, 32, 32}, 7);
  for (auto _ : state) {
    LayerGrads g = conv2d_backward(go, in, k);
    benchmark::DoNotOptimize(g.grad_weights.data());
  }
}
BENCHMARK(BM_Conv2dBackward_64x11);

void BM_ConvStackForward(benchmark::State& state) {
  SeededRng rng(8);
  auto stack = init_conv_stack<float>(ConvStackSpec::standard(), rng);
  Tensor in = noise(Shape{1, 32, 32}, 9);
  for (auto _ : state) {
    Tensor out = conv_stack_infer(in, stack);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ConvStackForward);

void BM_CsrnetBlockInfer(benchmark::State& state) {
  const SensingConfig sc(32, 0.25);
  CsrNetParams net = init_csrnet<float>(sc, ConvStackSpec::standard(), 7, 10);
  Tensor y = noise(Shape{sc.m()}, 11);
  for (auto _ : state) {
    Tensor out = csrnet_infer(y, net);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_CsrnetBlockInfer);

void BM_AsrnetBlockInfer(benchmark::State& state) {
  const SensingConfig sc(32, 0.25);
  AsrNetParams net = init_asrnet<float>(sc, ConvStackSpec::standard(), 12);
  Tensor y = noise(Shape{sc.m()}, 13);
  for (auto _ : state) {
    Tensor out = asrnet_reconstruct(y, net);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_AsrnetBlockInfer);

void BM_MatrixGeneration256(benchmark::State& state) {
  for (auto _ : state) {
    MeasurementMatrix phi = MeasurementMatrix::generate(256, 1024, 42);
    benchmark::DoNotOptimize(phi.entries().data());
  }
}
BENCHMARK(BM_MatrixGeneration256);

}  // namespace

BENCHMARK_MAIN();
