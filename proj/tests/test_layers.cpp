#include <doctest.h>

#include "cscn/gradcheck.hpp"
#include "cscn/layers.hpp"
#include "support.hpp"

using namespace cscn;

namespace {

TensorD random_t(Shape shape, SeededRng& rng) {
  return random_normal_tensor<double>(shape, rng, 1.0);
}

}  // namespace

TEST_CASE("fc identity and zero-weight cases") {
  Tensor x(Shape{2}, std::vector<float>{1, 2});
  Tensor w(Shape{2, 2}, std::vector<float>{1, 0, 0, 1});
  Tensor b(Shape{2});
  Tensor out = fc_forward(x, w, b);
  CHECK(out[0] == 1.0f);
  CHECK(out[1] == 2.0f);

  Tensor wz(Shape{4, 8});
  Tensor bz(Shape{4}, std::vector<float>(4, 3.0f));
  Tensor x8(Shape{8}, std::vector<float>(8, 0.25f));
  Tensor out2 = fc_forward(x8, wz, bz);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out2[i] == 3.0f);
}

TEST_CASE("fc matches the direct matvec oracle") {
  SeededRng rng(11);
  TensorD x = random_t(Shape{8}, rng);
  TensorD w = random_t(Shape{4, 8}, rng);
  TensorD b = random_t(Shape{4}, rng);
  TensorD got = fc_forward(x, w, b);
  TensorD want = testsupport::naive_matvec(w, x, b);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got[i] - want[i]) < 1e-12);
}

TEST_CASE("fc shape mismatches name both shapes") {
  Tensor x(Shape{3});
  Tensor w(Shape{2, 4});
  Tensor b(Shape{2});
  CHECK_THROWS_AS(fc_forward(x, w, b), DimensionError);
  try {
    fc_forward(x, w, b);
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x4") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
}

TEST_CASE("fc backward definition cases") {
  TensorD go(Shape{1}, std::vector<double>{1});
  TensorD x(Shape{2}, std::vector<double>{2, 3});
  TensorD w(Shape{1, 2}, std::vector<double>{5, 7});
  LayerGradsT<double> g = fc_backward(go, x, w);
  CHECK(g.grad_weights(0, 0) == 2.0);
  CHECK(g.grad_weights(0, 1) == 3.0);
  CHECK(g.grad_bias[0] == 1.0);

  // identity weights pass the gradient straight through
  TensorD wi(Shape{2, 2}, std::vector<double>{1, 0, 0, 1});
  TensorD go2(Shape{2}, std::vector<double>{0.5, -2});
  TensorD x2(Shape{2}, std::vector<double>{9, 9});
  LayerGradsT<double> g2 = fc_backward(go2, x2, wi);
  CHECK(g2.grad_input[0] == 0.5);
  CHECK(g2.grad_input[1] == -2.0);
}

TEST_CASE("fc backward agrees with central differences") {
  SeededRng rng(13);
  TensorD x = random_t(Shape{8}, rng);
  TensorD w = random_t(Shape{4, 8}, rng);
  TensorD b = random_t(Shape{4}, rng);
  TensorD c = random_t(Shape{4}, rng);
  auto project = [&](const TensorD& out) {
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
    return s;
  };
  LayerGradsT<double> g = fc_backward(c, x, w);
  TensorD fd_w = finite_diff_grad(
      [&](const TensorD& t) { return project(fc_forward(x, t, b)); }, w, 1e-5);
  TensorD fd_x = finite_diff_grad(
      [&](const TensorD& t) { return project(fc_forward(t, w, b)); }, x, 1e-5);
  CHECK(max_relative_error(g.grad_weights, fd_w) < 1e-7);
  CHECK(max_relative_error(g.grad_input, fd_x) < 1e-7);
}

TEST_CASE("fc linearity with zero bias") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeededRng rng(derive_seed(17, seed));
    TensorD x = random_t(Shape{8}, rng);
    TensorD z = random_t(Shape{8}, rng);
    TensorD w = random_t(Shape{4, 8}, rng);
    TensorD nb;
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    TensorD mix(Shape{8});
    for (std::size_t i = 0; i < 8; ++i) mix[i] = a * x[i] + b * z[i];
    TensorD lhs = fc_forward(mix, w, nb);
    TensorD fx = fc_forward(x, w, nb);
    TensorD fz = fc_forward(z, w, nb);
    for (std::size_t i = 0; i < 4; ++i)
      CHECK(std::abs(lhs[i] - (a * fx[i] + b * fz[i])) < 1e-10);
  }
}

TEST_CASE("conv produces the documented 64x32x32 shape") {
  SeededRng rng(19);
  Tensor in = random_normal_tensor<float>(Shape{1, 32, 32}, rng, 1.0);
  Tensor k = random_normal_tensor<float>(Shape{64, 1, 11, 11}, rng, 0.1);
  Tensor b(Shape{64});
  Tensor out = conv2d_forward(in, k, b);
  CHECK(out.shape() == (Shape{64, 32, 32}));
}

TEST_CASE("conv 1x1 identity kernel is the identity map") {
  SeededRng rng(23);
  TensorD in = random_t(Shape{1, 6, 7}, rng);
  TensorD k(Shape{1, 1, 1, 1}, std::vector<double>{1.0});
  TensorD b(Shape{1});
  TensorD out = conv2d_forward(in, k, b);
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == in[i]);
}

TEST_CASE("conv matches the six-loop oracle") {
  SeededRng rng(29);
  TensorD in = random_t(Shape{2, 5, 5}, rng);
  TensorD k = random_t(Shape{3, 2, 3, 3}, rng);
  TensorD b = random_t(Shape{3}, rng);
  TensorD got = conv2d_forward(in, k, b);
  TensorD want = testsupport::naive_conv2d(in, k, b);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got[i] - want[i]) < 1e-12);
}

TEST_CASE("conv preserves spatial dims for every odd kernel") {
  SeededRng rng(31);
  for (std::size_t k : {1u, 3u, 5u, 7u, 9u, 11u}) {
    TensorD in = random_t(Shape{2, 13, 9}, rng);
    TensorD kt = random_t(Shape{3, 2, k, k}, rng);
    TensorD b = random_t(Shape{3}, rng);
    TensorD out = conv2d_forward(in, kt, b);
    CHECK(out.shape() == (Shape{3, 13, 9}));
    CHECK(out.all_finite());
  }
}

TEST_CASE("conv rejects even kernels and channel mismatches") {
  Tensor in(Shape{2, 5, 5});
  Tensor k_even(Shape{1, 2, 4, 4});
  Tensor k_chan(Shape{1, 3, 3, 3});
  Tensor b(Shape{1});
  CHECK_THROWS_AS(conv2d_forward(in, k_even, b), ConfigError);
  CHECK_THROWS_AS(conv2d_forward(in, k_chan, b), DimensionError);
}

TEST_CASE("conv backward trivial cases") {
  SeededRng rng(37);
  TensorD in = random_t(Shape{2, 5, 5}, rng);
  TensorD k = random_t(Shape{3, 2, 3, 3}, rng);
  TensorD zero_go(Shape{3, 5, 5});
  LayerGradsT<double> g = conv2d_backward(zero_go, in, k);
  for (double v : g.grad_weights) CHECK(v == 0.0);
  for (double v : g.grad_bias) CHECK(v == 0.0);
  for (double v : g.grad_input) CHECK(v == 0.0);

  TensorD ki(Shape{1, 1, 1, 1}, std::vector<double>{1.0});
  TensorD in1 = random_t(Shape{1, 4, 4}, rng);
  TensorD go = random_t(Shape{1, 4, 4}, rng);
  LayerGradsT<double> gi = conv2d_backward(go, in1, ki);
  for (std::size_t i = 0; i < go.size(); ++i) CHECK(gi.grad_input[i] == go[i]);
}

TEST_CASE("conv backward agrees with central differences") {
  SeededRng rng(41);
  TensorD in = random_t(Shape{2, 5, 5}, rng);
  TensorD k = random_t(Shape{3, 2, 3, 3}, rng);
  TensorD b = random_t(Shape{3}, rng);
  TensorD c = random_t(Shape{3, 5, 5}, rng);
  auto project = [&](const TensorD& out) {
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
    return s;
  };
  LayerGradsT<double> g = conv2d_backward(c, in, k);
  TensorD fd_k = finite_diff_grad(
      [&](const TensorD& t) { return project(conv2d_forward(in, t, b)); }, k, 1e-5);
  TensorD fd_b = finite_diff_grad(
      [&](const TensorD& t) { return project(conv2d_forward(in, k, t)); }, b, 1e-5);
  TensorD fd_in = finite_diff_grad(
      [&](const TensorD& t) { return project(conv2d_forward(t, k, b)); }, in, 1e-5);
  CHECK(max_relative_error(g.grad_weights, fd_k) < 1e-6);
  CHECK(max_relative_error(g.grad_bias, fd_b) < 1e-6);
  CHECK(max_relative_error(g.grad_input, fd_in) < 1e-6);
}

TEST_CASE("relu forward and subgradient convention") {
  Tensor x(Shape{3}, std::vector<float>{-1, 0, 2});
  Tensor out = relu(x);
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 0.0f);
  CHECK(out[2] == 2.0f);

  Tensor go(Shape{3}, std::vector<float>{5, 5, 5});
  Tensor g = relu_backward(go, x);
  CHECK(g[0] == 0.0f);
  CHECK(g[1] == 0.0f);  // tie at exactly zero passes zero gradient
  CHECK(g[2] == 5.0f);
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
  SeededRng rng(43);
  TensorD x = random_t(Shape{40}, rng);
  TensorD c = random_t(Shape{40}, rng);
  std::vector<bool> mask(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mask[i] = std::abs(x[i]) >= 1e-4;
  TensorD analytic = relu_backward(c, x);
  TensorD fd = finite_diff_grad(
      [&](const TensorD& t) {
        TensorD out = relu(t);
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
        return s;
      },
      x, 1e-5);
  CHECK(max_relative_error(analytic, fd, &mask) < 1e-7);
}

TEST_CASE("mse definition cases") {
  Tensor p(Shape{4}, std::vector<float>{1, 2, 3, 4});
  auto same = mse_loss(p, p);
  CHECK(same.loss == 0.0f);
  for (float v : same.grad) CHECK(v == 0.0f);

  Tensor zero(Shape{1}, std::vector<float>{0});
  Tensor one(Shape{1}, std::vector<float>{1});
  auto r = mse_loss(zero, one);
  CHECK(r.loss == 1.0f);
  CHECK(r.grad[0] == -2.0f);

  Tensor bad(Shape{2});
  CHECK_THROWS_AS(mse_loss(p, bad), DimensionError);
}

TEST_CASE("mse gradient matches finite differences") {
  SeededRng rng(47);
  TensorD p = random_t(Shape{6, 5}, rng);
  TensorD t = random_t(Shape{6, 5}, rng);
  TensorD analytic = mse_loss(p, t).grad;
  // quadratic loss: central differences carry no truncation term at any h,
  // so a wider step only reduces cancellation noise
  TensorD fd = finite_diff_grad(
      [&](const TensorD& probe) { return static_cast<double>(mse_loss(probe, t).loss); }, p,
      1e-3);
  CHECK(max_relative_error(analytic, fd) < 1e-8);
}

TEST_CASE("layer outputs stay finite on finite inputs") {
  SeededRng rng(53);
  TensorD in = random_t(Shape{3, 8, 8}, rng);
  TensorD k = random_t(Shape{4, 3, 5, 5}, rng);
  TensorD b = random_t(Shape{4}, rng);
  TensorD out = conv2d_forward(in, k, b);
  CHECK(out.all_finite());
  LayerGradsT<double> g = conv2d_backward(out, in, k);
  CHECK(g.grad_weights.all_finite());
  CHECK(g.grad_input.all_finite());
}
