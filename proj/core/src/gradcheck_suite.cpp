#include "cscn/gradcheck_suite.hpp"

#include <chrono>
#include <limits>

#include "cscn/gradcheck.hpp"
#include "cscn/layers.hpp"
#include "cscn/models.hpp"
#include "cscn/rng.hpp"

namespace cscn {

namespace {

constexpr double kStep = 1e-5;
constexpr int kSeeds = 5;

std::vector<std::size_t> sample_indices(std::size_t total, std::size_t want, SeededRng& rng) {
  if (want >= total) {
    std::vector<std::size_t> all(total);
    for (std::size_t i = 0; i < total; ++i) all[i] = i;
    return all;
  }
  std::vector<std::size_t> idx(want);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(total));
  return idx;
}

struct Check {
  GradCheckReport& report;

  void record(const std::string& name, double err, double threshold) {
    report.entries.push_back({name, err, threshold, err < threshold});
  }
};

// FC gradients against a random linear projection of the output; the map is
// linear in every argument, so central differences are exact up to roundoff.
void check_fc(Check& ck, std::size_t m, std::size_t n, double threshold,
              const std::string& tag, std::size_t coord_budget) {
  double worst_w = 0, worst_b = 0, worst_x = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    SeededRng rng(derive_seed(101, seed));
    TensorD x = random_normal_tensor<double>(Shape{n}, rng, 1.0);
    TensorD w = random_normal_tensor<double>(Shape{m, n}, rng, 1.0);
    TensorD b = random_normal_tensor<double>(Shape{m}, rng, 1.0);
    TensorD c = random_normal_tensor<double>(Shape{m}, rng, 1.0);

    auto project = [&](const TensorD& out) {
      double s = 0;
      for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
      return s;
    };
    LayerGradsT<double> g = fc_backward(c, x, w);

    auto idx_w = sample_indices(w.size(), coord_budget, rng);
    TensorD fd_w = finite_diff_grad_at(
        [&](const TensorD& t) { return project(fc_forward(x, t, b)); }, w, kStep, idx_w);
    worst_w = std::max(worst_w, max_relative_error_at(g.grad_weights, fd_w, idx_w));

    TensorD fd_b = finite_diff_grad(
        [&](const TensorD& t) { return project(fc_forward(x, w, t)); }, b, kStep);
    worst_b = std::max(worst_b, max_relative_error(g.grad_bias, fd_b));

    TensorD fd_x = finite_diff_grad(
        [&](const TensorD& t) { return project(fc_forward(t, w, b)); }, x, kStep);
    worst_x = std::max(worst_x, max_relative_error(g.grad_input, fd_x));
  }
  ck.record(tag + "/weights", worst_w, threshold);
  ck.record(tag + "/bias", worst_b, threshold);
  ck.record(tag + "/input", worst_x, threshold);
}

void check_conv(Check& ck, std::size_t C, std::size_t H, std::size_t O, std::size_t k,
                double threshold, const std::string& tag, std::size_t coord_budget) {
  double worst_k = 0, worst_b = 0, worst_x = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    SeededRng rng(derive_seed(202 + static_cast<int>(k), seed));
    TensorD x = random_normal_tensor<double>(Shape{C, H, H}, rng, 1.0);
    TensorD w = random_normal_tensor<double>(Shape{O, C, k, k}, rng, 1.0);
    TensorD b = random_normal_tensor<double>(Shape{O}, rng, 1.0);
    TensorD c = random_normal_tensor<double>(Shape{O, H, H}, rng, 1.0);

    auto project = [&](const TensorD& out) {
      double s = 0;
      for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
      return s;
    };
    LayerGradsT<double> g = conv2d_backward(c, x, w);

    auto idx_w = sample_indices(w.size(), coord_budget, rng);
    TensorD fd_w = finite_diff_grad_at(
        [&](const TensorD& t) { return project(conv2d_forward(x, t, b)); }, w, kStep, idx_w);
    worst_k = std::max(worst_k, max_relative_error_at(g.grad_weights, fd_w, idx_w));

    TensorD fd_b = finite_diff_grad(
        [&](const TensorD& t) { return project(conv2d_forward(x, w, t)); }, b, kStep);
    worst_b = std::max(worst_b, max_relative_error(g.grad_bias, fd_b));

    auto idx_x = sample_indices(x.size(), coord_budget, rng);
    TensorD fd_x = finite_diff_grad_at(
        [&](const TensorD& t) { return project(conv2d_forward(t, w, b)); }, x, kStep, idx_x);
    worst_x = std::max(worst_x, max_relative_error_at(g.grad_input, fd_x, idx_x));
  }
  ck.record(tag + "/kernels", worst_k, threshold);
  ck.record(tag + "/bias", worst_b, threshold);
  ck.record(tag + "/input", worst_x, threshold);
}

void check_relu(Check& ck) {
  double worst = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    SeededRng rng(derive_seed(303, seed));
    TensorD x = random_normal_tensor<double>(Shape{4, 9, 9}, rng, 1.0);
    TensorD c = random_normal_tensor<double>(Shape{4, 9, 9}, rng, 1.0);

    // exclude elements within 10h of the kink
    std::vector<bool> mask(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mask[i] = std::abs(x[i]) >= 10.0 * kStep;

    TensorD analytic = relu_backward(c, x);
    TensorD fd = finite_diff_grad(
        [&](const TensorD& t) {
          TensorD out = relu(t);
          double s = 0;
          for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i];
          return s;
        },
        x, kStep);
    worst = std::max(worst, max_relative_error(analytic, fd, &mask));
  }
  ck.record("relu/input", worst, 1e-7);
}

void check_mse(Check& ck) {
  double worst = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    SeededRng rng(derive_seed(404, seed));
    TensorD pred = random_normal_tensor<double>(Shape{6, 7}, rng, 1.0);
    TensorD target = random_normal_tensor<double>(Shape{6, 7}, rng, 1.0);

    TensorD analytic = mse_loss(pred, target).grad;
    TensorD fd = finite_diff_grad(
        [&](const TensorD& t) { return static_cast<double>(mse_loss(t, target).loss); },
        pred, kStep);
    worst = std::max(worst, max_relative_error(analytic, fd));
  }
  ck.record("mse/pred", worst, 1e-7);
}

// End-to-end checks on the compact configuration: every parameter tensor of
// the network, full coordinate coverage.

// Zero-crossing exclusion for compositions: a parameter probe of size h moves
// pre-activations by far less than this margin, so a draw whose forward pass
// keeps every pre-activation outside it cannot flip a ReLU under probing.
constexpr double kPreactMargin = 1e-3;

double min_abs_preact(const ConvStackCacheT<double>& cache) {
  double lo = std::numeric_limits<double>::infinity();
  for (const TensorD& t : cache.preact)
    for (double v : t) lo = std::min(lo, std::abs(v));
  return lo;
}

template <typename Net, typename Loss, typename Analytic>
double check_net_params(Net& net, Loss&& loss, Analytic&& analytic_grads) {
  std::vector<TensorD*> params = parameter_list(net);
  const std::vector<TensorD> analytic = analytic_grads();
  double worst = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t]->empty()) continue;
    const TensorD original = *params[t];
    TensorD fd = finite_diff_grad(
        [&](const TensorD& probe) {
          *params[t] = probe;
          return loss();
        },
        original, kStep);
    *params[t] = original;
    worst = std::max(worst, max_relative_error(analytic[t], fd));
  }
  return worst;
}

void check_csrnet(Check& ck) {
  const SensingConfig sc(8, 0.25);  // m = 16
  double worst = 0;
  int accepted = 0;
  for (std::uint64_t seed = 0; accepted < kSeeds; ++seed) {
    CsrNetParamsT<double> net = init_csrnet<double>(sc, ConvStackSpec::compact(), 7,
                                                    derive_seed(505, seed));
    SeededRng rng(derive_seed(606, seed));
    TensorD x = random_uniform_tensor<double>(Shape{sc.block_size, sc.block_size}, rng, 0, 1);
    MeasurementMatrix phi = MeasurementMatrix::generate(sc.m(), sc.n(), 7);
    TensorD y = block_sample(x, phi);

    {
      auto [out, cache] = csrnet_forward(y, net);
      if (std::min(min_abs_preact(cache.deep), min_abs_preact(cache.residual)) < kPreactMargin)
        continue;
    }
    ++accepted;

    auto loss = [&] {
      auto [out, cache] = csrnet_forward(y, net);
      return static_cast<double>(mse_loss(out, x).loss);
    };
    auto analytic = [&] {
      auto [out, cache] = csrnet_forward(y, net);
      auto mse = mse_loss(out, x);
      CsrNetGradsT<double> g = csrnet_backward(net, cache, mse.grad);
      std::vector<TensorD> flat;
      for (const TensorD* t : gradient_list(g)) flat.push_back(*t);
      return flat;
    };
    worst = std::max(worst, check_net_params(net, loss, analytic));
  }
  ck.record("csrnet/end-to-end", worst, 1e-4);
}

void check_asrnet(Check& ck) {
  const SensingConfig sc(8, 0.25);
  double worst = 0;
  int accepted = 0;
  for (std::uint64_t seed = 0; accepted < kSeeds; ++seed) {
    AsrNetParamsT<double> net =
        init_asrnet<double>(sc, ConvStackSpec::compact(), derive_seed(707, seed));
    SeededRng rng(derive_seed(808, seed));
    TensorD x = random_uniform_tensor<double>(Shape{sc.block_size, sc.block_size}, rng, 0, 1);

    {
      AsrNetForwardT<double> f = asrnet_forward(x, net);
      if (min_abs_preact(f.cache.residual) < kPreactMargin) continue;
    }
    ++accepted;

    auto loss = [&] {
      AsrNetForwardT<double> f = asrnet_forward(x, net);
      return static_cast<double>(mse_loss(f.reconstruction, x).loss);
    };
    auto analytic = [&] {
      AsrNetForwardT<double> f = asrnet_forward(x, net);
      auto mse = mse_loss(f.reconstruction, x);
      AsrNetGradsT<double> g = asrnet_backward(net, f.cache, mse.grad);
      std::vector<TensorD> flat;
      for (const TensorD* t : gradient_list(g)) flat.push_back(*t);
      return flat;
    };
    worst = std::max(worst, check_net_params(net, loss, analytic));
  }
  ck.record("asrnet/end-to-end", worst, 1e-4);
}

}  // namespace

GradCheckReport run_gradcheck_suite(bool full_size) {
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckReport report;
  Check ck{report};

  check_fc(ck, 4, 8, 1e-7, "fc", 1u << 20);
  check_conv(ck, 2, 5, 3, 3, 1e-6, "conv3", 1u << 20);
  check_conv(ck, 4, 6, 3, 1, 1e-6, "conv1", 1u << 20);
  check_conv(ck, 32, 12, 1, 7, 1e-4, "conv7", 96);
  check_conv(ck, 1, 12, 64, 11, 1e-4, "conv11", 96);
  check_relu(ck);
  check_mse(ck);
  check_csrnet(ck);
  check_asrnet(ck);

  if (full_size) {
    check_fc(ck, 256, 1024, 1e-6, "fc/b32", 128);
    check_conv(ck, 1, 32, 64, 11, 1e-4, "conv11/b32", 32);
    check_conv(ck, 32, 32, 1, 7, 1e-4, "conv7/b32", 32);
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace cscn
