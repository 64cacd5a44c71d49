#include "cscn/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "cscn/adam.hpp"
#include "cscn/evaluation.hpp"
#include "cscn/io_util.hpp"
#include "cscn/model_io.hpp"
#include "cscn/parallel.hpp"
#include "cscn/rng.hpp"

namespace cscn {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Fixed slot count per batch: the gradient reduction order depends only on
// the batch, never on the worker count.
constexpr std::size_t kGradSlots = 16;

void check_dataset(const PatchDataset& ds, const TrainingConfig& cfg, const char* which) {
  if (ds.patches.empty())
    throw ConfigError(std::string("train: ") + which + " set is empty");
  if (ds.block_size != cfg.sensing.block_size)
    throw ConfigError(std::string("train: ") + which + " set block size " +
                      std::to_string(ds.block_size) + " vs configured " +
                      std::to_string(cfg.sensing.block_size));
}

// Per-slot gradient accumulator aligned with parameter_list order.
struct GradBuffer {
  std::vector<Tensor> tensors;

  static GradBuffer zeros_like(const std::vector<Tensor*>& params) {
    GradBuffer b;
    b.tensors.reserve(params.size());
    for (const Tensor* p : params) b.tensors.emplace_back(p->shape());
    return b;
  }

  void clear() {
    for (auto& t : tensors) t.fill(0.0f);
  }

  void accumulate(const std::vector<const Tensor*>& grads) {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      if (!grads[i]->empty()) add_inplace(tensors[i], *grads[i]);
  }

  void add(const GradBuffer& other) {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      if (!tensors[i].empty()) add_inplace(tensors[i], other.tensors[i]);
  }
};

// Architecture adapters for the shared loop.

struct CsrProblem {
  using Net = CsrNetParams;
  using Result = CsrTrainResult;

  static double sample_pass(const Net& net, const Tensor& input, const Tensor& target,
                            GradBuffer& slot) {
    auto [out, cache] = csrnet_forward(input, net);
    auto mse = mse_loss(out, target);
    CsrNetGradsT<float> g = csrnet_backward(net, cache, mse.grad);
    slot.accumulate(gradient_list(g));
    return static_cast<double>(mse.loss);
  }

  static Tensor infer(const Net& net, const Tensor& input) { return csrnet_infer(input, net); }
};

struct AsrProblem {
  using Net = AsrNetParams;
  using Result = AsrTrainResult;

  static double sample_pass(const Net& net, const Tensor& input, const Tensor& target,
                            GradBuffer& slot) {
    AsrNetForwardT<float> f = asrnet_forward(input, net);
    auto mse = mse_loss(f.reconstruction, target);
    AsrNetGradsT<float> g = asrnet_backward(net, f.cache, mse.grad);
    slot.accumulate(gradient_list(g));
    return static_cast<double>(mse.loss);
  }

  static Tensor infer(const Net& net, const Tensor& input) {
    return asrnet_reconstruct(asrnet_sample(input, net), net);
  }
};

template <typename P>
ValidationResult validate_net(const typename P::Net& net, const std::vector<Tensor>& inputs,
                              const std::vector<Tensor>& targets, unsigned threads) {
  if (inputs.empty()) throw ConfigError("validate: validation set is empty");
  const std::size_t n = inputs.size();
  const std::size_t slots = std::min<std::size_t>(kGradSlots, n);
  std::vector<double> loss_sum(slots, 0.0), psnr_sum(slots, 0.0);
  for_each_slot(n, slots, threads, [&](std::size_t slot, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      Tensor out = P::infer(net, inputs[i]);
      loss_sum[slot] += static_cast<double>(mse_loss(out, targets[i]).loss);
      clamp01_inplace(out);
      psnr_sum[slot] += psnr(targets[i], out);
    }
  });
  ValidationResult r;
  for (std::size_t s = 0; s < slots; ++s) {
    r.mean_loss += loss_sum[s];
    r.mean_psnr_db += psnr_sum[s];
  }
  r.mean_loss /= static_cast<double>(n);
  r.mean_psnr_db /= static_cast<double>(n);
  return r;
}

template <typename P>
typename P::Result train_core(const TrainingConfig& cfg, typename P::Net net,
                              const std::vector<Tensor>& inputs,
                              const std::vector<Tensor>& targets,
                              const std::vector<Tensor>& val_inputs,
                              const std::vector<Tensor>& val_targets) {
  const unsigned threads = cfg.threads == 0 ? default_thread_count() : cfg.threads;
  const std::size_t n = inputs.size();

  std::vector<Tensor*> params = parameter_list(net);
  std::vector<AdamState> states;
  states.reserve(params.size());
  for (Tensor* p : params) states.push_back(AdamState::zeros_like(*p));

  const std::size_t slot_count = std::min({kGradSlots, cfg.batch_size, n});
  std::vector<GradBuffer> slots;
  slots.reserve(slot_count);
  for (std::size_t s = 0; s < slot_count; ++s) slots.push_back(GradBuffer::zeros_like(params));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SeededRng shuffle_rng(derive_seed(cfg.seed, 2));

  typename P::Result result;
  double best_psnr = -1.0;
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    seeded_shuffle(order, shuffle_rng);

    double lr = cfg.learning_rate;
    if (cfg.halve_lr_every_20_epochs)
      lr = cfg.learning_rate * std::pow(0.5, static_cast<double>((epoch - 1) / 20));

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size, ++batch_index) {
      const std::size_t len = std::min(cfg.batch_size, n - b0);
      const std::size_t used = std::min(slot_count, len);
      std::vector<double> slot_loss(used, 0.0);
      for (std::size_t s = 0; s < used; ++s) slots[s].clear();

      for_each_slot(len, used, threads, [&](std::size_t slot, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
          const std::size_t idx = order[b0 + i];
          slot_loss[slot] += P::sample_pass(net, inputs[idx], targets[idx], slots[slot]);
        }
      });

      double batch_loss = 0.0;
      for (std::size_t s = 0; s < used; ++s) batch_loss += slot_loss[s];
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss in epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      epoch_loss += batch_loss;

      // lr == 0 is a sanctioned no-op (dry runs); Adam itself requires lr > 0
      if (lr > 0) {
        for (std::size_t s = 1; s < used; ++s) slots[0].add(slots[s]);
        const float scale = 1.0f / static_cast<float>(len);
        for (std::size_t t = 0; t < params.size(); ++t) {
          if (params[t]->empty()) continue;
          Tensor& g = slots[0].tensors[t];
          scale_inplace(g, scale);
          adam_step(*params[t], g, states[t], lr, cfg.beta1, cfg.beta2, cfg.epsilon);
        }
      }
    }

    ValidationResult val = validate_net<P>(net, val_inputs, val_targets, threads);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(n);
    rec.val_loss = val.mean_loss;
    rec.val_psnr_db = val.mean_psnr_db;
    rec.seconds = elapsed_seconds(t0);
    result.history.records.push_back(rec);

    if (!have_best || val.mean_psnr_db > best_psnr) {
      best_psnr = val.mean_psnr_db;
      result.best_params = net;
      have_best = true;
    }

    if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_dir.empty() &&
        epoch % cfg.checkpoint_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_epoch_%04zu.cscn", epoch);
      save_model(net, cfg.checkpoint_dir / name);
      result.history.save_csv(cfg.checkpoint_dir / "history.csv");
    }
  }

  result.final_params = std::move(net);
  return result;
}

}  // namespace

void TrainingConfig::validate() const {
  if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("training: batch size must be >= 1");
  if (train_stride < 1 || val_stride < 1)
    throw ConfigError("training: strides must be >= 1");
  if (!(learning_rate >= 0)) throw ConfigError("training: learning rate must be >= 0");
  stack.validate();
  measurements_for_rate(sensing.block_size, sensing.measurement_rate);
}

std::string TrainingHistory::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,val_psnr_db,seconds\n";
  char line[160];
  for (const EpochRecord& r : records) {
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g,%.6f,%.3f\n", r.epoch, r.train_loss,
                  r.val_loss, r.val_psnr_db, r.seconds);
    out += line;
  }
  return out;
}

void TrainingHistory::save_csv(const std::filesystem::path& path) const {
  detail::atomic_write_file(path, to_csv());
}

CsrTrainResult train_csrnet(const TrainingConfig& config, const PatchDataset& train_set,
                            const PatchDataset& val_set) {
  if (config.architecture != Architecture::csrnet)
    throw ConfigError("train_csrnet: config architecture is not csrnet");
  config.validate();
  check_dataset(train_set, config, "train");
  check_dataset(val_set, config, "validation");

  const SensingConfig& sc = config.sensing;
  MeasurementMatrix phi = MeasurementMatrix::generate(sc.m(), sc.n(), config.seed);

  auto sample_all = [&](const std::vector<Tensor>& patches) {
    std::vector<Tensor> ys(patches.size());
    const unsigned threads = config.threads == 0 ? default_thread_count() : config.threads;
    for_each_slot(patches.size(), kGradSlots, threads,
                  [&](std::size_t, std::size_t b, std::size_t e) {
                    for (std::size_t i = b; i < e; ++i)
                      ys[i] = block_sample(patches[i], phi);
                  });
    return ys;
  };
  std::vector<Tensor> train_y = sample_all(train_set.patches);
  std::vector<Tensor> val_y = sample_all(val_set.patches);

  CsrNetParams net = init_csrnet<float>(sc, config.stack, /*matrix_seed=*/config.seed,
                                        derive_seed(config.seed, 1));
  return train_core<CsrProblem>(config, std::move(net), train_y, train_set.patches, val_y,
                                val_set.patches);
}

AsrTrainResult train_asrnet(const TrainingConfig& config, const PatchDataset& train_set,
                            const PatchDataset& val_set) {
  if (config.architecture != Architecture::asrnet)
    throw ConfigError("train_asrnet: config architecture is not asrnet");
  config.validate();
  check_dataset(train_set, config, "train");
  check_dataset(val_set, config, "validation");

  AsrNetParams net = init_asrnet<float>(config.sensing, config.stack,
                                        derive_seed(config.seed, 1), config.sampling_bias);
  return train_core<AsrProblem>(config, std::move(net), train_set.patches, train_set.patches,
                                val_set.patches, val_set.patches);
}

ValidationResult validate_csrnet(const CsrNetParams& params, const PatchDataset& val_set,
                                 unsigned threads) {
  if (threads == 0) threads = default_thread_count();
  const SensingConfig& sc = params.config;
  MeasurementMatrix phi = MeasurementMatrix::generate(sc.m(), sc.n(), params.matrix_seed);
  std::vector<Tensor> ys(val_set.patches.size());
  for_each_slot(ys.size(), kGradSlots, threads, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) ys[i] = block_sample(val_set.patches[i], phi);
  });
  return validate_net<CsrProblem>(params, ys, val_set.patches, threads);
}

ValidationResult validate_asrnet(const AsrNetParams& params, const PatchDataset& val_set,
                                 unsigned threads) {
  if (threads == 0) threads = default_thread_count();
  return validate_net<AsrProblem>(params, val_set.patches, val_set.patches, threads);
}

}  // namespace cscn
