#include <doctest.h>

#include <cstring>

#include "cscn/training.hpp"
#include "support.hpp"

using namespace cscn;

namespace {

// Tiny B=8 setup that trains in well under a second.
TrainingConfig tiny_config(Architecture arch) {
  TrainingConfig cfg;
  cfg.architecture = arch;
  cfg.sensing = SensingConfig(8, 0.25);
  cfg.stack = ConvStackSpec::compact();
  cfg.epochs = 4;
  cfg.batch_size = 16;
  cfg.seed = 5;
  cfg.threads = 2;
  return cfg;
}

PatchDataset tiny_patches(std::size_t count, std::uint64_t seed, Split split) {
  std::vector<Tensor> images = testsupport::synthetic_images((count + 48) / 49, 64, 64, seed);
  PatchDataset ds = dataset_from_images(images, 8, 8, split);
  if (ds.patches.size() > count) ds.patches.resize(count);
  return ds;
}

template <typename T>
bool bit_equal(const TensorT<T>& a, const TensorT<T>& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

}  // namespace

TEST_CASE("zero learning rate leaves the parameters untouched") {
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  PatchDataset train = tiny_patches(64, 100, Split::train);
  PatchDataset val = tiny_patches(16, 200, Split::validation);

  AsrTrainResult r = train_asrnet(cfg, train, val);
  AsrNetParams init = init_asrnet<float>(cfg.sensing, cfg.stack, derive_seed(cfg.seed, 1),
                                         cfg.sampling_bias);
  CHECK(bit_equal(r.final_params.sampling_weights, init.sampling_weights));
  CHECK(bit_equal(r.final_params.initial_weights, init.initial_weights));
  for (std::size_t l = 0; l < 3; ++l)
    CHECK(bit_equal(r.final_params.residual_stack.kernels[l], init.residual_stack.kernels[l]));
}

TEST_CASE("a short asrnet run reduces the training loss") {
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  cfg.epochs = 8;
  PatchDataset train = tiny_patches(196, 300, Split::train);
  PatchDataset val = tiny_patches(49, 400, Split::validation);

  AsrTrainResult r = train_asrnet(cfg, train, val);
  REQUIRE(r.history.records.size() == 8);
  CHECK(r.history.records.back().train_loss < r.history.records.front().train_loss);
  for (const EpochRecord& rec : r.history.records) {
    CHECK(rec.train_loss >= 0.0);
    CHECK(rec.val_loss >= 0.0);
    CHECK(std::isfinite(rec.val_psnr_db));
  }
}

TEST_CASE("a short csrnet run reduces the training loss") {
  TrainingConfig cfg = tiny_config(Architecture::csrnet);
  cfg.epochs = 8;
  PatchDataset train = tiny_patches(196, 500, Split::train);
  PatchDataset val = tiny_patches(49, 600, Split::validation);

  CsrTrainResult r = train_csrnet(cfg, train, val);
  CHECK(r.history.records.back().train_loss < r.history.records.front().train_loss);
  CHECK(r.final_params.matrix_seed == cfg.seed);
}

TEST_CASE("training histories are reproducible for any worker count") {
  PatchDataset train = tiny_patches(128, 700, Split::train);
  PatchDataset val = tiny_patches(32, 800, Split::validation);

  auto run = [&](unsigned threads) {
    TrainingConfig cfg = tiny_config(Architecture::asrnet);
    cfg.threads = threads;
    return train_asrnet(cfg, train, val);
  };
  AsrTrainResult a = run(1);
  AsrTrainResult b = run(2);
  AsrTrainResult c = run(2);

  REQUIRE(a.history.records.size() == b.history.records.size());
  for (std::size_t i = 0; i < a.history.records.size(); ++i) {
    CHECK(std::abs(a.history.records[i].train_loss - b.history.records[i].train_loss) < 1e-6);
    CHECK(std::abs(a.history.records[i].val_psnr_db - b.history.records[i].val_psnr_db) < 1e-6);
    CHECK(std::abs(b.history.records[i].train_loss - c.history.records[i].train_loss) < 1e-6);
  }
  CHECK(bit_equal(a.final_params.sampling_weights, b.final_params.sampling_weights));
  CHECK(bit_equal(b.final_params.sampling_weights, c.final_params.sampling_weights));
}

TEST_CASE("csrnet training measurements regenerate from the recorded seed") {
  TrainingConfig cfg = tiny_config(Architecture::csrnet);
  PatchDataset train = tiny_patches(64, 900, Split::train);

  MeasurementMatrix phi1 =
      MeasurementMatrix::generate(cfg.sensing.m(), cfg.sensing.n(), cfg.seed);
  MeasurementMatrix phi2 =
      MeasurementMatrix::generate(cfg.sensing.m(), cfg.sensing.n(), cfg.seed);
  for (const Tensor& patch : train.patches) {
    Tensor y1 = block_sample(patch, phi1);
    Tensor y2 = block_sample(patch, phi2);
    for (std::size_t i = 0; i < y1.size(); ++i) CHECK(std::abs(y1[i] - y2[i]) < 1e-6f);
  }
}

TEST_CASE("validation of an exact model caps at 100 dB") {
  const std::size_t B = 8, n = 64;
  AsrNetParams net;
  net.config = SensingConfig(B, 1.0);
  net.sampling_weights = Tensor(Shape{n, n});
  net.initial_weights = Tensor(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i) {
    net.sampling_weights(i, i) = 1.0f;
    net.initial_weights(i, i) = 1.0f;
  }
  net.initial_bias = Tensor(Shape{n});
  ConvStackSpec spec = ConvStackSpec::compact();
  for (std::size_t l = 0; l < 3; ++l) {
    net.residual_stack.kernels[l] =
        Tensor(Shape{spec.channels[l], spec.in_channels(l), spec.kernels[l], spec.kernels[l]});
    net.residual_stack.biases[l] = Tensor(Shape{spec.channels[l]});
  }

  PatchDataset val = tiny_patches(16, 1000, Split::validation);
  ValidationResult r = validate_asrnet(net, val, 1);
  CHECK(r.mean_psnr_db == 100.0);
  CHECK(r.mean_loss == 0.0);
}

TEST_CASE("untrained networks validate to finite numbers") {
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  AsrNetParams net = init_asrnet<float>(cfg.sensing, cfg.stack, 1);
  PatchDataset val = tiny_patches(16, 1100, Split::validation);
  ValidationResult r = validate_asrnet(net, val, 2);
  CHECK(std::isfinite(r.mean_loss));
  CHECK(std::isfinite(r.mean_psnr_db));
  CHECK(r.mean_psnr_db < 100.0);
}

TEST_CASE("training rejects bad configurations and datasets") {
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  PatchDataset train = tiny_patches(32, 1200, Split::train);
  PatchDataset val = tiny_patches(16, 1300, Split::validation);

  TrainingConfig wrong = cfg;
  wrong.architecture = Architecture::csrnet;
  CHECK_THROWS_AS(train_asrnet(wrong, train, val), ConfigError);

  TrainingConfig zero_epochs = cfg;
  zero_epochs.epochs = 0;
  CHECK_THROWS_AS(train_asrnet(zero_epochs, train, val), ConfigError);

  PatchDataset empty;
  empty.block_size = 8;
  CHECK_THROWS_AS(train_asrnet(cfg, empty, val), ConfigError);

  PatchDataset mismatched = tiny_patches(16, 1400, Split::train);
  mismatched.block_size = 16;  // lies about its geometry
  CHECK_THROWS_AS(train_asrnet(cfg, mismatched, val), ConfigError);
}

TEST_CASE("the optional sampling bias trains alongside the weights") {
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  cfg.sampling_bias = true;
  cfg.epochs = 3;
  PatchDataset train = tiny_patches(64, 2100, Split::train);
  PatchDataset val = tiny_patches(16, 2200, Split::validation);

  AsrTrainResult r = train_asrnet(cfg, train, val);
  REQUIRE(!r.final_params.sampling_bias.empty());
  CHECK(r.final_params.sampling_bias.all_finite());
  double moved = 0;
  for (float v : r.final_params.sampling_bias) moved += std::abs(v);
  CHECK(moved > 0.0);  // biases start at zero and must receive gradient
}

TEST_CASE("a diverging run aborts with a diagnostic naming the batch") {
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  cfg.learning_rate = 1e25;  // guarantees float overflow within a few steps
  cfg.epochs = 3;
  PatchDataset train = tiny_patches(64, 1900, Split::train);
  PatchDataset val = tiny_patches(16, 1950, Split::validation);
  CHECK_THROWS_WITH_AS(train_asrnet(cfg, train, val), doctest::Contains("batch"),
                       NumericError);
}

TEST_CASE("history csv has the documented header and row count") {
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  cfg.epochs = 3;
  PatchDataset train = tiny_patches(64, 1500, Split::train);
  PatchDataset val = tiny_patches(16, 1600, Split::validation);
  AsrTrainResult r = train_asrnet(cfg, train, val);

  const std::string csv = r.history.to_csv();
  CHECK(csv.rfind("epoch,train_loss,val_loss,val_psnr_db,seconds\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 1 + 3);
}

TEST_CASE("checkpoints are written at the configured interval") {
  testsupport::TempDir tmp;
  TrainingConfig cfg = tiny_config(Architecture::asrnet);
  cfg.epochs = 4;
  cfg.checkpoint_interval = 2;
  cfg.checkpoint_dir = tmp.path();
  PatchDataset train = tiny_patches(64, 1700, Split::train);
  PatchDataset val = tiny_patches(16, 1800, Split::validation);
  train_asrnet(cfg, train, val);

  CHECK(std::filesystem::exists(tmp / "checkpoint_epoch_0002.cscn"));
  CHECK(std::filesystem::exists(tmp / "checkpoint_epoch_0004.cscn"));
  CHECK(!std::filesystem::exists(tmp / "checkpoint_epoch_0003.cscn"));
  CHECK(std::filesystem::exists(tmp / "history.csv"));
}
