#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cscn/dataset.hpp"
#include "cscn/models.hpp"

namespace cscn {

struct TrainingConfig {
  Architecture architecture = Architecture::asrnet;
  SensingConfig sensing;
  ConvStackSpec stack = ConvStackSpec::standard();
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::size_t checkpoint_interval = 0;  // epochs between checkpoints; 0 disables
  std::filesystem::path checkpoint_dir;
  unsigned threads = 0;  // 0 = default_thread_count()
  bool halve_lr_every_20_epochs = false;
  bool sampling_bias = false;  // ASRNet sampling FC bias, off by default
  std::size_t train_stride = 14;
  std::size_t val_stride = 21;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;   // epoch mean of per-pixel MSE
  double val_loss = 0;
  double val_psnr_db = 0;
  double seconds = 0;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;

  // header "epoch,train_loss,val_loss,val_psnr_db,seconds"
  std::string to_csv() const;
  void save_csv(const std::filesystem::path& path) const;
};

struct ValidationResult {
  double mean_loss = 0;
  double mean_psnr_db = 0;
};

struct CsrTrainResult {
  CsrNetParams final_params;
  CsrNetParams best_params;  // highest validation PSNR
  TrainingHistory history;
};

struct AsrTrainResult {
  AsrNetParams final_params;
  AsrNetParams best_params;
  TrainingHistory history;
};

// Mini-batch Adam on the per-pixel MSE objective. CSRNet pre-samples every
// patch with the matrix generated from (m, B^2, config.seed); ASRNet trains
// end to end on the patches themselves. Per-epoch shuffles and all parameter
// draws derive from config.seed, so a run is reproducible on a given build
// for any worker count.
CsrTrainResult train_csrnet(const TrainingConfig& config, const PatchDataset& train_set,
                            const PatchDataset& val_set);
AsrTrainResult train_asrnet(const TrainingConfig& config, const PatchDataset& train_set,
                            const PatchDataset& val_set);

// Forward-only pass: mean per-pixel MSE plus mean PSNR of the clamped
// reconstructions.
ValidationResult validate_csrnet(const CsrNetParams& params, const PatchDataset& val_set,
                                 unsigned threads = 0);
ValidationResult validate_asrnet(const AsrNetParams& params, const PatchDataset& val_set,
                                 unsigned threads = 0);

}  // namespace cscn
