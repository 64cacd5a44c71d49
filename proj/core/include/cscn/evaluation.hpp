#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cscn/model_io.hpp"
#include "cscn/models.hpp"
#include "cscn/sensing.hpp"

namespace cscn {

// 10 log10(255^2 / MSE) with both images clamped to [0,1] and scaled by 255.
// Identical images report the 100 dB cap.
double psnr(const Tensor& reference, const Tensor& test);

struct ReconstructionResult {
  Tensor image;    // clamped to [0,1], original dimensions
  double seconds;  // reconstruction only; sampling is acquisition and untimed
};

// Tile -> sample -> per-block reconstruction -> assemble -> clamp. The CSRNet
// overload requires the matrix the model was trained against.
ReconstructionResult reconstruct_image(const Tensor& image01, const CsrNetParams& params,
                                       const MeasurementMatrix& phi, unsigned threads = 0);
ReconstructionResult reconstruct_image(const Tensor& image01, const AsrNetParams& params,
                                       unsigned threads = 0);
// Regenerates the CSRNet matrix from the recorded seed.
ReconstructionResult reconstruct_image(const Tensor& image01, const AnyModel& model,
                                       unsigned threads = 0);

struct EvalRow {
  std::string image;  // file name, or "MEAN" for a model's aggregate row
  std::string arch;
  double mr = 0;  // effective measurement rate m / B^2
  double psnr_db = 0;
  double seconds = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // per-image rows, then one MEAN row per model
  unsigned threads = 1;       // worker count the timings were taken with

  std::string to_csv() const;  // header "image,arch,mr,psnr_db,seconds"
  void save_csv(const std::filesystem::path& path) const;
};

// Reconstructs every readable PGM in test_dir with every model. Timing per
// image is the median of 5 runs after one warm-up. Rows are deterministic:
// models in argument order, images lexicographic. Pass an empty csv_out to
// skip writing; pass recon_dir to keep the reconstructed images as PGM.
EvalReport benchmark(const std::vector<AnyModel>& models,
                     const std::filesystem::path& test_dir,
                     const std::filesystem::path& csv_out, unsigned threads = 0,
                     const std::filesystem::path& recon_dir = {});

}  // namespace cscn
