#include "cscn/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "cscn/io_util.hpp"
#include "cscn/parallel.hpp"
#include "cscn/pgm.hpp"

namespace cscn {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kPsnrCapDb = 100.0;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Shared tile/sample/reconstruct/assemble skeleton; `reconstruct` maps one
// measurement vector to a BxB block and is the only timed portion.
template <typename Sample, typename Reconstruct>
ReconstructionResult run_blockwise(const Tensor& image01, std::size_t block_size,
                                   unsigned threads, Sample&& sample,
                                   Reconstruct&& reconstruct) {
  if (threads == 0) threads = default_thread_count();
  auto [blocks, geo] = tile_blocks(image01, block_size);

  std::vector<Tensor> measurements(blocks.size());
  for_each_slot(blocks.size(), blocks.size(), threads,
                [&](std::size_t, std::size_t b, std::size_t e) {
                  for (std::size_t i = b; i < e; ++i) measurements[i] = sample(blocks[i]);
                });

  const auto t0 = Clock::now();
  std::vector<Tensor> recon(blocks.size());
  for_each_slot(blocks.size(), blocks.size(), threads,
                [&](std::size_t, std::size_t b, std::size_t e) {
                  for (std::size_t i = b; i < e; ++i) recon[i] = reconstruct(measurements[i]);
                });
  ReconstructionResult result;
  result.image = assemble_blocks(recon, geo);
  clamp01_inplace(result.image);
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

std::string format_csv_row(const EvalRow& r) {
  char line[256];
  std::snprintf(line, sizeof(line), "%s,%s,%.6g,%.6f,%.6f\n", r.image.c_str(),
                r.arch.c_str(), r.mr, r.psnr_db, r.seconds);
  return line;
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

double psnr(const Tensor& reference, const Tensor& test) {
  check_same_shape(reference, test, "psnr");
  double acc = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = 255.0 * clamp01(reference[i]);
    const double t = 255.0 * clamp01(test[i]);
    acc += (r - t) * (r - t);
  }
  const double mse = acc / static_cast<double>(reference.size());
  if (mse == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / mse));
}

ReconstructionResult reconstruct_image(const Tensor& image01, const CsrNetParams& params,
                                       const MeasurementMatrix& phi, unsigned threads) {
  const SensingConfig& sc = params.config;
  if (phi.rows() != sc.m() || phi.cols() != sc.n())
    throw ConfigError("reconstruct: matrix " + std::to_string(phi.rows()) + "x" +
                      std::to_string(phi.cols()) + " does not match model (m=" +
                      std::to_string(sc.m()) + ", n=" + std::to_string(sc.n()) + ")");
  if (phi.seed() != params.matrix_seed)
    throw ConfigError("reconstruct: matrix seed " + std::to_string(phi.seed()) +
                      " differs from the seed this model was trained against (" +
                      std::to_string(params.matrix_seed) + ")");
  return run_blockwise(
      image01, sc.block_size, threads,
      [&](const Tensor& blk) { return block_sample(blk, phi); },
      [&](const Tensor& y) { return csrnet_infer(y, params); });
}

ReconstructionResult reconstruct_image(const Tensor& image01, const AsrNetParams& params,
                                       unsigned threads) {
  return run_blockwise(
      image01, params.config.block_size, threads,
      [&](const Tensor& blk) { return asrnet_sample(blk, params); },
      [&](const Tensor& y) { return asrnet_reconstruct(y, params); });
}

ReconstructionResult reconstruct_image(const Tensor& image01, const AnyModel& model,
                                       unsigned threads) {
  if (const auto* csr = std::get_if<CsrNetParams>(&model)) {
    MeasurementMatrix phi = MeasurementMatrix::generate(csr->config.m(), csr->config.n(),
                                                        csr->matrix_seed);
    return reconstruct_image(image01, *csr, phi, threads);
  }
  return reconstruct_image(image01, std::get<AsrNetParams>(model), threads);
}

std::string EvalReport::to_csv() const {
  std::string out = "image,arch,mr,psnr_db,seconds\n";
  for (const EvalRow& r : rows) out += format_csv_row(r);
  return out;
}

void EvalReport::save_csv(const std::filesystem::path& path) const {
  detail::atomic_write_file(path, to_csv());
}

EvalReport benchmark(const std::vector<AnyModel>& models,
                     const std::filesystem::path& test_dir,
                     const std::filesystem::path& csv_out, unsigned threads,
                     const std::filesystem::path& recon_dir) {
  namespace fs = std::filesystem;
  if (threads == 0) threads = default_thread_count();
  if (models.empty()) throw ConfigError("benchmark: no models given");
  if (!fs::is_directory(test_dir))
    throw ConfigError("benchmark: " + test_dir.string() + " is not a directory");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(test_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<std::pair<std::string, Tensor>> images;
  for (const auto& f : files) {
    try {
      images.emplace_back(f.filename().string(), read_image01(f));
    } catch (const IoError& e) {
      std::cerr << "benchmark: skipping " << f.string() << " (" << e.what() << ")\n";
    }
  }
  if (images.empty())
    throw ConfigError("benchmark: no readable images in " + test_dir.string());

  EvalReport report;
  report.threads = threads;
  for (const AnyModel& model : models) {
    const Architecture arch = model_architecture(model);
    const SensingConfig sc = std::visit([](const auto& p) { return p.config; }, model);
    const double mr =
        static_cast<double>(sc.m()) / static_cast<double>(sc.n());  // effective rate

    double psnr_total = 0.0, sec_total = 0.0;
    for (const auto& [name, image] : images) {
      ReconstructionResult recon = reconstruct_image(image, model, threads);  // warm-up
      std::vector<double> times;
      times.reserve(5);
      for (int run = 0; run < 5; ++run) {
        recon = reconstruct_image(image, model, threads);
        times.push_back(recon.seconds);
      }
      EvalRow row;
      row.image = name;
      row.arch = to_string(arch);
      row.mr = mr;
      row.psnr_db = psnr(image, recon.image);
      row.seconds = median5(times);
      report.rows.push_back(row);
      psnr_total += row.psnr_db;
      sec_total += row.seconds;

      if (!recon_dir.empty()) {
        fs::path out = recon_dir / (fs::path(name).stem().string() + std::string("_") +
                                    to_string(arch) + ".pgm");
        write_pgm(out, recon.image);
      }
    }

    EvalRow mean;
    mean.image = "MEAN";
    mean.arch = to_string(arch);
    mean.mr = mr;
    mean.psnr_db = psnr_total / static_cast<double>(images.size());
    mean.seconds = sec_total / static_cast<double>(images.size());
    report.rows.push_back(mean);
  }

  if (!csv_out.empty()) report.save_csv(csv_out);
  return report;
}

}  // namespace cscn
