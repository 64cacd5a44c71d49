// cscn: block compressive sensing toolkit.
//
// Subcommands: genmatrix, train, reconstruct, bench, gradcheck.
// Exit codes: 0 success, 1 usage/configuration error, 2 data or I/O error,
// 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cscn/dataset.hpp"
#include "cscn/evaluation.hpp"
#include "cscn/gradcheck_suite.hpp"
#include "cscn/model_io.hpp"
#include "cscn/parallel.hpp"
#include "cscn/pgm.hpp"
#include "cscn/sensing.hpp"
#include "cscn/training.hpp"

namespace fs = std::filesystem;
using namespace cscn;

namespace {

int cmd_genmatrix(double mr, std::size_t block, std::uint64_t seed, const std::string& out) {
  SensingConfig config(block, mr);
  MeasurementMatrix phi = MeasurementMatrix::generate(config.m(), config.n(), seed);
  phi.save(out);
  std::printf("m=%zu n=%zu seed=%llu orthonormality_residual=%.3e\n", phi.rows(), phi.cols(),
              static_cast<unsigned long long>(seed), phi.orthonormality_residual());
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

struct TrainArgs {
  std::string arch;
  double mr = 0.25;
  std::string data_dir, val_dir, out, history, final_out;
  std::size_t block = 32;
  std::size_t epochs = 30;
  std::size_t batch = 64;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t seed = 1;
  std::size_t train_stride = 14, val_stride = 21;
  std::size_t checkpoint_interval = 0;
  std::string checkpoint_dir;
  unsigned threads = 0;
  bool lr_halving = false;
  bool sampling_bias = false;
  std::string stack = "standard";
};

int cmd_train(const TrainArgs& a) {
  TrainingConfig cfg;
  cfg.architecture = architecture_from_string(a.arch);
  cfg.sensing = SensingConfig(a.block, a.mr);
  cfg.stack = a.stack == "compact" ? ConvStackSpec::compact() : ConvStackSpec::standard();
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.beta1 = a.beta1;
  cfg.beta2 = a.beta2;
  cfg.epsilon = a.eps;
  cfg.seed = a.seed;
  cfg.checkpoint_interval = a.checkpoint_interval;
  cfg.checkpoint_dir = a.checkpoint_dir;
  if (cfg.checkpoint_interval > 0 && cfg.checkpoint_dir.empty()) {
    cfg.checkpoint_dir = fs::path(a.out).parent_path();
    if (cfg.checkpoint_dir.empty()) cfg.checkpoint_dir = ".";
  }
  cfg.threads = a.threads;
  cfg.halve_lr_every_20_epochs = a.lr_halving;
  cfg.sampling_bias = a.sampling_bias;
  cfg.train_stride = a.train_stride;
  cfg.val_stride = a.val_stride;
  cfg.validate();

  PatchDataset train_set = build_dataset(a.data_dir, a.block, a.train_stride, Split::train);
  PatchDataset val_set = build_dataset(a.val_dir, a.block, a.val_stride, Split::validation);
  std::printf("dataset: %zu training patches, %zu validation patches\n",
              train_set.patches.size(), val_set.patches.size());

  TrainingHistory history;
  if (cfg.architecture == Architecture::csrnet) {
    CsrTrainResult r = train_csrnet(cfg, train_set, val_set);
    save_model(r.best_params, a.out);
    if (!a.final_out.empty()) save_model(r.final_params, a.final_out);
    history = std::move(r.history);
  } else {
    AsrTrainResult r = train_asrnet(cfg, train_set, val_set);
    save_model(r.best_params, a.out);
    if (!a.final_out.empty()) save_model(r.final_params, a.final_out);
    history = std::move(r.history);
  }

  const std::string history_path = a.history.empty() ? a.out + ".history.csv" : a.history;
  history.save_csv(history_path);

  const EpochRecord& last = history.records.back();
  double best = -1;
  for (const auto& rec : history.records) best = std::max(best, rec.val_psnr_db);
  std::printf("epoch %zu: train_loss=%.6g val_loss=%.6g val_psnr=%.3f dB (best %.3f dB)\n",
              last.epoch, last.train_loss, last.val_loss, last.val_psnr_db, best);
  std::printf("wrote %s and %s\n", a.out.c_str(), history_path.c_str());
  return 0;
}

struct ReconstructArgs {
  std::string model, input, output, truth, matrix, report;
  unsigned threads = 0;
};

int cmd_reconstruct(const ReconstructArgs& a) {
  AnyModel model = load_model(a.model);
  Tensor image = read_image01(a.input);

  ReconstructionResult recon;
  if (auto* csr = std::get_if<CsrNetParams>(&model)) {
    MeasurementMatrix phi =
        a.matrix.empty()
            ? MeasurementMatrix::generate(csr->config.m(), csr->config.n(), csr->matrix_seed)
            : MeasurementMatrix::load(a.matrix);
    recon = reconstruct_image(image, *csr, phi, a.threads);
  } else {
    recon = reconstruct_image(image, std::get<AsrNetParams>(model), a.threads);
  }
  write_pgm(a.output, recon.image);

  // self-comparison against the input unless a ground truth is supplied
  Tensor truth = a.truth.empty() ? image : read_image01(a.truth);
  const double db = psnr(truth, recon.image);
  std::printf("image=%s arch=%s psnr_db=%.4f seconds=%.6f\n",
              fs::path(a.input).filename().string().c_str(),
              to_string(model_architecture(model)), db, recon.seconds);
  std::printf("wrote %s\n", a.output.c_str());

  if (!a.report.empty()) {
    const SensingConfig sc = std::visit([](const auto& p) { return p.config; }, model);
    EvalReport report;
    EvalRow row;
    row.image = fs::path(a.input).filename().string();
    row.arch = to_string(model_architecture(model));
    row.mr = static_cast<double>(sc.m()) / static_cast<double>(sc.n());
    row.psnr_db = db;
    row.seconds = recon.seconds;
    report.rows.push_back(row);
    EvalRow mean = row;
    mean.image = "MEAN";
    report.rows.push_back(mean);
    report.save_csv(a.report);
    std::printf("wrote %s\n", a.report.c_str());
  }
  return 0;
}

int cmd_bench(const std::vector<std::string>& model_paths, const std::string& testdir,
              const std::string& csv, unsigned threads, const std::string& outdir) {
  std::vector<AnyModel> models;
  models.reserve(model_paths.size());
  for (const auto& p : model_paths) models.push_back(load_model(p));

  EvalReport report = benchmark(models, testdir, csv, threads, outdir);
  for (const EvalRow& r : report.rows)
    std::printf("%-20s %-7s mr=%-8.4g psnr_db=%-9.4f seconds=%.6f\n", r.image.c_str(),
                r.arch.c_str(), r.mr, r.psnr_db, r.seconds);
  if (!csv.empty()) std::printf("wrote %s\n", csv.c_str());
  return 0;
}

int cmd_gradcheck(bool full) {
  GradCheckReport report = run_gradcheck_suite(full);
  for (const GradCheckEntry& e : report.entries)
    std::printf("%-22s max_rel_error=%.3e threshold=%.0e %s\n", e.name.c_str(),
                e.max_rel_error, e.threshold, e.passed ? "PASS" : "FAIL");
  std::printf("%zu checks in %.1f s: %s\n", report.entries.size(), report.seconds,
              report.all_passed() ? "all passed" : "FAILURES PRESENT");
  if (!report.all_passed())
    throw NumericError("gradcheck: analytic/numeric gradient disagreement");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cscn: block compressive sensing with the CSRNet and ASRNet reconstruction networks"};
  app.set_version_flag("--version", "cscn 0.1.0");
  app.require_subcommand(1);

  // genmatrix
  double gm_mr = 0.25;
  std::size_t gm_block = 32;
  std::uint64_t gm_seed = 1;
  std::string gm_out;
  auto* genmatrix = app.add_subcommand(
      "genmatrix", "Generate a random row-orthonormal measurement matrix (CSMM file)");
  genmatrix->add_option("--mr", gm_mr, "Measurement rate in (0, 1]")->required();
  genmatrix->add_option("--block", gm_block, "Block size B")->capture_default_str();
  genmatrix->add_option("--seed", gm_seed, "Generator seed")->capture_default_str();
  genmatrix->add_option("--out", gm_out, "Output CSMM path")->required();

  // train
  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a reconstruction network");
  train->add_option("--arch", ta.arch, "Architecture: csrnet or asrnet")->required();
  train->add_option("--mr", ta.mr, "Measurement rate in (0, 1]")->required();
  train->add_option("--data", ta.data_dir, "Training image directory")->required();
  train->add_option("--val", ta.val_dir, "Validation image directory")->required();
  train->add_option("--out", ta.out, "Output model path (best validation PSNR)")->required();
  train->add_option("--final-out", ta.final_out, "Also write the final-epoch model here");
  train->add_option("--history", ta.history, "History CSV path (default: <out>.history.csv)");
  train->add_option("--block", ta.block, "Block size B")->capture_default_str();
  train->add_option("--epochs", ta.epochs, "Training epochs")->capture_default_str();
  train->add_option("--batch", ta.batch, "Mini-batch size")->capture_default_str();
  train->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();
  train->add_option("--beta1", ta.beta1, "Adam beta1")->capture_default_str();
  train->add_option("--beta2", ta.beta2, "Adam beta2")->capture_default_str();
  train->add_option("--eps", ta.eps, "Adam epsilon")->capture_default_str();
  train->add_option("--seed", ta.seed, "Run seed (matrix, init, shuffling)")->capture_default_str();
  train->add_option("--train-stride", ta.train_stride, "Patch stride, training")->capture_default_str();
  train->add_option("--val-stride", ta.val_stride, "Patch stride, validation")->capture_default_str();
  train->add_option("--checkpoint-interval", ta.checkpoint_interval,
                    "Epochs between checkpoints (0 = off)")->capture_default_str();
  train->add_option("--checkpoint-dir", ta.checkpoint_dir, "Checkpoint directory");
  train->add_option("--threads", ta.threads, "Worker threads (0 = CSCN_THREADS or cores)")->capture_default_str();
  train->add_flag("--lr-halving", ta.lr_halving, "Halve the learning rate every 20 epochs");
  train->add_flag("--sampling-bias", ta.sampling_bias,
                  "Give the ASRNet sampling layer a bias term");
  train->add_option("--stack", ta.stack, "Conv stack size: standard or compact")->capture_default_str()
      ->check(CLI::IsMember({"standard", "compact"}));

  // reconstruct
  ReconstructArgs ra;
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct one image with a model");
  reconstruct->add_option("--model", ra.model, "Model file")->required();
  reconstruct->add_option("--input", ra.input, "Input PGM image")->required();
  reconstruct->add_option("--output", ra.output, "Output PGM path")->required();
  reconstruct->add_option("--truth", ra.truth, "Ground-truth PGM for PSNR (default: input)");
  reconstruct->add_option("--matrix", ra.matrix,
                          "CSMM matrix file (CSRNet; default: regenerate from model seed)");
  reconstruct->add_option("--report", ra.report, "Also write a single-image CSV report here");
  reconstruct->add_option("--threads", ra.threads, "Worker threads")->capture_default_str();

  // bench
  std::vector<std::string> bench_models;
  std::string bench_testdir, bench_csv, bench_outdir;
  unsigned bench_threads = 0;
  auto* bench = app.add_subcommand("bench", "PSNR/timing benchmark over a test directory");
  bench->add_option("--models", bench_models, "Model files")->required()->expected(-1);
  bench->add_option("--testdir", bench_testdir, "Directory of test PGM images")->required();
  bench->add_option("--csv", bench_csv, "Output CSV path")->required();
  bench->add_option("--outdir", bench_outdir, "Keep reconstructed images here");
  bench->add_option("--threads", bench_threads, "Worker threads")->capture_default_str();

  // gradcheck
  bool gc_full = false;
  auto* gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference verification of every backward pass");
  gradcheck->add_flag("--full", gc_full, "Also check production-size layers (sampled)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*genmatrix) return cmd_genmatrix(gm_mr, gm_block, gm_seed, gm_out);
    if (*train) return cmd_train(ta);
    if (*reconstruct) return cmd_reconstruct(ra);
    if (*bench) return cmd_bench(bench_models, bench_testdir, bench_csv, bench_threads,
                                 bench_outdir);
    if (*gradcheck) return cmd_gradcheck(gc_full);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {  // IoError, DimensionError, filesystem
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
