#include "cscn/sensing.hpp"

#include <cmath>
#include <iostream>

#include "cscn/io_util.hpp"
#include "cscn/rng.hpp"

namespace cscn {

namespace {

constexpr std::uint32_t kMatrixFormatVersion = 1;

// Modified Gram-Schmidt over the rows, each row orthogonalized twice against
// its predecessors. Returns false on rank deficiency.
bool orthonormalize_rows(std::vector<double>& a, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ri = a.data() + i * n;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double* qj = a.data() + j * n;
        double proj = 0.0;
        for (std::size_t t = 0; t < n; ++t) proj += ri[t] * qj[t];
        for (std::size_t t = 0; t < n; ++t) ri[t] -= proj * qj[t];
      }
    }
    double norm2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) norm2 += ri[t] * ri[t];
    if (norm2 < 1e-20) return false;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t t = 0; t < n; ++t) ri[t] *= inv;
  }
  return true;
}

}  // namespace

std::size_t measurements_for_rate(std::size_t block_size, double rate) {
  if (block_size == 0)
    throw ConfigError("measurements_for_rate: block size must be positive");
  if (!(rate > 0.0) || rate > 1.0)
    throw ConfigError("measurements_for_rate: rate must lie in (0, 1], got " +
                      std::to_string(rate));
  const double exact = static_cast<double>(block_size) * static_cast<double>(block_size) * rate;
  const auto m = static_cast<std::size_t>(std::floor(exact + 1e-9));
  return m < 1 ? 1 : m;
}

SensingConfig::SensingConfig(std::size_t block, double rate)
    : block_size(block), measurement_rate(rate) {
  measurements_for_rate(block, rate);  // validates
}

MeasurementMatrix MeasurementMatrix::generate(std::size_t m, std::size_t n,
                                              std::uint64_t seed) {
  if (m == 0 || n == 0)
    throw ConfigError("MeasurementMatrix: dimensions must be positive");
  if (m > n)
    throw ConfigError("MeasurementMatrix: cannot orthonormalize " + std::to_string(m) +
                      " rows in " + std::to_string(n) + "-dimensional space");

  std::uint64_t draw_seed = seed;
  for (;;) {
    SeededRng rng(draw_seed);
    std::vector<double> work(m * n);
    for (double& v : work) v = rng.normal();
    if (orthonormalize_rows(work, m, n)) {
      std::vector<float> entries(m * n);
      for (std::size_t i = 0; i < work.size(); ++i)
        entries[i] = static_cast<float>(work[i]);
      return MeasurementMatrix(m, n, seed, std::move(entries));
    }
    // ~zero probability for Gaussian draws, but the retry keeps generation total
    std::cerr << "MeasurementMatrix: rank-deficient draw for seed " << draw_seed
              << ", retrying with seed " << draw_seed + 1 << "\n";
    draw_seed += 1;
  }
}

double MeasurementMatrix::orthonormality_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    const float* ri = entries_.data() + i * cols_;
    for (std::size_t j = i; j < rows_; ++j) {
      const float* rj = entries_.data() + j * cols_;
      double acc = 0.0;
      for (std::size_t t = 0; t < cols_; ++t)
        acc += static_cast<double>(ri[t]) * static_cast<double>(rj[t]);
      const double want = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(acc - want));
    }
  }
  return worst;
}

void MeasurementMatrix::save(const std::filesystem::path& path) const {
  std::string bytes;
  bytes.reserve(24 + entries_.size() * 4);
  bytes += "CSMM";
  detail::put_u32(bytes, kMatrixFormatVersion);
  detail::put_u32(bytes, static_cast<std::uint32_t>(rows_));
  detail::put_u32(bytes, static_cast<std::uint32_t>(cols_));
  detail::put_u64(bytes, seed_);
  for (float v : entries_) detail::put_f32(bytes, v);
  detail::atomic_write_file(path, bytes);
}

MeasurementMatrix MeasurementMatrix::load(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes, "measurement matrix " + path.string());
  if (r.magic4() != "CSMM")
    throw IoError("measurement matrix " + path.string() + ": bad magic (want CSMM)");
  const std::uint32_t version = r.u32();
  if (version != kMatrixFormatVersion)
    throw IoError("measurement matrix " + path.string() + ": unsupported version " +
                  std::to_string(version));
  const std::size_t m = r.u32();
  const std::size_t n = r.u32();
  const std::uint64_t seed = r.u64();
  if (m == 0 || n == 0 || m > n)
    throw IoError("measurement matrix " + path.string() + ": invalid dimensions " +
                  std::to_string(m) + "x" + std::to_string(n));
  std::vector<float> entries(m * n);
  r.f32_array(entries.data(), entries.size());
  return MeasurementMatrix(m, n, seed, std::move(entries));
}

}  // namespace cscn
