#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "cscn/gemm.hpp"
#include "cscn/tensor.hpp"

namespace cscn {

// m = max(1, floor(B^2 * rate)). Floor never exceeds the requested rate; a
// tiny epsilon absorbs decimal rates whose product lands one ulp under an
// integer.
std::size_t measurements_for_rate(std::size_t block_size, double rate);

// Block size and measurement rate; n and m are derived.
struct SensingConfig {
  std::size_t block_size = 32;
  double measurement_rate = 0.25;

  SensingConfig() = default;
  SensingConfig(std::size_t block, double rate);

  std::size_t n() const { return block_size * block_size; }
  std::size_t m() const { return measurements_for_rate(block_size, measurement_rate); }
};

// m x n sampling operator with orthonormal rows, a pure function of
// (m, n, seed). Entries are drawn i.i.d. standard normal in double precision,
// the rows are Gram-Schmidt orthonormalized with one re-orthogonalization
// pass, and the result is rounded once to float32 (the storage and file
// precision).
class MeasurementMatrix {
public:
  static MeasurementMatrix generate(std::size_t m, std::size_t n, std::uint64_t seed);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<float>& entries() const { return entries_; }
  float at(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  // max |Phi Phi^T - I| accumulated in double.
  double orthonormality_residual() const;

  // "CSMM" container: magic, version u32, m u32, n u32, seed u64, then
  // m*n float32 entries, all little-endian row-major.
  void save(const std::filesystem::path& path) const;
  static MeasurementMatrix load(const std::filesystem::path& path);

private:
  MeasurementMatrix(std::size_t m, std::size_t n, std::uint64_t seed,
                    std::vector<float> entries)
      : rows_(m), cols_(n), seed_(seed), entries_(std::move(entries)) {}

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<float> entries_;
};

// Tiling bookkeeping: padded dims are the smallest multiples of the block
// size covering the original image.
struct BlockGeometry {
  std::size_t original_height = 0;
  std::size_t original_width = 0;
  std::size_t padded_height = 0;
  std::size_t padded_width = 0;
  std::size_t blocks_per_column = 0;  // vertical block count
  std::size_t blocks_per_row = 0;     // horizontal block count
  std::size_t block_size = 0;

  std::size_t block_count() const { return blocks_per_column * blocks_per_row; }
};

// Edge-replicates the image up to block multiples, then cuts non-overlapping
// BxB blocks in row-major block order.
template <typename T>
std::pair<std::vector<TensorT<T>>, BlockGeometry> tile_blocks(const TensorT<T>& image,
                                                              std::size_t block_size) {
  if (image.rank() != 2)
    throw DimensionError("tile_blocks: image must be HxW, got " + image.shape().str());
  if (block_size == 0) throw ConfigError("tile_blocks: block size must be positive");

  const std::size_t H = image.extent(0), W = image.extent(1);
  BlockGeometry geo;
  geo.original_height = H;
  geo.original_width = W;
  geo.block_size = block_size;
  geo.blocks_per_column = (H + block_size - 1) / block_size;
  geo.blocks_per_row = (W + block_size - 1) / block_size;
  geo.padded_height = geo.blocks_per_column * block_size;
  geo.padded_width = geo.blocks_per_row * block_size;

  std::vector<TensorT<T>> blocks;
  blocks.reserve(geo.block_count());
  for (std::size_t bi = 0; bi < geo.blocks_per_column; ++bi) {
    for (std::size_t bj = 0; bj < geo.blocks_per_row; ++bj) {
      TensorT<T> blk(Shape{block_size, block_size});
      for (std::size_t i = 0; i < block_size; ++i) {
        const std::size_t si = std::min(bi * block_size + i, H - 1);
        for (std::size_t j = 0; j < block_size; ++j) {
          const std::size_t sj = std::min(bj * block_size + j, W - 1);
          blk(i, j) = image(si, sj);
        }
      }
      blocks.push_back(std::move(blk));
    }
  }
  return {std::move(blocks), geo};
}

// Inverse of tile_blocks: paste row-major, crop to the original dims.
template <typename T>
TensorT<T> assemble_blocks(const std::vector<TensorT<T>>& blocks, const BlockGeometry& geo) {
  if (blocks.size() != geo.block_count())
    throw DimensionError("assemble_blocks: got " + std::to_string(blocks.size()) +
                         " blocks, geometry expects " + std::to_string(geo.block_count()));
  const std::size_t B = geo.block_size;
  TensorT<T> out(Shape{geo.original_height, geo.original_width});
  for (std::size_t bi = 0; bi < geo.blocks_per_column; ++bi) {
    for (std::size_t bj = 0; bj < geo.blocks_per_row; ++bj) {
      const TensorT<T>& blk = blocks[bi * geo.blocks_per_row + bj];
      if (blk.shape() != Shape{B, B})
        throw DimensionError("assemble_blocks: block " + blk.shape().str() +
                             " does not match block size " + std::to_string(B));
      for (std::size_t i = 0; i < B; ++i) {
        const std::size_t di = bi * B + i;
        if (di >= geo.original_height) break;
        for (std::size_t j = 0; j < B; ++j) {
          const std::size_t dj = bj * B + j;
          if (dj >= geo.original_width) break;
          out(di, dj) = blk(i, j);
        }
      }
    }
  }
  return out;
}

// y = Phi * vec(block), row-major vectorization, double accumulation.
template <typename T>
TensorT<T> block_sample(const TensorT<T>& block, const MeasurementMatrix& phi) {
  if (block.size() != phi.cols())
    throw DimensionError("block_sample: block " + block.shape().str() + " vs matrix " +
                         std::to_string(phi.rows()) + "x" + std::to_string(phi.cols()));
  TensorT<T> y(Shape{phi.rows()});
  const float* e = phi.entries().data();
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    double acc = 0.0;
    const float* row = e + i * phi.cols();
    for (std::size_t j = 0; j < phi.cols(); ++j)
      acc += static_cast<double>(row[j]) * static_cast<double>(block[j]);
    y[i] = static_cast<T>(acc);
  }
  return y;
}

// Minimum-norm linear reconstruction x = Phi^T y, reshaped to BxB. Exact
// pseudo-inverse because the rows are orthonormal.
template <typename T>
TensorT<T> adjoint_baseline(const TensorT<T>& y, const MeasurementMatrix& phi) {
  if (y.size() != phi.rows())
    throw DimensionError("adjoint_baseline: y " + y.shape().str() + " vs matrix " +
                         std::to_string(phi.rows()) + "x" + std::to_string(phi.cols()));
  std::size_t B = 1;
  while (B * B < phi.cols()) ++B;
  if (B * B != phi.cols())
    throw DimensionError("adjoint_baseline: matrix columns " + std::to_string(phi.cols()) +
                         " are not a square block");
  std::vector<double> acc(phi.cols(), 0.0);
  const float* e = phi.entries().data();
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    const double yi = static_cast<double>(y[i]);
    const float* row = e + i * phi.cols();
    for (std::size_t j = 0; j < phi.cols(); ++j)
      acc[j] += yi * static_cast<double>(row[j]);
  }
  TensorT<T> out(Shape{B, B});
  for (std::size_t j = 0; j < phi.cols(); ++j) out[j] = static_cast<T>(acc[j]);
  return out;
}

}  // namespace cscn
