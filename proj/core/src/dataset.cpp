#include "cscn/dataset.hpp"

#include <algorithm>
#include <iostream>

#include "cscn/pgm.hpp"

namespace cscn {

std::vector<Tensor> extract_patches(const Tensor& image01, std::size_t block,
                                    std::size_t stride) {
  if (image01.rank() != 2)
    throw DimensionError("extract_patches: image must be HxW, got " +
                         image01.shape().str());
  if (block == 0 || stride == 0)
    throw ConfigError("extract_patches: block and stride must be positive");

  const std::size_t H = image01.extent(0), W = image01.extent(1);
  std::vector<Tensor> patches;
  if (H < block || W < block) return patches;

  const std::size_t rows = (H - block) / stride + 1;
  const std::size_t cols = (W - block) / stride + 1;
  patches.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      Tensor p(Shape{block, block});
      const std::size_t i0 = r * stride, j0 = c * stride;
      for (std::size_t i = 0; i < block; ++i)
        for (std::size_t j = 0; j < block; ++j) p(i, j) = image01(i0 + i, j0 + j);
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

PatchDataset dataset_from_images(const std::vector<Tensor>& images, std::size_t block,
                                 std::size_t stride, Split split,
                                 std::vector<std::string> names) {
  PatchDataset ds;
  ds.block_size = block;
  ds.stride = stride;
  ds.split = split;
  ds.sources = std::move(names);
  for (const Tensor& img : images) {
    auto patches = extract_patches(img, block, stride);
    for (auto& p : patches) ds.patches.push_back(std::move(p));
  }
  if (ds.patches.empty())
    throw ConfigError("dataset: no patches extracted (block " + std::to_string(block) +
                      ", stride " + std::to_string(stride) + ", " +
                      std::to_string(images.size()) + " images)");
  return ds;
}

PatchDataset build_dataset(const std::filesystem::path& dir, std::size_t block,
                           std::size_t stride, Split split) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw ConfigError("dataset: " + dir.string() + " is not a directory");

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<Tensor> images;
  std::vector<std::string> names;
  for (const auto& f : files) {
    try {
      images.push_back(read_image01(f));
      names.push_back(f.filename().string());
    } catch (const IoError& e) {
      std::cerr << "dataset: skipping " << f.string() << " (" << e.what() << ")\n";
    }
  }
  return dataset_from_images(images, block, stride, split, std::move(names));
}

}  // namespace cscn
