#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cscn/tensor.hpp"

namespace cscn {

enum class Split { train, validation };

inline const char* to_string(Split s) {
  return s == Split::train ? "train" : "validation";
}

// BxB luminance patches in [0,1] plus the manifest they came from.
struct PatchDataset {
  std::size_t block_size = 32;
  std::size_t stride = 14;
  Split split = Split::train;
  std::vector<Tensor> patches;
  std::vector<std::string> sources;  // accepted files, lexicographic order
};

// Top-left anchored sliding windows; partial windows are discarded, images
// smaller than the window contribute nothing.
std::vector<Tensor> extract_patches(const Tensor& image01, std::size_t block,
                                    std::size_t stride);

// Patch extraction over in-memory images (deterministic image order is the
// caller's responsibility). Throws ConfigError when no patches result.
PatchDataset dataset_from_images(const std::vector<Tensor>& images, std::size_t block,
                                 std::size_t stride, Split split,
                                 std::vector<std::string> names = {});

// Reads every regular file in the directory as PGM/PPM in lexicographic
// order; unreadable files are skipped with a warning on stderr.
PatchDataset build_dataset(const std::filesystem::path& dir, std::size_t block,
                           std::size_t stride, Split split);

}  // namespace cscn
