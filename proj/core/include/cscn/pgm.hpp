#pragma once

#include <filesystem>

#include "cscn/tensor.hpp"

namespace cscn {

// Reads a binary PGM (P5) or PPM (P6) with maxval <= 255 and returns an HxW
// luminance image scaled to [0, 1]. Color inputs are reduced with BT.601
// weights (0.299 R + 0.587 G + 0.114 B).
Tensor read_image01(const std::filesystem::path& path);

// Writes a binary 8-bit PGM (P5). Values are clamped to [0, 1] and quantized
// as round(255 * v) at write time only.
void write_pgm(const std::filesystem::path& path, const Tensor& image01);

}  // namespace cscn
