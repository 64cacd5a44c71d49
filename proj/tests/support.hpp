#pragma once

// Shared test fixtures: independent oracles (naive convolution, direct
// matvec, sliding-window enumeration), a deterministic synthetic image
// source, and temp-dir plumbing. Oracles here stay deliberately naive so
// they cannot share a bug with the library kernels.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cscn/pgm.hpp"
#include "cscn/rng.hpp"
#include "cscn/sensing.hpp"
#include "cscn/tensor.hpp"

namespace testsupport {

class TempDir {
public:
  TempDir() {
    namespace fs = std::filesystem;
    static std::uint64_t counter = 0;
    const fs::path base = fs::temp_directory_path();
    do {
      path_ = base / ("cscn_test_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    } while (fs::exists(path_));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// Six explicit loops, zero padding (k-1)/2, no shortcuts.
template <typename T>
cscn::TensorT<T> naive_conv2d(const cscn::TensorT<T>& in, const cscn::TensorT<T>& kernels,
                              const cscn::TensorT<T>& bias) {
  const std::size_t C = in.extent(0), H = in.extent(1), W = in.extent(2);
  const std::size_t O = kernels.extent(0), k = kernels.extent(2);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
  cscn::TensorT<T> out(cscn::Shape{O, H, W});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        T acc = bias.empty() ? T{0} : bias[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t u = 0; u < k; ++u)
            for (std::size_t v = 0; v < k; ++v) {
              const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i + u) - pad;
              const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j + v) - pad;
              if (si < 0 || sj < 0 || si >= static_cast<std::ptrdiff_t>(H) ||
                  sj >= static_cast<std::ptrdiff_t>(W))
                continue;
              acc += kernels(o, c, u, v) * in(c, static_cast<std::size_t>(si),
                                              static_cast<std::size_t>(sj));
            }
        out(o, i, j) = acc;
      }
  return out;
}

template <typename T>
cscn::TensorT<T> naive_matvec(const cscn::TensorT<T>& w, const cscn::TensorT<T>& x,
                              const cscn::TensorT<T>& b) {
  const std::size_t m = w.extent(0), n = w.extent(1);
  cscn::TensorT<T> out(cscn::Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    T acc = b.empty() ? T{0} : b[i];
    for (std::size_t j = 0; j < n; ++j) acc += w(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

// Direct sliding-window enumeration, no closed-form arithmetic.
inline std::size_t count_windows(std::size_t H, std::size_t W, std::size_t block,
                                 std::size_t stride) {
  std::size_t count = 0;
  if (H < block || W < block) return 0;
  for (std::size_t i = 0; i + block <= H; i += stride)
    for (std::size_t j = 0; j + block <= W; j += stride) ++count;
  return count;
}

// Multi-octave value noise mapped to [0.03, 0.97]: coarse-to-fine white noise
// on lattices, bilinearly upsampled with geometrically decaying weights, so
// the spectrum falls off the way photographic content does.
inline cscn::Tensor synthetic_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  cscn::SeededRng rng(seed);
  std::vector<double> acc(h * w, 0.0);
  double weight = 1.0;
  for (std::size_t grid = 2; grid <= 64; grid *= 2) {
    std::vector<double> lattice((grid + 1) * (grid + 1));
    for (auto& v : lattice) v = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < h; ++i) {
      const double fy = static_cast<double>(grid) * static_cast<double>(i) /
                        static_cast<double>(h);
      const std::size_t iy = static_cast<std::size_t>(fy);
      const double ty = fy - static_cast<double>(iy);
      for (std::size_t j = 0; j < w; ++j) {
        const double fx = static_cast<double>(grid) * static_cast<double>(j) /
                          static_cast<double>(w);
        const std::size_t ix = static_cast<std::size_t>(fx);
        const double tx = fx - static_cast<double>(ix);
        const double a00 = lattice[iy * (grid + 1) + ix];
        const double a01 = lattice[iy * (grid + 1) + ix + 1];
        const double a10 = lattice[(iy + 1) * (grid + 1) + ix];
        const double a11 = lattice[(iy + 1) * (grid + 1) + ix + 1];
        const double top = a00 + tx * (a01 - a00);
        const double bot = a10 + tx * (a11 - a10);
        acc[i * w + j] += weight * (top + ty * (bot - top));
      }
    }
    weight *= 0.55;
  }
  double lo = acc[0], hi = acc[0];
  for (double v : acc) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  cscn::Tensor img(cscn::Shape{h, w});
  for (std::size_t i = 0; i < acc.size(); ++i)
    img[i] = static_cast<float>(0.03 + 0.94 * (acc[i] - lo) / span);
  return img;
}

inline std::vector<cscn::Tensor> synthetic_images(std::size_t count, std::size_t h,
                                                  std::size_t w, std::uint64_t seed) {
  std::vector<cscn::Tensor> imgs;
  imgs.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    imgs.push_back(synthetic_image(h, w, cscn::derive_seed(seed, i)));
  return imgs;
}

inline void write_image_dir(const std::filesystem::path& dir, std::size_t count,
                            std::size_t h, std::size_t w, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%03zu.pgm", i);
    cscn::write_pgm(dir / name, synthetic_image(h, w, cscn::derive_seed(seed, i)));
  }
}

// Round-trips arbitrary entries through the CSMM container; the only public
// way to build a matrix with hand-picked rows (selector matrices in tests).
inline cscn::MeasurementMatrix matrix_from_entries(std::size_t m, std::size_t n,
                                                   const std::vector<float>& entries,
                                                   const TempDir& tmp) {
  std::string bytes = "CSMM";
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(m));
  put_u32(static_cast<std::uint32_t>(n));
  for (int i = 0; i < 8; ++i) bytes.push_back(0);  // seed
  for (float v : entries) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 4);
    put_u32(bits);
  }
  const auto path = tmp / "handmade.csmm";
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  return cscn::MeasurementMatrix::load(path);
}

}  // namespace testsupport
