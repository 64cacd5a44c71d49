#include "cscn/pgm.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "cscn/io_util.hpp"

namespace cscn {

namespace {

// PNM token scanner: skips whitespace and '#' comments.
struct PnmScanner {
  const std::string& bytes;
  std::size_t pos = 0;
  std::string what;

  void skip_space() {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::size_t integer() {
    skip_space();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9')
      throw IoError(what + ": malformed header");
    std::size_t v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
      if (v > 1u << 30) throw IoError(what + ": absurd header value");
      ++pos;
    }
    return v;
  }
};

}  // namespace

Tensor read_image01(const std::filesystem::path& path) {
  const std::string what = "image " + path.string();
  const std::string bytes = detail::read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw IoError(what + ": not a binary PGM (P5) or PPM (P6) file");
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;

  PnmScanner scan{bytes, 2, what};
  const std::size_t width = scan.integer();
  const std::size_t height = scan.integer();
  const std::size_t maxval = scan.integer();
  if (width == 0 || height == 0) throw IoError(what + ": zero image dimensions");
  if (maxval == 0 || maxval > 255)
    throw IoError(what + ": unsupported maxval " + std::to_string(maxval) +
                  " (8-bit images only)");
  scan.pos += 1;  // single whitespace byte after maxval

  const std::size_t need = width * height * channels;
  if (scan.pos + need > bytes.size()) throw IoError(what + ": truncated pixel data");
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data()) + scan.pos;

  Tensor img(Shape{height, width});
  const float inv = 1.0f / static_cast<float>(maxval);
  if (channels == 1) {
    for (std::size_t i = 0; i < height * width; ++i)
      img[i] = static_cast<float>(px[i]) * inv;
  } else {
    for (std::size_t i = 0; i < height * width; ++i) {
      const float y = 0.299f * static_cast<float>(px[3 * i]) +
                      0.587f * static_cast<float>(px[3 * i + 1]) +
                      0.114f * static_cast<float>(px[3 * i + 2]);
      img[i] = y * inv;
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Tensor& image01) {
  if (image01.rank() != 2)
    throw DimensionError("write_pgm: image must be HxW, got " + image01.shape().str());
  const std::size_t h = image01.extent(0), w = image01.extent(1);

  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + h * w);
  for (float v : image01) {
    const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    out.push_back(static_cast<char>(
        static_cast<std::uint8_t>(std::lround(255.0f * c))));
  }
  detail::atomic_write_file(path, out);
}

}  // namespace cscn
