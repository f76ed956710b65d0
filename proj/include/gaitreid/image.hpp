#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaitreid/tensor.hpp"

namespace gaitreid {

// Interleaved 8-bit image, row-major (h, w, channels). channels is 1 or 3.
struct ImageU8 {
  int channels = 0;
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> v;

  ImageU8() = default;
  ImageU8(int c, int height, int width)
      : channels(c), h(height), w(width),
        v(static_cast<std::size_t>(c) * height * width, 0) {}

  std::uint8_t& at(int y, int x, int c) {
    return v[(static_cast<std::size_t>(y) * w + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return v[(static_cast<std::size_t>(y) * w + x) * channels + c];
  }
};

void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);  // returns 1 or 3 channels, 8-bit

// (c, h, w) planar double tensor in [0,1] from interleaved bytes.
Tensor to_tensor(const ImageU8& img);
// Quantizes a (c, h, w) or (h, w) tensor in [0,1] to 8-bit.
ImageU8 to_image(const Tensor& t);

}  // namespace gaitreid
