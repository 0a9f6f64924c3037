#pragma once

#include <filesystem>
#include <vector>

namespace cvos {

// Single-channel image, row-major, intensities in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w) : height(h), width(w) {
    pixels.assign(static_cast<std::size_t>(h) * w, 0.0);
  }

  double& at(int r, int c) {
    return pixels[static_cast<std::size_t>(r) * width + c];
  }
  double at(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * width + c];
  }

  bool operator==(const Image&) const = default;
};

// Binary PGM (P5), 8-bit. Values are quantized with round(v*255) on write
// and mapped back as v/255.0 on read.
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Image& image);

}  // namespace cvos
