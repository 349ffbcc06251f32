#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fmer {

/// Row-major 8-bit single-channel image.
struct GrayImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int r, int c, std::uint8_t fill = 0)
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c, fill) {}

  std::uint8_t& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  std::uint8_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  const std::uint8_t* row(int r) const { return pixels.data() + static_cast<std::size_t>(r) * cols; }

  bool operator==(const GrayImage&) const = default;
};

/// Row-major interleaved RGB, 8 bits per channel.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // size rows*cols*3

  RgbImage() = default;
  RgbImage(int r, int c) : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * c * 3, 0) {}

  void set(int r, int c, std::uint8_t red, std::uint8_t green, std::uint8_t blue) {
    auto* p = pixels.data() + (static_cast<std::size_t>(r) * cols + c) * 3;
    p[0] = red;
    p[1] = green;
    p[2] = blue;
  }
};

/// BT.601 luma with round-half-up: (299 R + 587 G + 114 B + 500) / 1000.
std::uint8_t luma(std::uint8_t red, std::uint8_t green, std::uint8_t blue) noexcept;

GrayImage to_grayscale(const RgbImage& rgb);

/// Reads a grayscale image. P5 PGM (maxval 255) is the canonical format; P6
/// PPM and PNG of any colour type are converted to grayscale on load.
/// Throws IoError / ParseError.
GrayImage read_image(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace fmer
