#include "fmer/image.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "fmer/error.hpp"

namespace fmer {

namespace {

struct PnmHeader {
  std::string magic;
  int cols = 0;
  int rows = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

// Reads the whitespace/comment separated header tokens of a binary PNM file.
PnmHeader parse_pnm_header(const std::vector<char>& bytes, const std::string& where) {
  std::size_t pos = 0;
  auto next_token = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      token.push_back(bytes[pos++]);
    }
    if (token.empty()) throw ParseError(where + ": truncated PNM header");
    return token;
  };
  auto next_int = [&]() {
    const std::string token = next_token();
    try {
      std::size_t used = 0;
      const int value = std::stoi(token, &used);
      if (used != token.size() || value <= 0) throw ParseError(where + ": bad PNM header value '" + token + "'");
      return value;
    } catch (const std::logic_error&) {
      throw ParseError(where + ": bad PNM header value '" + token + "'");
    }
  };

  PnmHeader header;
  header.magic = next_token();
  header.cols = next_int();
  header.rows = next_int();
  header.maxval = next_int();
  // exactly one whitespace byte separates the header from the raster
  ++pos;
  header.data_offset = pos;
  return header;
}

GrayImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto where = path.string();
  const PnmHeader header = parse_pnm_header(bytes, where);
  if (header.magic != "P5" && header.magic != "P6") {
    throw ParseError(where + ": unsupported PNM type " + header.magic);
  }
  if (header.maxval != 255) throw ParseError(where + ": only maxval 255 is supported");

  const int channels = header.magic == "P5" ? 1 : 3;
  const std::size_t count = static_cast<std::size_t>(header.rows) * header.cols;
  if (bytes.size() < header.data_offset + count * channels) {
    throw ParseError(where + ": truncated raster");
  }
  const auto* raster = reinterpret_cast<const std::uint8_t*>(bytes.data() + header.data_offset);
  GrayImage image(header.rows, header.cols);
  if (channels == 1) {
    std::memcpy(image.pixels.data(), raster, count);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      image.pixels[i] = luma(raster[3 * i], raster[3 * i + 1], raster[3 * i + 2]);
    }
  }
  return image;
}

GrayImage read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw ParseError(path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw ParseError(path.string() + ": " + png.message);
  }
  GrayImage image(static_cast<int>(png.height), static_cast<int>(png.width));
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    image.pixels[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  return image;
}

void write_png_raw(const std::filesystem::path& path, int rows, int cols, png_uint_32 format,
                   const std::uint8_t* data) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(cols);
  png.height = static_cast<png_uint_32>(rows);
  png.format = format;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, data, 0, nullptr)) {
    throw IoError(path.string() + ": " + png.message);
  }
}

}  // namespace

std::uint8_t luma(std::uint8_t red, std::uint8_t green, std::uint8_t blue) noexcept {
  const unsigned weighted = 299u * red + 587u * green + 114u * blue + 500u;
  const unsigned value = weighted / 1000u;
  return static_cast<std::uint8_t>(value > 255u ? 255u : value);
}

GrayImage to_grayscale(const RgbImage& rgb) {
  GrayImage gray(rgb.rows, rgb.cols);
  const std::uint8_t* p = rgb.pixels.data();
  for (std::size_t i = 0; i < gray.pixels.size(); ++i, p += 3) {
    gray.pixels[i] = luma(p[0], p[1], p[2]);
  }
  return gray;
}

GrayImage read_image(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError("no such file: " + path.string());
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") return read_png(path);
  return read_pnm(path);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.cols << ' ' << image.rows << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  write_png_raw(path, image.rows, image.cols, PNG_FORMAT_GRAY, image.pixels.data());
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_png_raw(path, image.rows, image.cols, PNG_FORMAT_RGB, image.pixels.data());
}

}  // namespace fmer
