#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "graymode/error.hpp"
#include "graymode/image.hpp"

namespace graymode::io {

enum class Format { png, ppm };

// Chooses by extension: .ppm/.pgm/.pnm are netpbm, everything else PNG.
[[nodiscard]] inline Format format_for(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return Format::ppm;
  return Format::png;
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  return f;
}

// Netpbm header token, skipping whitespace and '#' comments.
inline std::size_t read_header_number(std::istream& in, const std::string& name) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (c != EOF && std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  std::size_t v = 0;
  if (!(in >> v)) throw IoError(name + ": malformed netpbm header");
  return v;
}

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

inline void write_png_rows(const std::filesystem::path& path, std::size_t width,
                           std::size_t height, int color_type,
                           const std::uint8_t* data, std::size_t row_bytes) {
  auto file = open(path, "wb");
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            png_error_fn, png_warning_fn);
  if (!png) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed for " + path.string() + ": " + err);
  }
  // The 1D reference strip is 16.7M pixels wide.
  png_set_user_limits(png, 0x7fffffff, 0x7fffffff);
  png_init_io(png, file.get());
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t row = 0; row < height; ++row) {
    png_write_row(png, const_cast<png_bytep>(data + row * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(file.get()) != 0) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto bytes = image.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto bytes = image.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_png(const std::filesystem::path& path, const RgbImage& image) {
  detail::write_png_rows(path, image.width(), image.height(), PNG_COLOR_TYPE_RGB,
                         image.bytes().data(), image.width() * 3);
}

inline void write_png(const std::filesystem::path& path, const GrayImage& image) {
  detail::write_png_rows(path, image.width(), image.height(), PNG_COLOR_TYPE_GRAY,
                         image.bytes().data(), image.width());
}

inline void write(const std::filesystem::path& path, const RgbImage& image) {
  format_for(path) == Format::ppm ? write_ppm(path, image) : write_png(path, image);
}

inline void write(const std::filesystem::path& path, const GrayImage& image) {
  format_for(path) == Format::ppm ? write_pgm(path, image) : write_png(path, image);
}

// Reads P6 (color) or P5 (gray, expanded to RGB) with maxval 255.
[[nodiscard]] inline RgbImage read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P6" && magic != "P5") {
    throw IoError(path.string() + ": not a binary PPM/PGM file");
  }
  const std::size_t width = detail::read_header_number(in, path.string());
  const std::size_t height = detail::read_header_number(in, path.string());
  const std::size_t maxval = detail::read_header_number(in, path.string());
  if (maxval != 255) throw IoError(path.string() + ": only 8-bit netpbm is supported");
  in.get();  // single whitespace before the raster
  RgbImage image(width, height);
  if (magic == "P6") {
    auto bytes = image.bytes();
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  } else {
    std::vector<std::uint8_t> gray(width * height);
    in.read(reinterpret_cast<char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    auto bytes = image.bytes();
    for (std::size_t i = 0; i < gray.size(); ++i) {
      bytes[3 * i] = bytes[3 * i + 1] = bytes[3 * i + 2] = gray[i];
    }
  }
  if (!in) throw IoError(path.string() + ": truncated raster");
  return image;
}

// Any PNG, normalized to 8-bit RGB (alpha dropped, palettes expanded).
[[nodiscard]] inline RgbImage read_png(const std::filesystem::path& path) {
  auto file = detail::open(path, "rb");
  std::uint8_t sig[8] = {};
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           detail::png_error_fn, detail::png_warning_fn);
  if (!png) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: out of memory");
  }
  RgbImage image;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png read failed for " + path.string() + ": " + err);
  }
  png_set_user_limits(png, 0x7fffffff, 0x7fffffff);
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t width = png_get_image_width(png, info);
  const std::size_t height = png_get_image_height(png, info);
  image = RgbImage(width, height);
  auto bytes = image.bytes();
  for (std::size_t row = 0; row < height; ++row) {
    png_read_row(png, bytes.data() + row * width * 3, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

[[nodiscard]] inline RgbImage read(const std::filesystem::path& path) {
  return format_for(path) == Format::ppm ? read_netpbm(path) : read_png(path);
}

}  // namespace graymode::io
