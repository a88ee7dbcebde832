#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "graymode/color.hpp"
#include "graymode/error.hpp"

namespace graymode {

// Row-major interleaved 8-bit RGB raster.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height)
      : width_(width), height_(height), data_(width * height * 3) {}

  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::size_t height() const { return height_; }
  [[nodiscard]] bool empty() const { return width_ == 0 || height_ == 0; }

  [[nodiscard]] Rgb888 at(std::size_t row, std::size_t col) const {
    const std::size_t i = (row * width_ + col) * 3;
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(std::size_t row, std::size_t col, Rgb888 c) {
    const std::size_t i = (row * width_ + col) * 3;
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }

  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return data_; }
  [[nodiscard]] std::span<std::uint8_t> bytes() { return data_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height)
      : width_(width), height_(height), data_(width * height) {}

  [[nodiscard]] std::size_t width() const { return width_; }
  [[nodiscard]] std::size_t height() const { return height_; }
  [[nodiscard]] bool empty() const { return width_ == 0 || height_ == 0; }

  [[nodiscard]] int at(std::size_t row, std::size_t col) const {
    return data_[row * width_ + col];
  }
  void set(std::size_t row, std::size_t col, int level) {
    data_[row * width_ + col] = static_cast<std::uint8_t>(level);
  }

  [[nodiscard]] std::span<const std::uint8_t> bytes() const { return data_; }
  [[nodiscard]] std::span<std::uint8_t> bytes() { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> data_;
};

// Elementwise projection. Per pixel: three products and two additions,
// then truncation; n(2D - 1) arithmetic operations for n pixels, D = 3.
[[nodiscard]] inline GrayImage apply_image(const LinearOperator& op,
                                           const RgbImage& image) {
  if (image.empty()) throw EmptyInputError("cannot convert an empty image");
  GrayImage out(image.width(), image.height());
  const WeightTable w(op);
  const auto src = image.bytes();
  auto dst = out.bytes();
  for (std::size_t i = 0, n = dst.size(); i < n; ++i) {
    const std::uint8_t* px = &src[i * 3];
    dst[i] = static_cast<std::uint8_t>(
        WeightTable::truncate(w.red(px[0]) + w.green(px[1]) + w.blue(px[2])));
  }
  return out;
}

}  // namespace graymode
