#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <new>
#include <string>

#include "graymode/color.hpp"
#include "graymode/error.hpp"
#include "graymode/image.hpp"

namespace graymode::reference {

// Position of a color in the ordered list: red outermost, blue innermost,
// starting at black and ending at white.
class ColorIndex1D {
 public:
  constexpr explicit ColorIndex1D(std::uint32_t index) : index_(check(index)) {}
  [[nodiscard]] constexpr std::uint32_t value() const { return index_; }

 private:
  static constexpr std::uint32_t check(std::uint32_t index) {
    if (index >= kCubeSize) throw RangeError("1D color index outside [0, 256^3)");
    return index;
  }
  std::uint32_t index_;
};

// Red slices per row of the 2D layout; the image is a 16 x 16 mosaic of
// 256 x 256 boxes.
inline constexpr int kSlicesPerRow = 16;
inline constexpr int kSliceRows = kLevels / kSlicesPerRow;
inline constexpr std::size_t kImage2DSide = std::size_t{kLevels} * kSlicesPerRow;

struct Grid2DCoord {
  int row = 0;
  int col = 0;
  friend constexpr bool operator==(Grid2DCoord, Grid2DCoord) = default;
};

[[nodiscard]] constexpr std::uint32_t index_of(Rgb888 c) {
  return (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b;
}

[[nodiscard]] constexpr Rgb888 color_at_1d(ColorIndex1D index) {
  const std::uint32_t i = index.value();
  return {static_cast<std::uint8_t>(i >> 16), static_cast<std::uint8_t>((i >> 8) & 0xff),
          static_cast<std::uint8_t>(i & 0xff)};
}

// Box (v, h) holds red = v * 16 + h; green runs right, blue runs down.
[[nodiscard]] constexpr Grid2DCoord coord_2d(Rgb888 c) {
  const int v = c.r / kSlicesPerRow;
  const int h = c.r - v * kSlicesPerRow;
  return {v * kLevels + c.b, h * kLevels + c.g};
}

// Visits the 65,536 colors with the given red value in list order.
// Disjoint slices may be consumed concurrently.
template <typename Visitor>
void for_each_in_slice(int red, Visitor&& visit) {
  if (red < 0 || red >= kLevels) throw RangeError("red slice outside [0, 255]");
  std::uint32_t index = static_cast<std::uint32_t>(red) << 16;
  for (int g = 0; g < kLevels; ++g) {
    for (int b = 0; b < kLevels; ++b, ++index) {
      visit(ColorIndex1D(index),
            Rgb888{static_cast<std::uint8_t>(red), static_cast<std::uint8_t>(g),
                   static_cast<std::uint8_t>(b)});
    }
  }
}

// Visits all 256^3 colors exactly once in list order.
template <typename Visitor>
void for_each_color(Visitor&& visit) {
  for (int r = 0; r < kLevels; ++r) for_each_in_slice(r, visit);
}

enum class Layout { linear, grid };

namespace detail {

inline RgbImage allocate(std::size_t width, std::size_t height) {
  try {
    return RgbImage(width, height);
  } catch (const std::bad_alloc&) {
    throw ResourceError("cannot allocate a " + std::to_string(width) + "x" +
                        std::to_string(height) + " reference image");
  }
}

}  // namespace detail

// 1D: `replicate` identical rows of 16,777,216 pixels. 2D: 4096 x 4096.
[[nodiscard]] inline RgbImage render_reference(Layout layout, std::size_t replicate = 1) {
  if (layout == Layout::grid) {
    RgbImage image = detail::allocate(kImage2DSide, kImage2DSide);
    for_each_color([&](ColorIndex1D, Rgb888 c) {
      const Grid2DCoord p = coord_2d(c);
      image.set(static_cast<std::size_t>(p.row), static_cast<std::size_t>(p.col), c);
    });
    return image;
  }
  if (replicate == 0) throw ArgumentError("replication factor must be positive");
  RgbImage image = detail::allocate(kCubeSize, replicate);
  auto bytes = image.bytes();
  const std::size_t row_bytes = kCubeSize * 3;
  for_each_color([&](ColorIndex1D i, Rgb888 c) {
    std::uint8_t* px = &bytes[std::size_t{i.value()} * 3];
    px[0] = c.r;
    px[1] = c.g;
    px[2] = c.b;
  });
  for (std::size_t row = 1; row < replicate; ++row) {
    std::copy(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(row_bytes),
              bytes.begin() + static_cast<std::ptrdiff_t>(row * row_bytes));
  }
  return image;
}

}  // namespace graymode::reference
