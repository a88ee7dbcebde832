#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "graymode/error.hpp"

namespace graymode {

inline constexpr int kLevels = 256;
inline constexpr std::uint64_t kCubeSize =
    std::uint64_t{kLevels} * kLevels * kLevels;

// Added before truncation so that weights such as 0.299 + 0.587 + 0.114,
// which do not sum to exactly 1 in binary, still send white to 255.
inline constexpr double kTruncationEpsilon = 1e-9;

// Maximum accepted |sum of weights - 1|.
inline constexpr double kWeightSumTolerance = 1e-9;

struct Rgb888 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr bool operator==(Rgb888, Rgb888) = default;
};

class GrayLevel {
 public:
  constexpr GrayLevel() = default;
  constexpr explicit GrayLevel(int level) : level_(check(level)) {}

  [[nodiscard]] constexpr int value() const { return level_; }
  friend constexpr bool operator==(GrayLevel, GrayLevel) = default;
  friend constexpr auto operator<=>(GrayLevel, GrayLevel) = default;

 private:
  static constexpr int check(int level) {
    if (level < 0 || level > 255) throw RangeError("gray level outside [0, 255]");
    return level;
  }
  int level_ = 0;
};

// Brightness in percent, 0 for black and 100 for white.
struct BrightnessPercent {
  double value = 0.0;
};

enum class Channel { red, green, blue };

inline const char* channel_letter(Channel c) {
  switch (c) {
    case Channel::red: return "r";
    case Channel::green: return "g";
    case Channel::blue: return "b";
  }
  return "?";
}

// A weighted channel sum with weights strictly inside (0, 1) that add up
// to one. Construction validates; there is no way to obtain an invalid
// instance.
class LinearOperator {
 public:
  static LinearOperator from_weights(double lambda_r, double lambda_g,
                                     double lambda_b) {
    auto bad = [](double w) { return !(w > 0.0 && w < 1.0); };
    if (bad(lambda_r) || bad(lambda_g) || bad(lambda_b)) {
      throw DomainError("operator weights must lie strictly inside (0, 1): " +
                        describe(lambda_r, lambda_g, lambda_b));
    }
    const double sum = lambda_r + lambda_g + lambda_b;
    if (std::abs(sum - 1.0) > kWeightSumTolerance) {
      throw DomainError("operator weights must sum to 1: " +
                        describe(lambda_r, lambda_g, lambda_b));
    }
    return LinearOperator(lambda_r, lambda_g, lambda_b);
  }

  static LinearOperator uniform() {
    return LinearOperator(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  }
  // NTSC luma weights.
  static LinearOperator standard() { return LinearOperator(0.299, 0.587, 0.114); }
  // Red-heavy member of the K = 0.5 family picked for lightening faces.
  static LinearOperator chosen() { return LinearOperator(0.688, 0.198, 0.114); }

  [[nodiscard]] double lambda_r() const { return r_; }
  [[nodiscard]] double lambda_g() const { return g_; }
  [[nodiscard]] double lambda_b() const { return b_; }
  [[nodiscard]] double weight(Channel c) const {
    switch (c) {
      case Channel::red: return r_;
      case Channel::green: return g_;
      case Channel::blue: return b_;
    }
    return 0.0;
  }

  [[nodiscard]] std::string to_string() const { return describe(r_, g_, b_); }

  friend bool operator==(const LinearOperator&, const LinearOperator&) = default;

 private:
  LinearOperator(double r, double g, double b) : r_(r), g_(g), b_(b) {}

  static std::string describe(double r, double g, double b) {
    std::ostringstream os;
    os.precision(17);
    os << '(' << r << ", " << g << ", " << b << ')';
    return os.str();
  }

  double r_;
  double g_;
  double b_;
};

// Per-channel products lambda * value. Gray levels computed through the
// table are bit-identical to apply(), which evaluates the same products
// in the same order.
class WeightTable {
 public:
  explicit WeightTable(const LinearOperator& op) {
    for (int v = 0; v < kLevels; ++v) {
      r_[v] = op.lambda_r() * v;
      g_[v] = op.lambda_g() * v;
      b_[v] = op.lambda_b() * v;
    }
  }

  [[nodiscard]] double red(int v) const { return r_[v]; }
  [[nodiscard]] double green(int v) const { return g_[v]; }
  [[nodiscard]] double blue(int v) const { return b_[v]; }

  [[nodiscard]] static int truncate(double weighted_sum) {
    return static_cast<int>(weighted_sum + kTruncationEpsilon);
  }

 private:
  std::array<double, kLevels> r_{};
  std::array<double, kLevels> g_{};
  std::array<double, kLevels> b_{};
};

[[nodiscard]] inline GrayLevel apply(const LinearOperator& op, Rgb888 c) {
  const double sum = op.lambda_r() * c.r + op.lambda_g() * c.g + op.lambda_b() * c.b;
  return GrayLevel(WeightTable::truncate(sum));
}

[[nodiscard]] inline BrightnessPercent gray_brightness(GrayLevel level) {
  return {100.0 * level.value() / 255.0};
}

struct LuminanceSample {
  double y_linear = 0.0;  // relative luminance Y in [0, 1]
  double l_star = 0.0;    // CIE L* in [0, 100]
};

namespace lstar {

inline constexpr double kLinearThreshold = 0.04045;
inline constexpr double kGamma = 2.4;
inline constexpr double kYThreshold = 0.008856;
inline constexpr double kLowSlope = 903.292;
inline constexpr double kCoefR = 0.2126;
inline constexpr double kCoefG = 0.7152;
inline constexpr double kCoefB = 0.0722;

[[nodiscard]] inline double linearize(int value) {
  const double c = value / 255.0;
  return c > kLinearThreshold ? std::pow((c + 0.055) / 1.055, kGamma) : c / 12.92;
}

[[nodiscard]] inline double from_y(double y) {
  return y > kYThreshold ? 116.0 * std::cbrt(y) - 16.0 : kLowSlope * y;
}

// Luminance contribution of each channel value, coefficient times the
// linearized intensity.
class Tables {
 public:
  Tables() {
    for (int v = 0; v < kLevels; ++v) {
      const double lin = linearize(v);
      r_[v] = kCoefR * lin;
      g_[v] = kCoefG * lin;
      b_[v] = kCoefB * lin;
    }
  }

  [[nodiscard]] double y(int r, int g, int b) const { return r_[r] + g_[g] + b_[b]; }
  [[nodiscard]] double red(int v) const { return r_[v]; }
  [[nodiscard]] double green(int v) const { return g_[v]; }
  [[nodiscard]] double blue(int v) const { return b_[v]; }

 private:
  std::array<double, kLevels> r_{};
  std::array<double, kLevels> g_{};
  std::array<double, kLevels> b_{};
};

[[nodiscard]] inline const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace lstar

[[nodiscard]] inline LuminanceSample cie_lstar(Rgb888 c) {
  const double y = lstar::tables().y(c.r, c.g, c.b);
  return {y, lstar::from_y(y)};
}

}  // namespace graymode
