#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graymode/color.hpp"
#include "graymode/error.hpp"
#include "graymode/modes.hpp"

namespace graymode {

enum class EqShape { bell, trapezoidal, triangular };
enum class Corner { rounded, sharp };
enum class BmKind { regular, irregular };

struct EqClass {
  EqShape shape = EqShape::bell;
  std::optional<Corner> corner;  // never set for bell

  friend bool operator==(const EqClass&, const EqClass&) = default;
};

struct BmClass {
  BmKind kind = BmKind::regular;
  friend bool operator==(const BmClass&, const BmClass&) = default;
};

struct TaxonomyLabel {
  EqClass eq;
  BmClass bm;
  friend bool operator==(const TaxonomyLabel&, const TaxonomyLabel&) = default;
};

[[nodiscard]] inline std::string to_string(const EqClass& c) {
  std::string s;
  switch (c.shape) {
    case EqShape::bell: return "bell";
    case EqShape::trapezoidal: s = "trapezoidal"; break;
    case EqShape::triangular: s = "triangular"; break;
  }
  if (c.corner) s += *c.corner == Corner::sharp ? "-sharp" : "-rounded";
  return s;
}

[[nodiscard]] inline std::string to_string(const BmClass& c) {
  return c.kind == BmKind::regular ? "regular" : "irregular";
}

[[nodiscard]] inline std::string to_string(const TaxonomyLabel& t) {
  return to_string(t.eq) + "/" + to_string(t.bm);
}

// Thresholds of the shape heuristics. Counts are normalized to a peak of 1.
struct ClassifierConfig {
  // Levels at or above this fraction of the peak form the plateau.
  double plateau_level = 0.95;
  // Plateau at least this fraction of the 256 levels: trapezoidal.
  double trapezoid_min_width = 0.15;
  // Flank samples are the levels with normalized count in [lo, hi].
  double flank_lo = 0.10;
  double flank_hi = 0.90;
  // Both flank line fits at least this R^2: triangular, otherwise bell.
  double triangular_min_r2 = 0.998;
  // Estimated corner rounding (kernel width over flank run) below which a
  // corner counts as sharp.
  double sharp_max_rounding = 0.2;

  // BM: irregular when the mean deviation over levels >= bm_window_start
  // is below this many percent.
  int bm_window_start = 154;
  double irregular_max_mean_deviation = -1.0;
  double bm_min_present_fraction = 0.90;
};

// Shape measurements behind an EQ label, exposed for reports and tuning.
struct EqShapeMetrics {
  int peak_level = 0;
  int plateau_first = 0;
  int plateau_last = 0;
  double plateau_width = 0.0;  // fraction of 256 levels
  double rise_r2 = 0.0;
  double fall_r2 = 0.0;
  double corner_rounding = 0.0;
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool valid = false;
};

inline LineFit fit_line(std::span<const int> xs, std::span<const double> ys) {
  LineFit f;
  const std::size_t n = xs.size();
  if (n < 3) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (f.slope * xs[i] + f.intercept);
    ss_res += e * e;
  }
  f.r2 = 1.0 - ss_res / syy;
  f.valid = true;
  return f;
}

inline double interpolate(const std::array<double, kLevels>& y, double x) {
  if (x <= 0) return y[0];
  if (x >= kLevels - 1) return y[kLevels - 1];
  const int i = static_cast<int>(x);
  const double t = x - i;
  return y[i] * (1.0 - t) + y[i + 1] * t;
}

}  // namespace detail

[[nodiscard]] inline EqShapeMetrics measure_eq(std::span<const std::uint64_t, kLevels> counts,
                                               const ClassifierConfig& cfg = {}) {
  const auto peak_it = std::max_element(counts.begin(), counts.end());
  const int occupied = static_cast<int>(
      std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c > 0; }));
  if (*peak_it == 0 || occupied < 3) {
    throw UnclassifiableError("EQ mode holds its mass in fewer than 3 levels");
  }

  std::array<double, kLevels> n{};
  const double peak = static_cast<double>(*peak_it);
  for (int j = 0; j < kLevels; ++j) n[j] = static_cast<double>(counts[j]) / peak;

  EqShapeMetrics m;
  m.peak_level = static_cast<int>(peak_it - counts.begin());
  int lo = m.peak_level, hi = m.peak_level;
  while (lo > 0 && n[lo - 1] >= cfg.plateau_level) --lo;
  while (hi < kLevels - 1 && n[hi + 1] >= cfg.plateau_level) ++hi;
  m.plateau_first = lo;
  m.plateau_last = hi;
  m.plateau_width = (hi - lo + 1) / static_cast<double>(kLevels);

  std::vector<int> rise_x, fall_x;
  std::vector<double> rise_y, fall_y;
  for (int j = 0; j < kLevels; ++j) {
    if (n[j] < cfg.flank_lo || n[j] > cfg.flank_hi) continue;
    if (j < lo) {
      rise_x.push_back(j);
      rise_y.push_back(n[j]);
    } else if (j > hi) {
      fall_x.push_back(j);
      fall_y.push_back(n[j]);
    }
  }
  const auto rise = detail::fit_line(rise_x, rise_y);
  const auto fall = detail::fit_line(fall_x, fall_y);
  m.rise_r2 = rise.r2;
  m.fall_r2 = fall.r2;

  // A flank line meeting a level top leaves a gap of w / (8 W) under the
  // ideal corner when smoothed by a kernel of width w over a run of W;
  // an apex where two flanks meet leaves w / (4 W). Invert for w / W.
  // Flanks too short to fit are steps: no rounding.
  if (!rise.valid || !fall.valid) {
    m.corner_rounding = 0.0;
  } else if (m.plateau_width >= cfg.trapezoid_min_width) {
    double top = 0;
    for (int j = lo; j <= hi; ++j) top += n[j];
    top /= (hi - lo + 1);
    const double x_rise = (top - rise.intercept) / rise.slope;
    const double x_fall = (top - fall.intercept) / fall.slope;
    const double gap = std::max(top - detail::interpolate(n, x_rise),
                                top - detail::interpolate(n, x_fall)) / top;
    m.corner_rounding = 8.0 * std::max(0.0, gap);
  } else {
    const double x_apex = (fall.intercept - rise.intercept) / (rise.slope - fall.slope);
    const double y_apex = rise.slope * x_apex + rise.intercept;
    const double gap = (y_apex - detail::interpolate(n, x_apex)) / y_apex;
    m.corner_rounding = 4.0 * std::max(0.0, gap);
  }
  return m;
}

[[nodiscard]] inline EqClass classify_eq(std::span<const std::uint64_t, kLevels> counts,
                                         const ClassifierConfig& cfg = {}) {
  const EqShapeMetrics m = measure_eq(counts, cfg);
  EqClass c;
  if (m.plateau_width >= cfg.trapezoid_min_width) {
    c.shape = EqShape::trapezoidal;
  } else if (m.rise_r2 >= cfg.triangular_min_r2 && m.fall_r2 >= cfg.triangular_min_r2) {
    c.shape = EqShape::triangular;
  } else {
    return c;
  }
  c.corner = m.corner_rounding < cfg.sharp_max_rounding ? Corner::sharp : Corner::rounded;
  return c;
}

[[nodiscard]] inline EqClass classify_eq(const EqMode& eq, const ClassifierConfig& cfg = {}) {
  return classify_eq(std::span<const std::uint64_t, kLevels>(eq.counts), cfg);
}

// Mean of B(j) - b(j) over the present levels of the upper window.
[[nodiscard]] inline double upper_mean_deviation(const BmMode& bm, const ClassifierConfig& cfg = {}) {
  if (bm.present_levels() < cfg.bm_min_present_fraction * kLevels) {
    throw UnclassifiableError("BM mode has too many empty gray levels");
  }
  const auto d = bm_deviation(bm);
  double sum = 0;
  int n = 0;
  for (int j = cfg.bm_window_start; j < kLevels; ++j) {
    if (d[j]) {
      sum += *d[j];
      ++n;
    }
  }
  if (n == 0) throw UnclassifiableError("BM mode has no levels in the upper window");
  return sum / n;
}

[[nodiscard]] inline BmClass classify_bm(const BmMode& bm, const ClassifierConfig& cfg = {}) {
  return {upper_mean_deviation(bm, cfg) < cfg.irregular_max_mean_deviation ? BmKind::irregular
                                                                           : BmKind::regular};
}

[[nodiscard]] inline TaxonomyLabel classify(const Modes& modes, const ClassifierConfig& cfg = {}) {
  return {classify_eq(modes.eq, cfg), classify_bm(modes.bm, cfg)};
}

[[nodiscard]] inline TaxonomyLabel taxonomy(const LinearOperator& op, const ClassifierConfig& cfg = {}) {
  return classify(compute_modes(op), cfg);
}

}  // namespace graymode
