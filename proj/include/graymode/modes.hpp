#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "graymode/color.hpp"
#include "graymode/error.hpp"

namespace graymode {

using LevelCounts = std::array<std::uint64_t, kLevels>;

// Colors per gray level. `total` is the number of colors in the analyzed
// cube: 256^3 for the full reference image.
struct EqMode {
  LevelCounts counts{};
  std::uint64_t total = kCubeSize;

  [[nodiscard]] std::uint64_t sum() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
  [[nodiscard]] std::uint64_t peak() const {
    return *std::max_element(counts.begin(), counts.end());
  }
  friend bool operator==(const EqMode&, const EqMode&) = default;
};

// Mean and population standard deviation of the L* of the colors mapped
// to each level. Empty levels have no value.
struct BmMode {
  std::array<std::optional<double>, kLevels> mean_lstar{};
  std::array<std::optional<double>, kLevels> std_lstar{};
  LevelCounts counts{};

  [[nodiscard]] int present_levels() const {
    return static_cast<int>(
        std::count_if(mean_lstar.begin(), mean_lstar.end(), [](const auto& v) { return v.has_value(); }));
  }
};

struct Modes {
  EqMode eq;
  BmMode bm;
};

using PrioritySpectrum = std::array<double, kLevels>;

// Channel values visited along each axis of the cube. The full reference
// image uses all 256 values; a reduced cube samples `levels` values spread
// evenly over [0, 255].
class CubeSampling {
 public:
  static CubeSampling full() { return CubeSampling(kLevels); }

  explicit CubeSampling(int levels) {
    if (levels < 2 || levels > kLevels) throw ArgumentError("cube levels must be in [2, 256]");
    values_.reserve(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) values_.push_back(i * 255 / (levels - 1));
  }

  [[nodiscard]] std::span<const int> values() const { return values_; }
  [[nodiscard]] int levels() const { return static_cast<int>(values_.size()); }
  [[nodiscard]] std::uint64_t size() const {
    const auto n = static_cast<std::uint64_t>(values_.size());
    return n * n * n;
  }

 private:
  std::vector<int> values_;
};

// Worker count from GRAYMODE_THREADS, else the hardware concurrency.
[[nodiscard]] inline unsigned default_threads() {
  if (const char* env = std::getenv("GRAYMODE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

struct SliceAccumulator {
  LevelCounts count{};
  std::array<double, kLevels> sum{};
  std::array<double, kLevels> sum_sq{};
};

// Runs `work(slice)` for every slice index on up to `threads` workers.
template <typename Work>
void run_slices(int slices, unsigned threads, Work&& work) {
  threads = std::clamp(threads, 1u, static_cast<unsigned>(slices));
  if (threads == 1) {
    for (int s = 0; s < slices; ++s) work(s);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int s = next.fetch_add(1); s < slices; s = next.fetch_add(1)) work(s);
    });
  }
}

}  // namespace detail

// One pass over the cube. Each red slice accumulates into its own bins
// and slices are merged in red order, so results are bit-identical for
// any thread count.
[[nodiscard]] inline Modes compute_modes(const LinearOperator& op,
                                         const CubeSampling& cube = CubeSampling::full(),
                                         unsigned threads = default_threads()) {
  const WeightTable w(op);
  const lstar::Tables& lum = lstar::tables();
  const auto values = cube.values();
  const int n = cube.levels();

  std::vector<detail::SliceAccumulator> slices(static_cast<std::size_t>(n));
  detail::run_slices(n, threads, [&](int s) {
    auto& acc = slices[static_cast<std::size_t>(s)];
    const int r = values[static_cast<std::size_t>(s)];
    for (const int g : values) {
      const double gray_rg = w.red(r) + w.green(g);
      const double y_rg = lum.red(r) + lum.green(g);
      for (const int b : values) {
        const int level = WeightTable::truncate(gray_rg + w.blue(b));
        const double l = lstar::from_y(y_rg + lum.blue(b));
        ++acc.count[level];
        acc.sum[level] += l;
        acc.sum_sq[level] += l * l;
      }
    }
  });

  detail::SliceAccumulator total;
  for (const auto& acc : slices) {
    for (int j = 0; j < kLevels; ++j) {
      total.count[j] += acc.count[j];
      total.sum[j] += acc.sum[j];
      total.sum_sq[j] += acc.sum_sq[j];
    }
  }

  Modes out;
  out.eq.counts = total.count;
  out.eq.total = cube.size();
  out.bm.counts = total.count;
  for (int j = 0; j < kLevels; ++j) {
    if (total.count[j] == 0) continue;
    const double c = static_cast<double>(total.count[j]);
    const double mean = total.sum[j] / c;
    const double var = std::max(0.0, total.sum_sq[j] / c - mean * mean);
    out.bm.mean_lstar[j] = mean;
    out.bm.std_lstar[j] = std::sqrt(var);
  }
  return out;
}

// Counts only; skips the luminance work.
[[nodiscard]] inline EqMode compute_eq(const LinearOperator& op,
                                       const CubeSampling& cube = CubeSampling::full(),
                                       unsigned threads = default_threads()) {
  const WeightTable w(op);
  const auto values = cube.values();
  const int n = cube.levels();
  std::vector<LevelCounts> slices(static_cast<std::size_t>(n));
  detail::run_slices(n, threads, [&](int s) {
    auto& count = slices[static_cast<std::size_t>(s)];
    const int r = values[static_cast<std::size_t>(s)];
    for (const int g : values) {
      const double gray_rg = w.red(r) + w.green(g);
      for (const int b : values) ++count[WeightTable::truncate(gray_rg + w.blue(b))];
    }
  });
  EqMode out;
  out.total = cube.size();
  for (const auto& c : slices) {
    for (int j = 0; j < kLevels; ++j) out.counts[j] += c[j];
  }
  return out;
}

[[nodiscard]] inline PrioritySpectrum priority(const EqMode& eq) {
  if (eq.sum() != eq.total) throw ArgumentError("EQ counts do not sum to the cube size");
  PrioritySpectrum p{};
  const double total = static_cast<double>(eq.total);
  for (int j = 0; j < kLevels; ++j) p[j] = static_cast<double>(eq.counts[j]) / total;
  return p;
}

// B(j) - b(j): positive where the operator assigns less brightness than
// the colors actually have.
[[nodiscard]] inline std::array<std::optional<double>, kLevels> bm_deviation(const BmMode& bm) {
  std::array<std::optional<double>, kLevels> d{};
  for (int j = 0; j < kLevels; ++j) {
    if (bm.mean_lstar[j]) d[j] = *bm.mean_lstar[j] - gray_brightness(GrayLevel(j)).value;
  }
  return d;
}

}  // namespace graymode
