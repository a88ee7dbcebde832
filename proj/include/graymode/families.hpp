#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graymode/color.hpp"
#include "graymode/error.hpp"

namespace graymode::family {

// K = lambda_g^2 / (lambda_r * lambda_b). Every linear operator belongs to
// exactly one family; one weight then picks the member.
class FamilyParam {
 public:
  explicit FamilyParam(double k) : k_(k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("family parameter K must be positive");
  }
  [[nodiscard]] double value() const { return k_; }

 private:
  double k_;
};

enum class RootSign { plus, minus };

[[nodiscard]] inline FamilyParam family_of(const LinearOperator& op) {
  return FamilyParam(op.lambda_g() * op.lambda_g() / (op.lambda_r() * op.lambda_b()));
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw DomainError(std::string(name) + " must lie strictly inside (0, 1), got " + fmt(v));
  }
}

// Positive root of x^2 + K w x + K w (w - 1) = 0, the weight adjacent to
// `w` in the K relation when `w` is an outer (red or blue) weight.
inline double green_from_outer(double k, double w) {
  const double half = k * w / 2.0;
  return std::sqrt(half * half + k * w * (1.0 - w)) - half;
}

inline LinearOperator build(double r, double g, double b, double k, const char* what) {
  if (!(r > 0.0 && r < 1.0) || !(g > 0.0 && g < 1.0) || !(b > 0.0 && b < 1.0)) {
    throw InfeasibleMemberError(std::string("no feasible member for K = ") + fmt(k) + " with " +
                                what + ": weights (" + fmt(r) + ", " + fmt(g) + ", " + fmt(b) +
                                ")");
  }
  return LinearOperator::from_weights(r, g, b);
}

}  // namespace detail

[[nodiscard]] inline LinearOperator member_from_blue(FamilyParam k, double lambda_b) {
  detail::require_open_unit(lambda_b, "lambda_b");
  const double g = detail::green_from_outer(k.value(), lambda_b);
  return detail::build(1.0 - g - lambda_b, g, lambda_b, k.value(), "fixed blue");
}

[[nodiscard]] inline LinearOperator member_from_red(FamilyParam k, double lambda_r) {
  detail::require_open_unit(lambda_r, "lambda_r");
  const double g = detail::green_from_outer(k.value(), lambda_r);
  return detail::build(lambda_r, g, 1.0 - lambda_r - g, k.value(), "fixed red");
}

// Smallest K that admits a member with the given green weight.
[[nodiscard]] inline double min_k_for_green(double lambda_g) {
  const double ratio = 2.0 * lambda_g / (1.0 - lambda_g);
  return ratio * ratio;
}

// With green fixed, red and blue are the roots of
// x^2 - (1 - g) x + g^2 / K = 0. The plus root gives blue >= red; the
// minus root swaps them.
[[nodiscard]] inline LinearOperator member_from_green(FamilyParam k, double lambda_g,
                                                      RootSign sign = RootSign::plus) {
  detail::require_open_unit(lambda_g, "lambda_g");
  const double half = (1.0 - lambda_g) / 2.0;
  double disc = half * half - lambda_g * lambda_g / k.value();
  // Admit the tangent case K = min_k_for_green(g) through rounding noise.
  if (disc < 0.0 && disc > -1e-12) disc = 0.0;
  if (disc < 0.0) {
    throw FamilyIncompatibleError("green weight " + detail::fmt(lambda_g) +
                                  " has no member in family K = " + detail::fmt(k.value()) +
                                  " (requires K >= " + detail::fmt(min_k_for_green(lambda_g)) +
                                  ")");
  }
  const double root = std::sqrt(disc);
  const double b = sign == RootSign::plus ? half + root : half - root;
  return detail::build(1.0 - lambda_g - b, lambda_g, b, k.value(), "fixed green");
}

// Left side of the quadratic in lambda_g; zero for every exact member.
[[nodiscard]] inline double quadratic_residual(const LinearOperator& op, FamilyParam k) {
  const double g = op.lambda_g();
  const double b = op.lambda_b();
  return g * g + k.value() * b * g + k.value() * b * (b - 1.0);
}

struct MemberSpec {
  Channel fixed_channel = Channel::blue;
  double fixed_value = 0.0;
  double k = 1.0;
  RootSign root_sign = RootSign::plus;

  // File-name friendly key, e.g. "K0.5_b0.114".
  [[nodiscard]] std::string key() const {
    return "K" + detail::fmt(k) + "_" + channel_letter(fixed_channel) + detail::fmt(fixed_value) +
           (root_sign == RootSign::minus ? "_minus" : "");
  }
};

[[nodiscard]] inline LinearOperator resolve(const MemberSpec& spec) {
  const FamilyParam k(spec.k);
  switch (spec.fixed_channel) {
    case Channel::red: return member_from_red(k, spec.fixed_value);
    case Channel::green: return member_from_green(k, spec.fixed_value, spec.root_sign);
    case Channel::blue: return member_from_blue(k, spec.fixed_value);
  }
  throw ArgumentError("unknown channel");
}

// A weight triple drawn from a discrete value set. Triples containing 0 or
// 1 project fewer than three channels and are not valid LinearOperators.
struct GridCandidate {
  double lambda_r = 0.0;
  double lambda_g = 0.0;
  double lambda_b = 0.0;
  bool degenerate = false;

  [[nodiscard]] std::optional<LinearOperator> op() const {
    if (degenerate) return std::nullopt;
    return LinearOperator::from_weights(lambda_r, lambda_g, lambda_b);
  }
};

// All ordered triples (r, g, b) from `values` with r + g + b = 1. For the
// evenly spaced set {0, s, ..., 1} of V values there are V (V + 1) / 2.
[[nodiscard]] inline std::vector<GridCandidate> enumerate_grid(std::span<const double> values,
                                                              bool interior_only = false) {
  if (values.empty()) throw ArgumentError("grid value set is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw ArgumentError("grid values must lie in [0, 1]");
    }
    if (i > 0 && !(values[i] > values[i - 1])) {
      throw ArgumentError("grid values must be sorted and distinct");
    }
  }
  auto interior = [](double w) { return w > 0.0 && w < 1.0; };
  std::vector<GridCandidate> out;
  for (double r : values) {
    for (double g : values) {
      const double want = 1.0 - r - g;
      const auto it = std::lower_bound(values.begin(), values.end(),
                                       want - kWeightSumTolerance);
      if (it == values.end() || std::abs(r + g + *it - 1.0) > kWeightSumTolerance) continue;
      const double b = *it;
      const bool degenerate = !(interior(r) && interior(g) && interior(b));
      if (degenerate && interior_only) continue;
      out.push_back({r, g, b, degenerate});
    }
  }
  return out;
}

// {lo, lo + step, ..., hi}, computed as lo + i * step.
[[nodiscard]] inline std::vector<double> stepped_values(double lo, double hi, double step) {
  if (!(step > 0.0)) throw ArgumentError("grid step must be positive");
  if (!(hi >= lo)) throw ArgumentError("grid range is empty");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = lo + i * step;
    if (v > hi + 1e-9) break;
    out.push_back(std::min(v, hi));
  }
  return out;
}

struct CaseStudyEntry {
  MemberSpec spec;
  LinearOperator op;
};

inline constexpr double kCaseStudyFixedRed = 0.299;
inline constexpr double kCaseStudyFixedGreen = 0.587;
inline constexpr double kCaseStudyFixedBlue = 0.114;

// Seven families K = 0.5, 2.5, ..., 12.5, each visited with one NTSC
// weight held fixed. Green only yields members for K >= ~8.08, so 17.
[[nodiscard]] inline std::vector<CaseStudyEntry> case_study_grid() {
  std::vector<CaseStudyEntry> out;
  const auto add = [&](Channel c, double v, double k) {
    const MemberSpec spec{c, v, k, RootSign::plus};
    out.push_back({spec, resolve(spec)});
  };
  for (int i = 0; i < 7; ++i) add(Channel::blue, kCaseStudyFixedBlue, 0.5 + 2.0 * i);
  for (int i = 0; i < 7; ++i) add(Channel::red, kCaseStudyFixedRed, 0.5 + 2.0 * i);
  for (int i = 0; i < 7; ++i) {
    const double k = 0.5 + 2.0 * i;
    if (k >= min_k_for_green(kCaseStudyFixedGreen)) add(Channel::green, kCaseStudyFixedGreen, k);
  }
  return out;
}

}  // namespace graymode::family
