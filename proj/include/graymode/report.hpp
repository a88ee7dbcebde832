#pragma once

#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graymode/classifier.hpp"
#include "graymode/color.hpp"
#include "graymode/error.hpp"
#include "graymode/families.hpp"
#include "graymode/modes.hpp"

namespace graymode {

// Everything `analyze` emits about one operator.
struct ModeReport {
  LinearOperator op = LinearOperator::uniform();
  double k = 1.0;
  EqMode eq;
  BmMode bm;
  PrioritySpectrum priority{};
  std::optional<EqClass> eq_class;
  std::optional<BmClass> bm_class;
  std::string eq_error;  // set when eq_class is absent
  std::string bm_error;
};

[[nodiscard]] inline ModeReport make_report(const LinearOperator& op, const Modes& modes,
                                            const ClassifierConfig& cfg = {}) {
  ModeReport r;
  r.op = op;
  r.k = family::family_of(op).value();
  r.eq = modes.eq;
  r.bm = modes.bm;
  r.priority = priority(modes.eq);
  try {
    r.eq_class = classify_eq(modes.eq, cfg);
  } catch (const UnclassifiableError& e) {
    r.eq_error = e.what();
  }
  try {
    r.bm_class = classify_bm(modes.bm, cfg);
  } catch (const UnclassifiableError& e) {
    r.bm_error = e.what();
  }
  return r;
}

[[nodiscard]] inline ModeReport make_report(const LinearOperator& op, const ClassifierConfig& cfg = {}) {
  return make_report(op, compute_modes(op), cfg);
}

namespace detail {

inline std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_real(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ArgumentError("not a number: '" + s + "'");
  }
  if (pos != s.size()) throw ArgumentError("not a number: '" + s + "'");
  return v;
}

}  // namespace detail

inline constexpr const char* kCsvHeader = "j,eq_count,priority,gray_brightness,mean_lstar,std_lstar";

// One row per gray level; empty levels leave mean and std blank.
inline void write_csv(std::ostream& out, const ModeReport& r) {
  out << kCsvHeader << '\n';
  for (int j = 0; j < kLevels; ++j) {
    out << j << ',' << r.eq.counts[j] << ',' << detail::real(r.priority[j]) << ','
        << detail::real(gray_brightness(GrayLevel(j)).value) << ',';
    if (r.bm.mean_lstar[j]) out << detail::real(*r.bm.mean_lstar[j]);
    out << ',';
    if (r.bm.std_lstar[j]) out << detail::real(*r.bm.std_lstar[j]);
    out << '\n';
  }
}

struct CsvModeTable {
  EqMode eq;
  BmMode bm;
  PrioritySpectrum priority{};
};

[[nodiscard]] inline CsvModeTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ArgumentError("unexpected CSV header: " + line);
  CsvModeTable t;
  t.eq.total = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 6) throw ArgumentError("CSV row must have 6 fields: " + line);
    const int j = std::stoi(f[0]);
    if (j < 0 || j >= kLevels) throw ArgumentError("gray level out of range in CSV");
    t.eq.counts[j] = std::stoull(f[1]);
    t.bm.counts[j] = t.eq.counts[j];
    t.eq.total += t.eq.counts[j];
    t.priority[j] = detail::parse_real(f[2]);
    if (!f[4].empty()) t.bm.mean_lstar[j] = detail::parse_real(f[4]);
    if (!f[5].empty()) t.bm.std_lstar[j] = detail::parse_real(f[5]);
    ++rows;
  }
  if (rows != kLevels) throw ArgumentError("CSV must have 256 rows");
  return t;
}

[[nodiscard]] inline nlohmann::json operator_json(const LinearOperator& op) {
  return {{"lambda_r", op.lambda_r()},
          {"lambda_g", op.lambda_g()},
          {"lambda_b", op.lambda_b()},
          {"k", family::family_of(op).value()}};
}

[[nodiscard]] inline nlohmann::json to_json(const ModeReport& r) {
  using nlohmann::json;
  auto optional_array = [](const std::array<std::optional<double>, kLevels>& a) {
    json out = json::array();
    for (const auto& v : a) out.push_back(v ? json(*v) : json(nullptr));
    return out;
  };
  json j;
  j["operator"] = operator_json(r.op);
  j["eq_counts"] = r.eq.counts;
  j["priority"] = r.priority;
  j["mean_lstar"] = optional_array(r.bm.mean_lstar);
  j["std_lstar"] = optional_array(r.bm.std_lstar);
  j["eq_class"] = r.eq_class ? json(to_string(*r.eq_class)) : json(nullptr);
  j["bm_class"] = r.bm_class ? json(to_string(*r.bm_class)) : json(nullptr);
  if (!r.eq_error.empty()) j["eq_error"] = r.eq_error;
  if (!r.bm_error.empty()) j["bm_error"] = r.bm_error;
  return j;
}

}  // namespace graymode
