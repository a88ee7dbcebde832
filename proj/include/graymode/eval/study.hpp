#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "graymode/error.hpp"
#include "graymode/families.hpp"

namespace graymode::eval {

inline constexpr std::size_t kVariantsPerImage = 17;

struct Variant {
  std::string key;  // case-study member key, e.g. "K0.5_b0.114"
  std::filesystem::path file;
};

// One color image with its 17 gray versions, as written by
// `graymode variants`.
struct StudyImage {
  std::string id;
  std::string cohort;
  std::filesystem::path original;
  std::vector<Variant> variants;  // case-study order
};

struct ImageSet {
  std::string id;
  std::vector<StudyImage> images;  // sorted by id

  [[nodiscard]] const StudyImage* find(const std::string& image_id) const {
    for (const auto& img : images) {
      if (img.id == image_id) return &img;
    }
    return nullptr;
  }
};

[[nodiscard]] inline std::vector<std::string> case_study_keys() {
  std::vector<std::string> keys;
  for (const auto& e : family::case_study_grid()) keys.push_back(e.spec.key());
  return keys;
}

// Reads <dir>/manifest.json and checks the variants match the case-study
// grid exactly.
[[nodiscard]] inline StudyImage load_study_image(const std::filesystem::path& dir) {
  std::ifstream f(dir / "manifest.json");
  if (!f) throw IoError("missing manifest.json in " + dir.string());
  nlohmann::json m;
  try {
    f >> m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad manifest in " + dir.string() + ": " + e.what());
  }
  StudyImage img;
  img.id = m.value("image_id", dir.filename().string());
  img.cohort = m.value("cohort", "");
  img.original = dir / m.value("original", "original.png");
  std::map<std::string, std::filesystem::path> by_key;
  for (const auto& v : m.at("variants")) {
    by_key[v.at("key").get<std::string>()] = dir / v.at("file").get<std::string>();
  }
  const auto keys = case_study_keys();
  if (by_key.size() != kVariantsPerImage) {
    throw IoError(dir.string() + ": expected 17 variants, found " + std::to_string(by_key.size()));
  }
  for (const auto& key : keys) {
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw IoError(dir.string() + ": missing variant " + key);
    if (!std::filesystem::exists(it->second)) {
      throw IoError(dir.string() + ": variant file missing: " + it->second.string());
    }
    img.variants.push_back({key, it->second});
  }
  return img;
}

// A set directory holds one subdirectory per study image.
[[nodiscard]] inline ImageSet load_image_set(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  ImageSet set;
  set.id = dir.filename().string();
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
      set.images.push_back(load_study_image(entry.path()));
    }
  }
  if (set.images.empty()) throw IoError("image set has no study images: " + dir.string());
  std::sort(set.images.begin(), set.images.end(),
            [](const StudyImage& a, const StudyImage& b) { return a.id < b.id; });
  return set;
}

// Every subdirectory of `root` that loads as an image set.
[[nodiscard]] inline std::map<std::string, ImageSet> load_image_sets(const std::filesystem::path& root) {
  std::map<std::string, ImageSet> sets;
  if (!std::filesystem::is_directory(root)) throw IoError("not a directory: " + root.string());
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    bool has_images = false;
    for (const auto& sub : std::filesystem::directory_iterator(entry.path())) {
      has_images = has_images || std::filesystem::exists(sub.path() / "manifest.json");
    }
    if (!has_images) continue;
    ImageSet set = load_image_set(entry.path());
    sets.emplace(set.id, std::move(set));
  }
  return sets;
}

}  // namespace graymode::eval
