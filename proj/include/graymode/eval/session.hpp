#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "graymode/error.hpp"
#include "graymode/eval/study.hpp"

namespace graymode::eval {

enum class ProtocolErrorKind { not_found, conflict, validation };

class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  [[nodiscard]] ProtocolErrorKind kind() const { return kind_; }

 private:
  ProtocolErrorKind kind_;
};

enum class ImageStage { stage1, stage2, done };

[[nodiscard]] inline const char* to_string(ImageStage s) {
  switch (s) {
    case ImageStage::stage1: return "stage1";
    case ImageStage::stage2: return "stage2";
    case ImageStage::done: return "done";
  }
  return "?";
}

inline constexpr int kMosaicRows = 3;
inline constexpr int kMosaicCols = 6;
inline constexpr int kMosaicSlots = kMosaicRows * kMosaicCols;
inline constexpr int kBlankSlot = -1;
inline constexpr std::size_t kStage1Picks = 4;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Uniform in [0, n) by rejection; the distribution classes of <random>
// are implementation-defined, and placements must replay everywhere.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return v % n;
  }
}

}  // namespace detail

// Opaque handle of one picture on screen. Depends on the set, the image,
// the picture and the session seed only.
[[nodiscard]] inline std::string make_token(const std::string& set_id, const std::string& image_id,
                                            const std::string& what, std::uint64_t seed) {
  std::uint64_t h = detail::fnv1a(set_id);
  h = detail::fnv1a(std::string(1, '\0') + image_id, h);
  h = detail::fnv1a(std::string(1, '\0') + what, h);
  h = detail::splitmix64(h ^ detail::splitmix64(seed));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Slot -> variant index (kBlankSlot for the one empty cell). A seeded
// Fisher-Yates shuffle of the 17 variants plus the blank.
[[nodiscard]] inline std::array<int, kMosaicSlots> make_placement(std::uint64_t seed,
                                                                  const std::string& image_id) {
  std::array<int, kMosaicSlots> slots{};
  for (int i = 0; i < kMosaicSlots; ++i) slots[i] = i < static_cast<int>(kVariantsPerImage) ? i : kBlankSlot;
  std::mt19937_64 rng(detail::splitmix64(seed ^ detail::fnv1a(image_id)));
  for (int i = kMosaicSlots - 1; i > 0; --i) {
    const auto j = static_cast<int>(detail::bounded(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(slots[i], slots[j]);
  }
  return slots;
}

struct ImageProgress {
  ImageStage stage = ImageStage::stage1;
  std::vector<int> picks;  // stage-1 variant indices
  int revision = 0;        // stage-1 submissions so far
  bool stage2_served = false;
  std::optional<int> final_pick;
};

struct SlotView {
  int slot = 0;
  std::optional<std::string> token;  // absent for the blank cell
};

// Outcome of an accepted stage-1 submission.
struct Stage1Receipt {
  std::vector<int> variants;
  int revision = 0;
};

struct FinalReceipt {
  int variant = 0;
  std::optional<std::string> next_image;
};

// One observer working through an image set. Each image moves
// stage1 -> stage2 -> done, strictly in queue order. Stage-1 picks may be
// replaced until the stage-2 mosaic has been requested once.
class EvalSession {
 public:
  EvalSession(std::string id, std::string observer, std::string set_id, std::uint64_t seed,
              std::vector<std::string> image_ids)
      : id_(std::move(id)),
        observer_(std::move(observer)),
        set_id_(std::move(set_id)),
        seed_(seed),
        image_ids_(std::move(image_ids)),
        progress_(image_ids_.size()),
        keys_(case_study_keys()) {
    if (image_ids_.empty()) throw ArgumentError("session needs at least one image");
  }

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] const std::string& observer() const { return observer_; }
  [[nodiscard]] const std::string& set_id() const { return set_id_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const std::vector<std::string>& image_ids() const { return image_ids_; }
  [[nodiscard]] const std::vector<std::string>& variant_keys() const { return keys_; }

  [[nodiscard]] std::optional<std::size_t> current() const {
    for (std::size_t i = 0; i < progress_.size(); ++i) {
      if (progress_[i].stage != ImageStage::done) return i;
    }
    return std::nullopt;
  }
  [[nodiscard]] bool done() const { return !current().has_value(); }

  [[nodiscard]] const ImageProgress& progress(std::size_t image) const { return progress_.at(image); }
  [[nodiscard]] ImageStage stage(std::size_t image) const { return progress_.at(image).stage; }

  [[nodiscard]] std::size_t image_index(const std::string& image_id) const {
    const auto it = std::find(image_ids_.begin(), image_ids_.end(), image_id);
    if (it == image_ids_.end()) {
      throw ProtocolError(ProtocolErrorKind::not_found, "image " + image_id + " is not in this session");
    }
    return static_cast<std::size_t>(it - image_ids_.begin());
  }

  [[nodiscard]] std::array<int, kMosaicSlots> placement(std::size_t image) const {
    return make_placement(seed_, image_ids_.at(image));
  }
  [[nodiscard]] std::string token(std::size_t image, int variant) const {
    return make_token(set_id_, image_ids_.at(image), keys_.at(static_cast<std::size_t>(variant)), seed_);
  }
  [[nodiscard]] std::string original_token(std::size_t image) const {
    return make_token(set_id_, image_ids_.at(image), "original", seed_);
  }
  [[nodiscard]] std::optional<int> variant_of(std::size_t image, const std::string& token) const {
    for (int v = 0; v < static_cast<int>(keys_.size()); ++v) {
      if (this->token(image, v) == token) return v;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::vector<SlotView> stage1(const std::string& image_id) const {
    const std::size_t i = image_index(image_id);
    require_current(i);
    if (progress_[i].stage != ImageStage::stage1) {
      throw ProtocolError(ProtocolErrorKind::conflict, "image " + image_id + " is past stage 1");
    }
    std::vector<SlotView> out;
    const auto slots = placement(i);
    for (int s = 0; s < kMosaicSlots; ++s) {
      SlotView v{s, std::nullopt};
      if (slots[s] != kBlankSlot) v.token = token(i, slots[s]);
      out.push_back(v);
    }
    return out;
  }

  Stage1Receipt submit_stage1(const std::string& image_id, const std::vector<std::string>& picks) {
    const std::size_t i = image_index(image_id);
    require_current(i);
    auto& p = progress_[i];
    const bool resubmission = p.stage == ImageStage::stage2 && !p.stage2_served;
    if (p.stage != ImageStage::stage1 && !resubmission) {
      throw ProtocolError(ProtocolErrorKind::conflict, "stage-1 picks for " + image_id + " are closed");
    }
    if (picks.size() != kStage1Picks) {
      throw ProtocolError(ProtocolErrorKind::validation, "stage 1 needs exactly 4 picks");
    }
    std::vector<int> variants;
    std::set<int> seen;
    for (const auto& t : picks) {
      const auto v = variant_of(i, t);
      if (!v) throw ProtocolError(ProtocolErrorKind::validation, "unknown token " + t);
      if (!seen.insert(*v).second) {
        throw ProtocolError(ProtocolErrorKind::validation, "duplicate pick " + t);
      }
      variants.push_back(*v);
    }
    p.picks = variants;
    p.stage = ImageStage::stage2;
    ++p.revision;
    return {variants, p.revision};
  }

  // The four stage-1 picks in submission order. Closes the resubmission
  // window.
  std::vector<std::string> stage2(const std::string& image_id) {
    const std::size_t i = image_index(image_id);
    require_current(i);
    auto& p = progress_[i];
    if (p.stage != ImageStage::stage2) {
      throw ProtocolError(ProtocolErrorKind::conflict, "image " + image_id + " is not in stage 2");
    }
    p.stage2_served = true;
    std::vector<std::string> out;
    for (int v : p.picks) out.push_back(token(i, v));
    return out;
  }

  FinalReceipt submit_final(const std::string& image_id, const std::string& pick) {
    const std::size_t i = image_index(image_id);
    require_current(i);
    auto& p = progress_[i];
    if (p.stage != ImageStage::stage2) {
      throw ProtocolError(ProtocolErrorKind::conflict, "image " + image_id + " is not in stage 2");
    }
    const auto v = variant_of(i, pick);
    if (!v || std::find(p.picks.begin(), p.picks.end(), *v) == p.picks.end()) {
      throw ProtocolError(ProtocolErrorKind::validation, "final pick must be one of the 4 stage-1 picks");
    }
    p.final_pick = *v;
    p.stage = ImageStage::done;
    p.stage2_served = true;
    FinalReceipt r{*v, std::nullopt};
    if (const auto next = current()) r.next_image = image_ids_[*next];
    return r;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json images = nlohmann::json::array();
    for (std::size_t i = 0; i < image_ids_.size(); ++i) {
      const auto& p = progress_[i];
      images.push_back({{"id", image_ids_[i]},
                        {"stage", to_string(p.stage)},
                        {"picks", p.picks},
                        {"revision", p.revision},
                        {"stage2_served", p.stage2_served},
                        {"final_pick", p.final_pick ? nlohmann::json(*p.final_pick) : nlohmann::json(nullptr)}});
    }
    return {{"id", id_}, {"observer", observer_}, {"image_set", set_id_}, {"seed", seed_}, {"images", images}};
  }

  [[nodiscard]] static EvalSession from_json(const nlohmann::json& j) {
    std::vector<std::string> ids;
    for (const auto& img : j.at("images")) ids.push_back(img.at("id").get<std::string>());
    EvalSession s(j.at("id").get<std::string>(), j.at("observer").get<std::string>(),
                  j.at("image_set").get<std::string>(), j.at("seed").get<std::uint64_t>(), ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto& img = j.at("images")[i];
      auto& p = s.progress_[i];
      const auto stage = img.at("stage").get<std::string>();
      p.stage = stage == "done" ? ImageStage::done : stage == "stage2" ? ImageStage::stage2 : ImageStage::stage1;
      p.picks = img.at("picks").get<std::vector<int>>();
      p.revision = img.at("revision").get<int>();
      p.stage2_served = img.at("stage2_served").get<bool>();
      if (!img.at("final_pick").is_null()) p.final_pick = img.at("final_pick").get<int>();
    }
    return s;
  }

 private:
  void require_current(std::size_t i) const {
    const auto cur = current();
    if (!cur || *cur != i) {
      throw ProtocolError(ProtocolErrorKind::conflict,
                          "image " + image_ids_[i] + (progress_[i].stage == ImageStage::done
                                                          ? " is already done"
                                                          : " is not the current image"));
    }
  }

  std::string id_;
  std::string observer_;
  std::string set_id_;
  std::uint64_t seed_;
  std::vector<std::string> image_ids_;
  std::vector<ImageProgress> progress_;
  std::vector<std::string> keys_;
};

}  // namespace graymode::eval
