#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "graymode/error.hpp"

namespace graymode::eval {

enum class VoteStage { stage1, final };

struct VoteRecord {
  std::int64_t timestamp_ms = 0;
  std::string session;
  std::string observer;
  std::string image_set;
  std::string image;
  std::string cohort;
  std::string variant;  // case-study key
  VoteStage stage = VoteStage::final;
  int revision = 1;     // stage-1 submission number for this image

  friend bool operator==(const VoteRecord&, const VoteRecord&) = default;
};

[[nodiscard]] inline nlohmann::json to_json(const VoteRecord& r) {
  return {{"ts", r.timestamp_ms}, {"session", r.session}, {"observer", r.observer},
          {"image_set", r.image_set}, {"image", r.image}, {"cohort", r.cohort},
          {"variant", r.variant}, {"stage", r.stage == VoteStage::final ? "final" : "stage1"},
          {"revision", r.revision}};
}

[[nodiscard]] inline VoteRecord vote_from_json(const nlohmann::json& j) {
  VoteRecord r;
  r.timestamp_ms = j.at("ts").get<std::int64_t>();
  r.session = j.at("session").get<std::string>();
  r.observer = j.at("observer").get<std::string>();
  r.image_set = j.at("image_set").get<std::string>();
  r.image = j.at("image").get<std::string>();
  r.cohort = j.value("cohort", "");
  r.variant = j.at("variant").get<std::string>();
  r.stage = j.at("stage").get<std::string>() == "final" ? VoteStage::final : VoteStage::stage1;
  r.revision = j.value("revision", 1);
  return r;
}

[[nodiscard]] inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

// Append-only JSON-lines log. Appends are serialized; each record is
// flushed before append() returns. An empty path keeps records in memory.
class VoteLog {
 public:
  VoteLog() = default;
  explicit VoteLog(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::exists(path_)) records_ = read(path_);
    out_.open(path_, std::ios::app);
    if (!out_) throw IoError("cannot open vote log " + path_.string());
  }

  void append(const std::vector<VoteRecord>& batch) {
    std::lock_guard lock(mu_);
    for (const auto& r : batch) {
      if (out_.is_open()) out_ << to_json(r).dump() << '\n';
      records_.push_back(r);
    }
    if (out_.is_open()) {
      out_.flush();
      if (!out_) throw IoError("vote log write failed");
    }
  }

  [[nodiscard]] std::vector<VoteRecord> snapshot() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  [[nodiscard]] std::optional<VoteRecord> last() const {
    std::lock_guard lock(mu_);
    if (records_.empty()) return std::nullopt;
    return records_.back();
  }

  [[nodiscard]] static std::vector<VoteRecord> read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read vote log " + path.string());
    std::vector<VoteRecord> out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        out.push_back(vote_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt vote log line: " + std::string(e.what()));
      }
    }
    return out;
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::vector<VoteRecord> records_;
};

struct Tally {
  std::map<std::string, std::uint64_t> final_votes;
  std::map<std::string, std::uint64_t> stage1_votes;
  std::uint64_t total_final = 0;
  std::uint64_t total_stage1 = 0;

  friend bool operator==(const Tally&, const Tally&) = default;
};

struct TallyFilter {
  std::optional<std::string> image_set;
  std::optional<std::string> cohort;
};

// Final votes per variant. Stage-1 votes count only the last submission
// for each (session, image).
[[nodiscard]] inline Tally tally(const std::vector<VoteRecord>& log, const TallyFilter& filter = {},
                                 const std::vector<std::string>& keys = {}) {
  Tally t;
  for (const auto& k : keys) {
    t.final_votes[k] = 0;
    t.stage1_votes[k] = 0;
  }
  auto wanted = [&](const VoteRecord& r) {
    return (!filter.image_set || r.image_set == *filter.image_set) &&
           (!filter.cohort || r.cohort == *filter.cohort);
  };
  std::map<std::pair<std::string, std::string>, int> last_revision;
  for (const auto& r : log) {
    if (!wanted(r) || r.stage != VoteStage::stage1) continue;
    int& rev = last_revision[{r.session, r.image}];
    rev = std::max(rev, r.revision);
  }
  for (const auto& r : log) {
    if (!wanted(r)) continue;
    if (r.stage == VoteStage::final) {
      ++t.final_votes[r.variant];
      ++t.total_final;
    } else if (r.revision == last_revision[{r.session, r.image}]) {
      ++t.stage1_votes[r.variant];
      ++t.total_stage1;
    }
  }
  return t;
}

[[nodiscard]] inline nlohmann::json to_json(const Tally& t) {
  return {{"final", t.final_votes},
          {"stage1", t.stage1_votes},
          {"total_final", t.total_final},
          {"total_stage1", t.total_stage1}};
}

}  // namespace graymode::eval
