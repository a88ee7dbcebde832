#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "graymode/error.hpp"
#include "graymode/eval/session.hpp"
#include "graymode/eval/study.hpp"
#include "graymode/eval/vote_log.hpp"

namespace graymode::eval {

struct ServiceConfig {
  std::filesystem::path image_sets_dir;  // one subdirectory per image set
  std::filesystem::path data_dir;        // votes.jsonl + sessions/; empty keeps state in memory
  std::filesystem::path ui_dir;          // optional static bundle served at /
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 0;  // default for sessions created without a seed

  [[nodiscard]] static ServiceConfig from_json(const nlohmann::json& j,
                                               const std::filesystem::path& base = {}) {
    auto rel = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base.empty() ? base / path : path;
    };
    ServiceConfig c;
    c.image_sets_dir = rel(j.at("image_sets").get<std::string>());
    if (j.contains("data_dir")) c.data_dir = rel(j.at("data_dir").get<std::string>());
    if (j.contains("ui_dir")) c.ui_dir = rel(j.at("ui_dir").get<std::string>());
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.seed = j.value("seed", c.seed);
    return c;
  }

  [[nodiscard]] static ServiceConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    nlohmann::json j;
    try {
      in >> j;
      return from_json(j, path.parent_path());
    } catch (const nlohmann::json::exception& e) {
      throw IoError("bad config " + path.string() + ": " + e.what());
    }
  }
};

// The two-stage mosaic protocol over a set of study images. Every public
// member is safe to call concurrently; transitions of one session are
// atomic and persisted before they become visible.
class EvalService {
 public:
  explicit EvalService(ServiceConfig config) : config_(std::move(config)) {
    sets_ = load_image_sets(config_.image_sets_dir);
    if (!config_.data_dir.empty()) {
      std::filesystem::create_directories(config_.data_dir / "sessions");
      log_ = std::make_unique<VoteLog>(config_.data_dir / "votes.jsonl");
      for (const auto& entry : std::filesystem::directory_iterator(config_.data_dir / "sessions")) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        nlohmann::json j;
        in >> j;
        add_session(EvalSession::from_json(j));
      }
    } else {
      log_ = std::make_unique<VoteLog>();
    }
  }

  [[nodiscard]] const ServiceConfig& config() const { return config_; }
  [[nodiscard]] const VoteLog& log() const { return *log_; }
  [[nodiscard]] std::vector<std::string> image_set_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, _] : sets_) ids.push_back(id);
    return ids;
  }

  nlohmann::json create_session(const std::string& observer, const std::string& set_id,
                                std::optional<std::uint64_t> seed = std::nullopt) {
    if (observer.empty()) throw ProtocolError(ProtocolErrorKind::validation, "observer id is required");
    const ImageSet& set = image_set(set_id);
    std::vector<std::string> ids;
    for (const auto& img : set.images) ids.push_back(img.id);

    std::string id;
    {
      std::unique_lock lock(sessions_mu_);
      id = next_session_id_locked();
      reserved_.insert(id);
    }
    const std::uint64_t s = seed.value_or(detail::splitmix64(config_.seed ^ detail::fnv1a(id)));
    EvalSession session(id, observer, set_id, s, ids);
    persist(session);
    add_session(std::move(session));
    return status(id);
  }

  [[nodiscard]] nlohmann::json status(const std::string& session_id) const {
    auto& e = entry(session_id);
    std::lock_guard lock(e.mu);
    return status_json(e.session);
  }

  [[nodiscard]] nlohmann::json get_stage1(const std::string& session_id, const std::string& image_id) const {
    auto& e = entry(session_id);
    std::lock_guard lock(e.mu);
    const auto slots = e.session.stage1(image_id);
    nlohmann::json out_slots = nlohmann::json::array();
    for (const auto& s : slots) {
      if (s.token) {
        out_slots.push_back({{"slot", s.slot}, {"token", *s.token}, {"url", "/assets/" + *s.token}});
      } else {
        out_slots.push_back({{"slot", s.slot}, {"blank", true}});
      }
    }
    const auto i = e.session.image_index(image_id);
    return {{"session_id", session_id},   {"image", image_id},
            {"stage", "stage1"},          {"rows", kMosaicRows},
            {"cols", kMosaicCols},        {"picks_required", kStage1Picks},
            {"original_url", "/assets/" + e.session.original_token(i)},
            {"slots", out_slots}};
  }

  nlohmann::json submit_stage1(const std::string& session_id, const std::string& image_id,
                               const std::vector<std::string>& picks) {
    auto& e = entry(session_id);
    std::lock_guard lock(e.mu);
    EvalSession next = e.session;
    const Stage1Receipt receipt = next.submit_stage1(image_id, picks);
    const std::int64_t ts = now_ms();
    std::vector<VoteRecord> votes;
    for (int v : receipt.variants) {
      votes.push_back(record(next, image_id, v, VoteStage::stage1, receipt.revision, ts));
    }
    commit(e, std::move(next), votes);
    return {{"ok", true}, {"image", image_id}, {"stage", "stage2"}, {"revision", receipt.revision}};
  }

  nlohmann::json get_stage2(const std::string& session_id, const std::string& image_id) {
    auto& e = entry(session_id);
    std::lock_guard lock(e.mu);
    EvalSession next = e.session;
    const auto tokens = next.stage2(image_id);
    const auto i = next.image_index(image_id);
    nlohmann::json slots = nlohmann::json::array();
    for (std::size_t s = 0; s < tokens.size(); ++s) {
      slots.push_back({{"slot", s}, {"token", tokens[s]}, {"url", "/assets/" + tokens[s]}});
    }
    nlohmann::json out = {{"session_id", session_id},
                          {"image", image_id},
                          {"stage", "stage2"},
                          {"rows", 2},
                          {"cols", 2},
                          {"original_url", "/assets/" + next.original_token(i)},
                          {"slots", slots}};
    commit(e, std::move(next), {});
    return out;
  }

  nlohmann::json submit_final(const std::string& session_id, const std::string& image_id,
                              const std::string& pick) {
    auto& e = entry(session_id);
    std::lock_guard lock(e.mu);
    EvalSession next = e.session;
    const FinalReceipt receipt = next.submit_final(image_id, pick);
    const auto rev = next.progress(next.image_index(image_id)).revision;
    commit(e, next, {record(next, image_id, receipt.variant, VoteStage::final, rev, now_ms())});
    return {{"ok", true},
            {"image", image_id},
            {"stage", "done"},
            {"next_image", receipt.next_image ? nlohmann::json(*receipt.next_image) : nlohmann::json(nullptr)},
            {"session_done", !receipt.next_image.has_value()}};
  }

  [[nodiscard]] Tally tally(const TallyFilter& filter = {}) const {
    return eval::tally(log_->snapshot(), filter, case_study_keys());
  }

  [[nodiscard]] std::optional<std::filesystem::path> asset(const std::string& token) const {
    std::shared_lock lock(assets_mu_);
    const auto it = assets_.find(token);
    if (it == assets_.end()) return std::nullopt;
    return it->second;
  }

 private:
  struct Entry {
    explicit Entry(EvalSession s) : session(std::move(s)) {}
    mutable std::mutex mu;
    EvalSession session;
  };

  const ImageSet& image_set(const std::string& id) const {
    const auto it = sets_.find(id);
    if (it == sets_.end()) throw ProtocolError(ProtocolErrorKind::not_found, "unknown image set " + id);
    return it->second;
  }

  Entry& entry(const std::string& id) const {
    std::shared_lock lock(sessions_mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ProtocolError(ProtocolErrorKind::not_found, "unknown session " + id);
    return *it->second;
  }

  std::string next_session_id_locked() {
    for (;;) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "s%06llu", static_cast<unsigned long long>(++counter_));
      if (!sessions_.count(buf) && !reserved_.count(buf)) return buf;
    }
  }

  void add_session(EvalSession session) {
    const ImageSet& set = image_set(session.set_id());
    {
      std::unique_lock lock(assets_mu_);
      for (std::size_t i = 0; i < session.image_ids().size(); ++i) {
        const StudyImage* img = set.find(session.image_ids()[i]);
        if (!img) throw IoError("session " + session.id() + " refers to a missing image");
        assets_[session.original_token(i)] = img->original;
        for (std::size_t v = 0; v < img->variants.size(); ++v) {
          assets_[session.token(i, static_cast<int>(v))] = img->variants[v].file;
        }
      }
    }
    std::unique_lock lock(sessions_mu_);
    reserved_.erase(session.id());
    const std::string id = session.id();
    sessions_[id] = std::make_unique<Entry>(std::move(session));
  }

  VoteRecord record(const EvalSession& s, const std::string& image_id, int variant, VoteStage stage,
                    int revision, std::int64_t ts) const {
    const StudyImage* img = image_set(s.set_id()).find(image_id);
    return {ts,       s.id(),
            s.observer(), s.set_id(),
            image_id, img ? img->cohort : std::string(),
            s.variant_keys().at(static_cast<std::size_t>(variant)),
            stage,    revision};
  }

  // Votes first, then the snapshot, then the in-memory state.
  void commit(Entry& e, EvalSession next, const std::vector<VoteRecord>& votes) {
    if (!votes.empty()) log_->append(votes);
    persist(next);
    e.session = std::move(next);
  }

  void persist(const EvalSession& s) const {
    if (config_.data_dir.empty()) return;
    const auto dir = config_.data_dir / "sessions";
    const auto tmp = dir / (s.id() + ".json.tmp");
    {
      std::ofstream out(tmp);
      out << s.to_json().dump() << '\n';
      if (!out) throw IoError("cannot write session snapshot " + tmp.string());
    }
    std::filesystem::rename(tmp, dir / (s.id() + ".json"));
  }

  nlohmann::json status_json(const EvalSession& s) const {
    nlohmann::json images = nlohmann::json::array();
    for (std::size_t i = 0; i < s.image_ids().size(); ++i) {
      const auto& p = s.progress(i);
      images.push_back({{"id", s.image_ids()[i]},
                        {"stage", to_string(p.stage)},
                        {"stage1_open", p.stage == ImageStage::stage1 ||
                                            (p.stage == ImageStage::stage2 && !p.stage2_served)}});
    }
    const auto cur = s.current();
    return {{"session_id", s.id()},
            {"observer", s.observer()},
            {"image_set", s.set_id()},
            {"seed", s.seed()},
            {"images", images},
            {"current_image", cur ? nlohmann::json(s.image_ids()[*cur]) : nlohmann::json(nullptr)},
            {"done", s.done()}};
  }

  ServiceConfig config_;
  std::map<std::string, ImageSet> sets_;
  std::unique_ptr<VoteLog> log_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Entry>> sessions_;
  std::set<std::string> reserved_;
  std::uint64_t counter_ = 0;

  mutable std::shared_mutex assets_mu_;
  std::unordered_map<std::string, std::filesystem::path> assets_;
};

namespace detail {

inline int http_status(ProtocolErrorKind k) {
  switch (k) {
    case ProtocolErrorKind::not_found: return 404;
    case ProtocolErrorKind::conflict: return 409;
    case ProtocolErrorKind::validation: return 400;
  }
  return 500;
}

inline const char* kind_name(ProtocolErrorKind k) {
  switch (k) {
    case ProtocolErrorKind::not_found: return "not_found";
    case ProtocolErrorKind::conflict: return "conflict";
    case ProtocolErrorKind::validation: return "validation";
  }
  return "error";
}

inline void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Runs a handler body and maps failures onto HTTP status codes.
template <typename Body>
void guarded(httplib::Response& res, Body&& body) {
  try {
    body();
  } catch (const ProtocolError& e) {
    reply(res, http_status(e.kind()), {{"error", e.what()}, {"kind", kind_name(e.kind())}});
  } catch (const nlohmann::json::exception& e) {
    reply(res, 400, {{"error", std::string("bad request body: ") + e.what()}, {"kind", "validation"}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}, {"kind", "internal"}});
  }
}

}  // namespace detail

inline void register_routes(httplib::Server& server, EvalService& service) {
  using nlohmann::json;
  using detail::guarded;
  using detail::reply;

  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      std::optional<std::uint64_t> seed;
      if (body.contains("seed") && !body["seed"].is_null()) seed = body["seed"].get<std::uint64_t>();
      reply(res, 201, service.create_session(body.at("observer").get<std::string>(),
                                             body.at("image_set").get<std::string>(), seed));
    });
  });
  server.Get(R"(/sessions/([^/]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, service.status(req.matches[1])); });
  });
  server.Get(R"(/sessions/([^/]+)/images/([^/]+)/stage1)",
             [&service](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { reply(res, 200, service.get_stage1(req.matches[1], req.matches[2])); });
             });
  server.Post(R"(/sessions/([^/]+)/images/([^/]+)/stage1)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const json body = json::parse(req.body);
                  reply(res, 200,
                        service.submit_stage1(req.matches[1], req.matches[2],
                                              body.at("picks").get<std::vector<std::string>>()));
                });
              });
  server.Get(R"(/sessions/([^/]+)/images/([^/]+)/stage2)",
             [&service](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { reply(res, 200, service.get_stage2(req.matches[1], req.matches[2])); });
             });
  server.Post(R"(/sessions/([^/]+)/images/([^/]+)/final)",
              [&service](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const json body = json::parse(req.body);
                  reply(res, 200,
                        service.submit_final(req.matches[1], req.matches[2], body.at("pick").get<std::string>()));
                });
              });
  server.Get("/tally", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      TallyFilter f;
      if (req.has_param("set")) f.image_set = req.get_param_value("set");
      if (req.has_param("cohort")) f.cohort = req.get_param_value("cohort");
      json out = to_json(service.tally(f));
      out["image_set"] = f.image_set ? json(*f.image_set) : json(nullptr);
      out["cohort"] = f.cohort ? json(*f.cohort) : json(nullptr);
      reply(res, 200, out);
    });
  });
  server.Get(R"(/assets/([0-9a-f]+))", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto path = service.asset(req.matches[1]);
      if (!path) throw ProtocolError(ProtocolErrorKind::not_found, "unknown asset");
      std::ifstream in(*path, std::ios::binary);
      if (!in) throw IoError("cannot read asset");
      std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      res.status = 200;
      res.set_content(std::move(data), "image/png");
    });
  });
  if (!service.config().ui_dir.empty()) server.set_mount_point("/", service.config().ui_dir.string());
}

}  // namespace graymode::eval
