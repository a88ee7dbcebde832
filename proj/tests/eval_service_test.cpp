#include <gtest/gtest.h>

#include <thread>

#include "graymode/eval/service.hpp"
#include "study_fixture.hpp"
#include "test_dir.hpp"

namespace ev = graymode::eval;
using nlohmann::json;

namespace {

// A service over a fresh two-set study tree, reachable over HTTP.
class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    write_study_set(dir_ / "sets", "faces", 3, 2);
    write_study_set(dir_ / "sets", "other", 1);
    std::filesystem::create_directories(dir_ / "sets" / "notes");
    start();
  }
  void TearDown() override { stop(); }

  void start() {
    ev::ServiceConfig cfg;
    cfg.image_sets_dir = dir_ / "sets";
    cfg.data_dir = dir_ / "data";
    cfg.seed = 5;
    service_ = std::make_unique<ev::EvalService>(cfg);
    server_ = std::make_unique<httplib::Server>();
    ev::register_routes(*server_, *service_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void stop() {
    server_->stop();
    thread_.join();
    client_.reset();
    server_.reset();
    service_.reset();
  }

  std::pair<int, json> get(const std::string& path) {
    auto r = client_->Get(path);
    if (!r) return {0, json()};
    return {r->status, r->body.empty() ? json() : json::parse(r->body, nullptr, false)};
  }
  std::pair<int, json> post(const std::string& path, const json& body) {
    auto r = client_->Post(path, body.dump(), "application/json");
    if (!r) return {0, json()};
    return {r->status, json::parse(r->body, nullptr, false)};
  }

  std::string new_session(const std::string& observer = "o1", std::uint64_t seed = 11) {
    auto [status, body] = post("/sessions", {{"observer", observer}, {"image_set", "faces"}, {"seed", seed}});
    EXPECT_EQ(status, 201);
    return body["session_id"].get<std::string>();
  }

  std::vector<std::string> mosaic_tokens(const std::string& sid, const std::string& img) {
    auto [status, body] = get("/sessions/" + sid + "/images/" + img + "/stage1");
    EXPECT_EQ(status, 200);
    std::vector<std::string> tokens;
    for (const auto& s : body["slots"]) {
      if (s.contains("token")) tokens.push_back(s["token"]);
    }
    return tokens;
  }

  // Runs one image through both stages, picking the first four mosaic
  // cells and then the pick at `final_index`.
  std::string complete_image(const std::string& sid, const std::string& img, int final_index = 0) {
    const auto tokens = mosaic_tokens(sid, img);
    const std::vector<std::string> picks(tokens.begin(), tokens.begin() + 4);
    EXPECT_EQ(post("/sessions/" + sid + "/images/" + img + "/stage1", {{"picks", picks}}).first, 200);
    auto [s2, stage2] = get("/sessions/" + sid + "/images/" + img + "/stage2");
    EXPECT_EQ(s2, 200);
    const std::string pick = stage2["slots"][final_index]["token"];
    EXPECT_EQ(post("/sessions/" + sid + "/images/" + img + "/final", {{"pick", pick}}).first, 200);
    return pick;
  }

  TempDir dir_;
  std::unique_ptr<ev::EvalService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

bool mentions_weights(const json& j) {
  const std::string text = j.dump();
  for (const char* needle : {"lambda", "\"k\"", "K0.", "K2.", "_b0.", "_r0.", "_g0.", "0.114", "0.299", "0.587"}) {
    if (text.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_F(ServiceTest, CreateSession) {
  auto [status, body] = post("/sessions", {{"observer", "o1"}, {"image_set", "faces"}, {"seed", 3}});
  EXPECT_EQ(status, 201);
  EXPECT_EQ(body["current_image"], "img00");
  EXPECT_EQ(body["images"].size(), 3u);
  EXPECT_EQ(body["images"][0]["stage"], "stage1");
  EXPECT_FALSE(body["done"].get<bool>());
}

TEST_F(ServiceTest, UnknownSetOrSessionIsNotFound) {
  EXPECT_EQ(post("/sessions", {{"observer", "o1"}, {"image_set", "nope"}}).first, 404);
  EXPECT_EQ(get("/sessions/s999999").first, 404);
  EXPECT_EQ(get("/sessions/s999999/images/img00/stage1").first, 404);
  EXPECT_EQ(post("/sessions", {{"image_set", "faces"}}).first, 400);
  auto r = client_->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST_F(ServiceTest, SameSeedSamePlacement) {
  const auto a = new_session("o1", 77);
  const auto b = new_session("o2", 77);
  auto [sa, ma] = get("/sessions/" + a + "/images/img00/stage1");
  auto [sb, mb] = get("/sessions/" + b + "/images/img00/stage1");
  EXPECT_EQ(ma["slots"], mb["slots"]);
  EXPECT_NE(a, b);
}

TEST_F(ServiceTest, MosaicIsBlind) {
  const auto sid = new_session();
  auto [status, body] = get("/sessions/" + sid + "/images/img00/stage1");
  ASSERT_EQ(status, 200);
  EXPECT_EQ(body["rows"], 3);
  EXPECT_EQ(body["cols"], 6);
  ASSERT_EQ(body["slots"].size(), 18u);
  int blanks = 0;
  for (const auto& s : body["slots"]) blanks += s.value("blank", false);
  EXPECT_EQ(blanks, 1);
  EXPECT_EQ(mosaic_tokens(sid, "img00").size(), 17u);
  EXPECT_TRUE(body["original_url"].get<std::string>().starts_with("/assets/"));
  EXPECT_FALSE(mentions_weights(body));
}

TEST_F(ServiceTest, FullFlowWithErrors) {
  const auto sid = new_session();
  const std::string base = "/sessions/" + sid + "/images/img00";
  const auto tokens = mosaic_tokens(sid, "img00");
  EXPECT_EQ(get(base + "/stage2").first, 409);
  EXPECT_EQ(post(base + "/stage1", {{"picks", std::vector<std::string>(tokens.begin(), tokens.begin() + 3)}}).first,
            400);
  EXPECT_EQ(post(base + "/stage1", {{"picks", {tokens[0], tokens[0], tokens[1], tokens[2]}}}).first, 400);
  const auto other = mosaic_tokens(new_session("o2"), "img00");
  EXPECT_EQ(post("/sessions/" + sid + "/images/img01/stage1", {{"picks", std::vector<std::string>(tokens.begin(), tokens.begin() + 4)}}).first,
            409);

  const std::vector<std::string> picks(tokens.begin() + 2, tokens.begin() + 6);
  auto [s1, ack] = post(base + "/stage1", {{"picks", picks}});
  EXPECT_EQ(s1, 200);
  EXPECT_EQ(ack["stage"], "stage2");
  EXPECT_EQ(get(base + "/stage1").first, 409);

  auto [s2, stage2] = get(base + "/stage2");
  ASSERT_EQ(s2, 200);
  ASSERT_EQ(stage2["slots"].size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(stage2["slots"][i]["token"], picks[static_cast<std::size_t>(i)]);
  EXPECT_FALSE(mentions_weights(stage2));

  EXPECT_EQ(post(base + "/final", {{"pick", tokens[10]}}).first, 400);
  auto [sf, fin] = post(base + "/final", {{"pick", picks[1]}});
  EXPECT_EQ(sf, 200);
  EXPECT_EQ(fin["next_image"], "img01");
  EXPECT_FALSE(fin["session_done"].get<bool>());
  EXPECT_EQ(post(base + "/final", {{"pick", picks[1]}}).first, 409);
  (void)other;
}

TEST_F(ServiceTest, AssetsServeTheFiles) {
  const auto sid = new_session();
  auto [status, body] = get("/sessions/" + sid + "/images/img00/stage1");
  const std::string url = body["slots"][0].contains("token") ? body["slots"][0]["url"] : body["slots"][1]["url"];
  auto r = client_->Get(url);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  EXPECT_TRUE(r->body.starts_with("asset img00 "));
  auto orig = client_->Get(body["original_url"].get<std::string>());
  ASSERT_TRUE(orig);
  EXPECT_EQ(orig->body, "asset img00 original");
  EXPECT_EQ(client_->Get("/assets/0000000000000000")->status, 404);
}

TEST_F(ServiceTest, EmptyTallyIsZero) {
  auto [status, body] = get("/tally");
  ASSERT_EQ(status, 200);
  EXPECT_EQ(body["total_final"], 0);
  EXPECT_EQ(body["final"].size(), 17u);
  for (const auto& [k, v] : body["final"].items()) EXPECT_EQ(v, 0);
}

TEST_F(ServiceTest, TallyCountsFinalsAndFiltersByCohort) {
  for (int o = 0; o < 3; ++o) {
    const auto sid = new_session("o" + std::to_string(o), 100 + o);
    for (const char* img : {"img00", "img01", "img02"}) complete_image(sid, img);
    EXPECT_TRUE(get("/sessions/" + sid).second["done"].get<bool>());
  }
  auto [s, all] = get("/tally?set=faces");
  EXPECT_EQ(all["total_final"], 9);
  EXPECT_EQ(all["total_stage1"], 36);
  EXPECT_EQ(get("/tally?set=faces&cohort=a").second["total_final"], 6);
  EXPECT_EQ(get("/tally?set=faces&cohort=b").second["total_final"], 3);
  EXPECT_EQ(get("/tally?set=other").second["total_final"], 0);
}

TEST_F(ServiceTest, StageOneResubmissionCountsOnlyTheLastPicks) {
  const auto sid = new_session();
  const std::string base = "/sessions/" + sid + "/images/img00";
  const auto tokens = mosaic_tokens(sid, "img00");
  ASSERT_EQ(post(base + "/stage1", {{"picks", std::vector<std::string>(tokens.begin(), tokens.begin() + 4)}}).first, 200);
  auto [status, ack] = post(base + "/stage1", {{"picks", std::vector<std::string>(tokens.begin() + 4, tokens.begin() + 8)}});
  ASSERT_EQ(status, 200);
  EXPECT_EQ(ack["revision"], 2);
  EXPECT_EQ(get("/tally").second["total_stage1"], 4);
  ASSERT_EQ(get(base + "/stage2").first, 200);
  EXPECT_EQ(post(base + "/stage1", {{"picks", std::vector<std::string>(tokens.begin(), tokens.begin() + 4)}}).first, 409);
}

TEST_F(ServiceTest, StateSurvivesRestartAndLogReplays) {
  const auto sid = new_session();
  complete_image(sid, "img00", 2);
  const auto tokens = mosaic_tokens(sid, "img01");
  ASSERT_EQ(post("/sessions/" + sid + "/images/img01/stage1",
                 {{"picks", std::vector<std::string>(tokens.begin(), tokens.begin() + 4)}})
                .first,
            200);
  const auto before = service_->tally();
  stop();
  start();
  auto [status, body] = get("/sessions/" + sid);
  ASSERT_EQ(status, 200);
  EXPECT_EQ(body["current_image"], "img01");
  EXPECT_EQ(body["images"][1]["stage"], "stage2");
  EXPECT_EQ(service_->tally(), before);
  EXPECT_EQ(ev::tally(ev::VoteLog::read(dir_ / "data" / "votes.jsonl"), {}, ev::case_study_keys()), before);
  EXPECT_EQ(get("/sessions/" + sid + "/images/img01/stage2").first, 200);
  EXPECT_NE(new_session("o9"), sid);
}

TEST_F(ServiceTest, ConcurrentSessions) {
  constexpr int kObservers = 8;
  std::vector<std::string> ids;
  for (int o = 0; o < kObservers; ++o) ids.push_back(new_session("o" + std::to_string(o), 500 + o));
  std::vector<std::thread> workers;
  std::atomic<int> failures{0};
  for (int o = 0; o < kObservers; ++o) {
    workers.emplace_back([&, o] {
      httplib::Client c("127.0.0.1", port_);
      for (const char* img : {"img00", "img01", "img02"}) {
        const std::string base = "/sessions/" + ids[static_cast<std::size_t>(o)] + "/images/" + img;
        auto m = c.Get(base + "/stage1");
        if (!m || m->status != 200) { ++failures; return; }
        std::vector<std::string> picks;
        const json view = json::parse(m->body);
        for (const auto& s : view["slots"]) {
          if (s.contains("token") && picks.size() < 4) picks.push_back(s["token"]);
        }
        auto a = c.Post(base + "/stage1", json{{"picks", picks}}.dump(), "application/json");
        auto b = c.Get(base + "/stage2");
        auto f = c.Post(base + "/final", json{{"pick", picks[static_cast<std::size_t>(o % 4)]}}.dump(), "application/json");
        if (!a || !b || !f || a->status != 200 || b->status != 200 || f->status != 200) ++failures;
      }
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(failures, 0);
  EXPECT_EQ(service_->tally().total_final, 3u * kObservers);
  EXPECT_EQ(ev::VoteLog::read(dir_ / "data" / "votes.jsonl").size(), 3u * kObservers * 5u);
}

TEST(Tally, EveryFinalOnOneVariant) {
  std::vector<ev::VoteRecord> log;
  for (int i = 0; i < 20; ++i) {
    log.push_back({1, "s" + std::to_string(i), "o", "faces", "img", "", "K0.5_b0.114", ev::VoteStage::final, 1});
  }
  const auto t = ev::tally(log, {}, ev::case_study_keys());
  EXPECT_EQ(t.final_votes.at("K0.5_b0.114"), t.total_final);
  EXPECT_EQ(t.total_final, 20u);
}

TEST(ServiceConfig, RelativePathsResolveAgainstTheConfigFile) {
  const auto c = ev::ServiceConfig::from_json({{"image_sets", "sets"}, {"data_dir", "/abs/data"}, {"port", 9000}},
                                              "/etc/study");
  EXPECT_EQ(c.image_sets_dir, std::filesystem::path("/etc/study/sets"));
  EXPECT_EQ(c.data_dir, std::filesystem::path("/abs/data"));
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.host, "127.0.0.1");
}
