#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "graymode/cli.hpp"
#include "test_dir.hpp"

namespace gm = graymode;
namespace cli = graymode::cli;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "graymode");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Width and height from a PNG IHDR chunk, without decoding the raster.
std::pair<std::uint32_t, std::uint32_t> png_size(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  unsigned char h[24] = {};
  in.read(reinterpret_cast<char*>(h), 24);
  auto be = [&](int i) {
    return (std::uint32_t{h[i]} << 24) | (std::uint32_t{h[i + 1]} << 16) | (std::uint32_t{h[i + 2]} << 8) | h[i + 3];
  };
  return {be(16), be(20)};
}

}  // namespace

TEST(CliConvert, ReferenceGridWithStandardPresetMatchesLibrary) {
  TempDir dir;
  ASSERT_EQ(run({"reference", "--layout", "2d", "--out", (dir / "ref.png").string()}).code, 0);
  const auto r = run({"convert", (dir / "ref.png").string(), "--preset", "standard", "--out",
                      (dir / "gray.png").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto expected = gm::apply_image(gm::LinearOperator::standard(),
                                        gm::reference::render_reference(gm::reference::Layout::grid));
  const auto got = gm::io::read(dir / "gray.png");
  ASSERT_EQ(got.width(), 4096u);
  ASSERT_EQ(got.height(), 4096u);
  const auto e = expected.bytes();
  const auto g = got.bytes();
  for (std::size_t i = 0; i < e.size(); ++i) ASSERT_EQ(g[3 * i], e[i]) << "pixel " << i;
}

TEST(CliConvert, UniformOnWhiteIsWhite) {
  TempDir dir;
  gm::RgbImage white(8, 6);
  for (auto& b : white.bytes()) b = 255;
  gm::io::write_ppm(dir / "white.ppm", white);
  ASSERT_EQ(run({"convert", (dir / "white.ppm").string(), "--preset", "uniform", "--out",
                 (dir / "out.pgm").string()})
                .code,
            0);
  const auto out = gm::io::read(dir / "out.pgm");
  for (auto b : out.bytes()) EXPECT_EQ(b, 255);
}

TEST(CliConvert, FamilyFlags) {
  TempDir dir;
  gm::RgbImage img(1, 1);
  img.set(0, 0, {200, 100, 50});
  gm::io::write_ppm(dir / "in.ppm", img);
  ASSERT_EQ(run({"convert", (dir / "in.ppm").string(), "--family", "0.5", "--fix-blue", "0.114", "--out",
                 (dir / "out.pgm").string()})
                .code,
            0);
  const auto op = gm::family::member_from_blue(gm::family::FamilyParam(0.5), 0.114);
  EXPECT_EQ(gm::io::read(dir / "out.pgm").at(0, 0).r, gm::apply(op, {200, 100, 50}).value());
}

TEST(CliConvert, WeightsMustSumToOne) {
  TempDir dir;
  gm::io::write_ppm(dir / "in.ppm", gm::RgbImage(2, 2));
  const auto r = run({"convert", (dir / "in.ppm").string(), "--weights", "0.5,0.5,0.1", "--out",
                      (dir / "out.pgm").string()});
  EXPECT_EQ(r.code, cli::kDomain);
  EXPECT_NE(r.err.find("sum to 1"), std::string::npos);
}

TEST(CliConvert, ErrorExitCodes) {
  TempDir dir;
  gm::io::write_ppm(dir / "in.ppm", gm::RgbImage(2, 2));
  EXPECT_EQ(run({"convert", (dir / "missing.png").string(), "--preset", "uniform", "--out",
                 (dir / "o.png").string()})
                .code,
            cli::kIo);
  EXPECT_EQ(run({"convert", (dir / "in.ppm").string(), "--preset", "sepia", "--out", (dir / "o.png").string()}).code,
            cli::kUsage);
  EXPECT_EQ(run({"convert", (dir / "in.ppm").string(), "--out", (dir / "o.png").string()}).code, cli::kUsage);
  EXPECT_EQ(run({"convert", (dir / "in.ppm").string(), "--preset", "uniform", "--weights", "0.2,0.3,0.5",
                 "--out", (dir / "o.png").string()})
                .code,
            cli::kUsage);
  EXPECT_EQ(run({"convert", (dir / "in.ppm").string(), "--family", "0.5", "--fix-green", "0.587", "--out",
                 (dir / "o.png").string()})
                .code,
            cli::kDomain);
  EXPECT_EQ(run({"convert", (dir / "in.ppm").string(), "--preset", "uniform", "--out",
                 (dir / "nodir" / "o.png").string()})
                .code,
            cli::kIo);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
}

TEST(CliConvert, EmptyImageIsAnError) {
  TempDir dir;
  std::ofstream(dir / "empty.ppm", std::ios::binary) << "P6\n0 0\n255\n";
  const auto r = run({"convert", (dir / "empty.ppm").string(), "--preset", "uniform", "--out",
                      (dir / "o.png").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(std::filesystem::exists(dir / "o.png"));
}

TEST(CliReference, GridIs4096Square) {
  TempDir dir;
  ASSERT_EQ(run({"reference", "--layout", "2d", "--out", (dir / "r.png").string()}).code, 0);
  EXPECT_EQ(png_size(dir / "r.png"), (std::pair<std::uint32_t, std::uint32_t>{4096, 4096}));
}

TEST(CliReference, ReplicatedStrip) {
  TempDir dir;
  ASSERT_EQ(run({"reference", "--layout", "1d", "--replicate", "32", "--out", (dir / "s.png").string()}).code, 0);
  EXPECT_EQ(png_size(dir / "s.png"), (std::pair<std::uint32_t, std::uint32_t>{16777216, 32}));
}

TEST(CliReference, InvalidLayoutIsUsageError) {
  TempDir dir;
  EXPECT_EQ(run({"reference", "--layout", "3d", "--out", (dir / "r.png").string()}).code, cli::kUsage);
}

TEST(CliAnalyze, UniformCsvSumsToCube) {
  const auto r = run({"analyze", "--preset", "uniform", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 257u);
  EXPECT_EQ(rows[0], gm::kCsvHeader);
  std::uint64_t sum = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto comma = rows[i].find(',');
    sum += std::stoull(rows[i].substr(comma + 1, rows[i].find(',', comma + 1) - comma - 1));
  }
  EXPECT_EQ(sum, gm::kCubeSize);
}

TEST(CliAnalyze, StandardAndChosenLabels) {
  const auto standard = nlohmann::json::parse(run({"analyze", "--preset", "standard", "--format", "json"}).out);
  EXPECT_EQ(standard["eq_class"], "trapezoidal-rounded");
  const auto chosen = nlohmann::json::parse(run({"analyze", "--preset", "chosen", "--format", "json"}).out);
  EXPECT_EQ(chosen["bm_class"], "irregular");
}

TEST(CliAnalyze, ChosenPresetAgreesWithItsFamilyMember) {
  const auto member = gm::family::member_from_blue(gm::family::FamilyParam(0.5), 0.114);
  const auto preset = gm::LinearOperator::chosen();
  EXPECT_NEAR(member.lambda_r(), preset.lambda_r(), 1e-3);
  EXPECT_NEAR(member.lambda_g(), preset.lambda_g(), 1e-3);
  EXPECT_NEAR(member.lambda_b(), preset.lambda_b(), 1e-3);
}

TEST(CliAnalyze, WritesToFileAndRejectsUnknownFormat) {
  TempDir dir;
  ASSERT_EQ(run({"analyze", "--preset", "uniform", "--out", (dir / "u.csv").string()}).code, 0);
  std::ifstream in(dir / "u.csv");
  const auto t = gm::read_csv(in);
  EXPECT_EQ(t.eq.counts[0], 10u);
  EXPECT_EQ(run({"analyze", "--preset", "uniform", "--format", "xml"}).code, cli::kUsage);
}

TEST(CliGrid, RowCounts) {
  const auto full = run({"grid", "--step", "0.1", "--no-classify"});
  ASSERT_EQ(full.code, 0) << full.err;
  EXPECT_EQ(lines(full.out).size(), 67u);
  const auto interior = run({"grid", "--min", "0.1", "--max", "0.8", "--interior", "--no-classify", "--format", "json"});
  EXPECT_EQ(nlohmann::json::parse(interior.out).size(), 36u);
  const auto halves = run({"grid", "--values", "0,0.5,1", "--no-classify", "--format", "json"});
  EXPECT_EQ(nlohmann::json::parse(halves.out).size(), 6u);
}

TEST(CliGrid, InteriorTableHasBothBmClasses) {
  const auto r = run({"grid", "--min", "0.1", "--max", "0.8", "--interior", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<std::string> classes;
  for (const auto& row : nlohmann::json::parse(r.out)) {
    ASSERT_FALSE(row["bm_class"].is_null());
    ASSERT_FALSE(row["eq_class"].is_null());
    classes.insert(row["bm_class"].get<std::string>());
  }
  EXPECT_EQ(classes, (std::set<std::string>{"regular", "irregular"}));
}

TEST(CliVariants, SeventeenFilesAndManifest) {
  TempDir dir;
  gm::RgbImage img(6, 4);
  for (std::size_t i = 0; i < 24; ++i) img.set(i / 6, i % 6, {static_cast<std::uint8_t>(i * 10), 90, 200});
  gm::io::write_png(dir / "face.png", img);
  const auto r = run({"variants", (dir / "face.png").string(), "--out", (dir / "v").string(), "--cohort", "a"});
  ASSERT_EQ(r.code, 0) << r.err;
  int pngs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "v")) {
    pngs += e.path().extension() == ".png" && e.path().filename() != "original.png";
  }
  EXPECT_EQ(pngs, 17);
  std::ifstream in(dir / "v" / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["image_id"], "face");
  EXPECT_EQ(m["cohort"], "a");
  ASSERT_EQ(m["variants"].size(), 17u);
  bool found = false;
  for (const auto& v : m["variants"]) {
    EXPECT_TRUE(std::filesystem::exists(dir / "v" / v["file"].get<std::string>()));
    if (v["key"] == "K0.5_b0.114") {
      found = true;
      EXPECT_NEAR(v["lambda_r"].get<double>(), 0.688, 1e-3);
      const auto gray = gm::io::read(dir / "v" / "K0.5_b0.114.png");
      const auto op = gm::family::member_from_blue(gm::family::FamilyParam(0.5), 0.114);
      EXPECT_EQ(gray.at(1, 2).r, gm::apply(op, img.at(1, 2)).value());
    }
  }
  EXPECT_TRUE(found);
}

TEST(CliVariants, EmptyInputIsAnError) {
  TempDir dir;
  std::ofstream(dir / "empty.ppm", std::ios::binary) << "P6\n0 0\n255\n";
  EXPECT_NE(run({"variants", (dir / "empty.ppm").string(), "--out", (dir / "v").string()}).code, 0);
}
