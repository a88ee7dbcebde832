#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graymode/classifier.hpp"
#include "graymode/error.hpp"
#include "graymode/families.hpp"
#include "graymode/image.hpp"
#include "graymode/image_io.hpp"
#include "graymode/modes.hpp"
#include "graymode/operator_spec.hpp"
#include "graymode/reference_image.hpp"
#include "graymode/report.hpp"

namespace graymode::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kDomain = 4,
};

namespace detail {

struct OperatorFlags {
  std::string weights;
  std::optional<double> family;
  std::optional<double> fix_blue, fix_red, fix_green;
  bool minus_root = false;
  std::string preset;

  void attach(CLI::App& app) {
    app.add_option("--weights", weights, "Explicit weights r,g,b");
    app.add_option("--family", family, "Family parameter K");
    app.add_option("--fix-blue", fix_blue, "Member by blue weight");
    app.add_option("--fix-red", fix_red, "Member by red weight");
    app.add_option("--fix-green", fix_green, "Member by green weight");
    app.add_flag("--minus-root", minus_root, "Take the second root when green is fixed");
    app.add_option("--preset", preset, "uniform | standard | chosen");
  }

  [[nodiscard]] OperatorSpec spec() const {
    const int forms = (!weights.empty()) + family.has_value() + (!preset.empty());
    if (forms != 1) {
      throw ArgumentError("give exactly one of --weights, --family or --preset");
    }
    if (!weights.empty()) return parse_weights(weights);
    if (!preset.empty()) return parse_preset(preset);
    const int fixed = fix_blue.has_value() + fix_red.has_value() + fix_green.has_value();
    if (fixed != 1) throw ArgumentError("--family needs exactly one of --fix-blue, --fix-red, --fix-green");
    family::MemberSpec m;
    m.k = *family;
    if (fix_blue) {
      m.fixed_channel = Channel::blue;
      m.fixed_value = *fix_blue;
    } else if (fix_red) {
      m.fixed_channel = Channel::red;
      m.fixed_value = *fix_red;
    } else {
      m.fixed_channel = Channel::green;
      m.fixed_value = *fix_green;
    }
    if (minus_root && m.fixed_channel != Channel::green) {
      throw ArgumentError("--minus-root only applies with --fix-green");
    }
    m.root_sign = minus_root ? family::RootSign::minus : family::RootSign::plus;
    return m;
  }
};

// "-" writes to `out`.
template <typename Writer>
void emit(const std::string& path, std::ostream& out, Writer&& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write(f);
  if (!f) throw IoError("write failed: " + path);
}

inline void check_format(const std::string& format) {
  if (format != "csv" && format != "json") throw ArgumentError("--format must be csv or json");
}

inline std::string optional_label(const std::optional<EqClass>& c) {
  return c ? to_string(*c) : "";
}

}  // namespace detail

// Manifest describing the 17 case-study variants of one image.
[[nodiscard]] inline nlohmann::json variants_manifest(const std::string& image_id,
                                                      const std::string& cohort) {
  nlohmann::json variants = nlohmann::json::array();
  for (const auto& e : family::case_study_grid()) {
    variants.push_back({{"key", e.spec.key()},
                        {"file", e.spec.key() + ".png"},
                        {"fixed_channel", channel_letter(e.spec.fixed_channel)},
                        {"fixed_value", e.spec.fixed_value},
                        {"k", e.spec.k},
                        {"lambda_r", e.op.lambda_r()},
                        {"lambda_g", e.op.lambda_g()},
                        {"lambda_b", e.op.lambda_b()}});
  }
  return {{"image_id", image_id},
          {"cohort", cohort},
          {"original", "original.png"},
          {"variants", variants}};
}

inline void write_variants(const RgbImage& image, const std::filesystem::path& dir,
                           const std::string& image_id, const std::string& cohort) {
  if (image.empty()) throw EmptyInputError("input image is empty");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& e : family::case_study_grid()) {
    io::write_png(dir / (e.spec.key() + ".png"), apply_image(e.op, image));
  }
  io::write_png(dir / "original.png", image);
  std::ofstream f(dir / "manifest.json");
  if (!f) throw IoError("cannot write manifest in " + dir.string());
  f << variants_manifest(image_id, cohort).dump(2) << '\n';
}

[[nodiscard]] inline nlohmann::json grid_json(const std::vector<family::GridCandidate>& grid,
                                              bool classify_rows) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : grid) {
    nlohmann::json row = {{"lambda_r", c.lambda_r},
                          {"lambda_g", c.lambda_g},
                          {"lambda_b", c.lambda_b},
                          {"degenerate", c.degenerate},
                          {"k", nullptr},
                          {"eq_class", nullptr},
                          {"bm_class", nullptr}};
    if (const auto op = c.op()) {
      row["k"] = family::family_of(*op).value();
      if (classify_rows) {
        const ModeReport r = make_report(*op);
        if (r.eq_class) row["eq_class"] = to_string(*r.eq_class);
        if (r.bm_class) row["bm_class"] = to_string(*r.bm_class);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_grid_csv(std::ostream& out, const nlohmann::json& rows) {
  out << "lambda_r,lambda_g,lambda_b,degenerate,k,eq_class,bm_class\n";
  for (const auto& row : rows) {
    out << graymode::detail::real(row["lambda_r"]) << ',' << graymode::detail::real(row["lambda_g"])
        << ',' << graymode::detail::real(row["lambda_b"]) << ','
        << (row["degenerate"].get<bool>() ? "true" : "false") << ',';
    if (!row["k"].is_null()) out << graymode::detail::real(row["k"]);
    out << ',';
    if (!row["eq_class"].is_null()) out << row["eq_class"].get<std::string>();
    out << ',';
    if (!row["bm_class"].is_null()) out << row["bm_class"].get<std::string>();
    out << '\n';
  }
}

// Runs one command line. args[0] is the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Characterize color-to-gray projection operators", "graymode"};
  app.require_subcommand(1);

  // convert
  auto* convert = app.add_subcommand("convert", "Project a color image to gray");
  std::string convert_in, convert_out;
  detail::OperatorFlags convert_op;
  convert->add_option("input", convert_in, "Color PNG or PPM")->required();
  convert->add_option("--out", convert_out, "Gray PNG or PGM")->required();
  convert_op.attach(*convert);

  // reference
  auto* reference = app.add_subcommand("reference", "Render the all-colors reference image");
  std::string layout, reference_out;
  std::size_t replicate = 1;
  reference->add_option("--layout", layout, "1d | 2d")->required();
  reference->add_option("--replicate", replicate, "Rows of the 1D strip");
  reference->add_option("--out", reference_out, "PNG or PPM")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Compute EQ and BM modes of an operator");
  detail::OperatorFlags analyze_op;
  std::string analyze_format = "csv", analyze_out = "-";
  analyze_op.attach(*analyze);
  analyze->add_option("--format", analyze_format, "csv | json");
  analyze->add_option("--out", analyze_out, "Output path, - for stdout");

  // grid
  auto* grid = app.add_subcommand("grid", "Enumerate discrete weight candidates");
  double grid_min = 0.0, grid_max = 1.0, grid_step = 0.1;
  std::vector<double> grid_values;
  bool grid_interior = false, grid_no_classify = false;
  std::string grid_format = "csv", grid_out = "-";
  grid->add_option("--min", grid_min, "Smallest weight value");
  grid->add_option("--max", grid_max, "Largest weight value");
  grid->add_option("--step", grid_step, "Spacing of weight values");
  grid->add_option("--values", grid_values, "Explicit value set")->delimiter(',');
  grid->add_flag("--interior", grid_interior, "Drop triples containing 0 or 1");
  grid->add_flag("--no-classify", grid_no_classify, "Skip mode computation and labels");
  grid->add_option("--format", grid_format, "csv | json");
  grid->add_option("--out", grid_out, "Output path, - for stdout");

  // variants
  auto* variants = app.add_subcommand("variants", "Write the 17 case-study gray variants");
  std::string variants_in, variants_out, variants_id, variants_cohort;
  variants->add_option("input", variants_in, "Color PNG or PPM")->required();
  variants->add_option("--out", variants_out, "Output directory")->required();
  variants->add_option("--id", variants_id, "Image id (default: input stem)");
  variants->add_option("--cohort", variants_cohort, "Cohort tag for tallies");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "graymode: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*convert) {
      const LinearOperator op = resolve(convert_op.spec());
      const RgbImage image = io::read(convert_in);
      io::write(convert_out, apply_image(op, image));
    } else if (*reference) {
      reference::Layout l;
      if (layout == "1d" || layout == "1D") {
        l = reference::Layout::linear;
      } else if (layout == "2d" || layout == "2D") {
        l = reference::Layout::grid;
      } else {
        throw ArgumentError("--layout must be 1d or 2d");
      }
      io::write(reference_out, reference::render_reference(l, replicate));
    } else if (*analyze) {
      detail::check_format(analyze_format);
      const LinearOperator op = resolve(analyze_op.spec());
      const ModeReport r = make_report(op);
      detail::emit(analyze_out, out, [&](std::ostream& o) {
        if (analyze_format == "csv") {
          write_csv(o, r);
        } else {
          o << to_json(r).dump(2) << '\n';
        }
      });
    } else if (*grid) {
      detail::check_format(grid_format);
      const std::vector<double> values =
          grid_values.empty() ? family::stepped_values(grid_min, grid_max, grid_step) : grid_values;
      const auto candidates = family::enumerate_grid(values, grid_interior);
      const auto rows = grid_json(candidates, !grid_no_classify);
      detail::emit(grid_out, out, [&](std::ostream& o) {
        if (grid_format == "csv") {
          write_grid_csv(o, rows);
        } else {
          o << rows.dump(2) << '\n';
        }
      });
    } else if (*variants) {
      const RgbImage image = io::read(variants_in);
      const std::string id =
          variants_id.empty() ? std::filesystem::path(variants_in).stem().string() : variants_id;
      write_variants(image, variants_out, id, variants_cohort);
    }
  } catch (const ArgumentError& e) {
    err << "graymode: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "graymode: " << e.what() << '\n';
    return kIo;
  } catch (const DomainError& e) {
    err << "graymode: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    err << "graymode: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace graymode::cli
