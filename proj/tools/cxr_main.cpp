// cxr: batch toolkit for pediatric chest X-ray region extraction.
// Subcommands expose the pipeline stages over files; `run` drives the whole
// chain from a JSON manifest.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cxr/enhance.hpp"
#include "cxr/image_io.hpp"
#include "cxr/metrics.hpp"
#include "cxr/orientation.hpp"
#include "cxr/pipeline.hpp"
#include "cxr/regions.hpp"
#include "cxr/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCaseFailed = 1;
constexpr int kExitUsage = 2;

bool parse_pair(const std::string& text, char sep, int& a, int& b) {
  const auto pos = text.find(sep);
  if (pos == std::string::npos) return false;
  try {
    a = std::stoi(text.substr(0, pos));
    b = std::stoi(text.substr(pos + 1));
  } catch (...) {
    return false;
  }
  return a >= 1 && b >= 1;
}

// flag holders shared between the config file and command line
struct CommonFlags {
  std::string config_path;
  double clip_limit = 2.0;
  std::string tiles = "8x8";
  double epsilon = 1e-10;
  double confidence_threshold = 0.7;
  double margin = 0.1;
  std::string spine_side = "auto";
  std::string resize_metrics = "256x256";
  std::string out_dir;
  int jobs = 1;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file (flags override it)");
  cmd->add_option("--clip-limit", flags.clip_limit, "CLAHE clip limit (x uniform bin height)");
  cmd->add_option("--tiles", flags.tiles, "CLAHE tile grid, e.g. 8x8");
  cmd->add_option("--epsilon", flags.epsilon, "z-normalization epsilon");
  cmd->add_option("--confidence-threshold", flags.confidence_threshold,
                  "minimum detection confidence");
  cmd->add_option("--margin", flags.margin, "crop margin fraction per side");
  cmd->add_option("--spine-side", flags.spine_side, "LAT spine side: auto, left or right")
      ->check(CLI::IsMember({"auto", "left", "right"}));
  cmd->add_option("--resize-metrics", flags.resize_metrics,
                  "evaluation resample size WxH, or 'none'");
  cmd->add_option("--out-dir", flags.out_dir, "output directory");
  cmd->add_option("--jobs", flags.jobs, "worker pool width")->check(CLI::PositiveNumber);
}

// Build the pipeline config: defaults, then config file, then explicit flags.
cxr::PipelineConfig make_config(const CLI::App* cmd, const CommonFlags& flags) {
  cxr::PipelineConfig config;

  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) cxr::fail(cxr::ErrorCode::FileNotFound, flags.config_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      cxr::fail(cxr::ErrorCode::CorruptData,
                "bad config JSON " + flags.config_path + ": " + e.what());
    }
    config.clahe.clip_limit = j.value("clip_limit", config.clahe.clip_limit);
    if (j.contains("tiles")) {
      config.clahe.tiles_x = j["tiles"].at(0).get<int>();
      config.clahe.tiles_y = j["tiles"].at(1).get<int>();
    }
    config.epsilon = j.value("epsilon", config.epsilon);
    config.confidence_threshold = j.value("confidence_threshold", config.confidence_threshold);
    config.margin_frac = j.value("margin", config.margin_frac);
    config.min_rotation_deg = j.value("min_rotation_deg", config.min_rotation_deg);
    config.spine.strip_frac = j.value("spine_strip_frac", config.spine.strip_frac);
    config.tmpl.latmm_width_frac = j.value("latmm_width_frac", config.tmpl.latmm_width_frac);
    config.jobs = j.value("jobs", config.jobs);
    if (j.contains("spine_side")) {
      const std::string s = j["spine_side"].get<std::string>();
      if (s == "left") config.spine_side_override = cxr::Side::Left;
      if (s == "right") config.spine_side_override = cxr::Side::Right;
    }
    if (j.contains("resize_metrics")) {
      if (j["resize_metrics"].is_null())
        config.resize_metrics.reset();
      else
        config.resize_metrics = {{j["resize_metrics"].at(0).get<int>(),
                                  j["resize_metrics"].at(1).get<int>()}};
    }
  }

  const auto given = [&](const std::string& name) { return cmd->count(name) > 0; };
  if (given("--clip-limit")) config.clahe.clip_limit = flags.clip_limit;
  if (given("--tiles") || flags.config_path.empty()) {
    int tx, ty;
    if (!parse_pair(flags.tiles, 'x', tx, ty))
      cxr::fail(cxr::ErrorCode::InvalidParams, "bad --tiles value: " + flags.tiles);
    config.clahe.tiles_x = tx;
    config.clahe.tiles_y = ty;
  }
  if (given("--epsilon")) config.epsilon = flags.epsilon;
  if (given("--confidence-threshold")) config.confidence_threshold = flags.confidence_threshold;
  if (given("--margin")) config.margin_frac = flags.margin;
  if (given("--jobs")) config.jobs = flags.jobs;
  if (given("--spine-side")) {
    if (flags.spine_side == "left") config.spine_side_override = cxr::Side::Left;
    else if (flags.spine_side == "right") config.spine_side_override = cxr::Side::Right;
    else config.spine_side_override.reset();
  }
  if (given("--resize-metrics")) {
    if (flags.resize_metrics == "none") {
      config.resize_metrics.reset();
    } else {
      int w, h;
      if (!parse_pair(flags.resize_metrics, 'x', w, h))
        cxr::fail(cxr::ErrorCode::InvalidParams,
                  "bad --resize-metrics value: " + flags.resize_metrics);
      config.resize_metrics = {{w, h}};
    }
  }
  if (given("--out-dir")) config.out_dir = flags.out_dir;
  return config;
}

// ---- enhance ----

int cmd_enhance(const std::string& in, const std::string& out, const std::string& op,
                const cxr::PipelineConfig& config) {
  const cxr::GrayImage img = cxr::load_image(in);
  if (op == "clahe") {
    cxr::save_image(cxr::clahe(img, config.clahe), out);
    return kExitOk;
  }
  // znorm: raw little-endian float64 rows plus stats on stdout
  const cxr::RealImage norm = cxr::znormalize(img, config.epsilon);
  std::ofstream f(out, std::ios::binary);
  if (!f) cxr::fail(cxr::ErrorCode::IoError, "cannot write " + out);
  f.write(reinterpret_cast<const char*>(norm.values.data()),
          static_cast<std::streamsize>(norm.values.size() * sizeof(double)));
  double mean = 0;
  for (double v : norm.values) mean += v;
  mean /= double(norm.values.size());
  double var = 0;
  for (double v : norm.values) var += (v - mean) * (v - mean);
  var /= double(norm.values.size());
  std::cout << json{{"width", norm.width}, {"height", norm.height}, {"mean", mean},
                    {"variance", var}}
                   .dump()
            << "\n";
  return kExitOk;
}

// ---- crop ----

int cmd_crop(const std::string& image_path, const std::string& mask_path,
             const std::string& detection_path, const std::string& view_name,
             const std::string& out_image, const std::string& out_mask,
             const cxr::PipelineConfig& config) {
  const cxr::ViewKind view = view_name == "LAT" ? cxr::ViewKind::LAT : cxr::ViewKind::AP;
  const cxr::GrayImage img = cxr::load_image(image_path);
  const cxr::BinaryMask mask = cxr::load_mask(mask_path);

  cxr::BBox rect;
  if (!detection_path.empty()) {
    const cxr::DetectionRecord det = cxr::load_detection(detection_path);
    if (det.view != view)
      cxr::fail(cxr::ErrorCode::InvalidParams, "detection view does not match --view");
    rect = cxr::detection_crop_rect(det, config.margin_frac, img.width, img.height,
                                    config.confidence_threshold);
  } else {
    const cxr::DetectionRecord det = cxr::bbox_from_mask_fallback(mask, config.margin_frac, view);
    rect = cxr::detection_crop_rect(det, 0.0, img.width, img.height, 0.0);
  }
  cxr::save_image(cxr::crop(img, rect), out_image);
  if (!out_mask.empty()) cxr::save_mask(cxr::crop(mask, rect), out_mask);
  std::cout << json{{"crop_offset", {rect.x_min, rect.y_min}},
                    {"crop_size", {rect.width(), rect.height()}}}
                   .dump()
            << "\n";
  return kExitOk;
}

// ---- orient ----

int cmd_orient(const std::string& image_path, const std::string& mask_path,
               const std::string& out_image, const std::string& out_mask,
               const cxr::PipelineConfig& config) {
  const cxr::GrayImage img = cxr::load_image(image_path);
  const cxr::BinaryMask mask = cxr::load_mask(mask_path);
  auto [oriented_img, oriented_mask, outcome] =
      cxr::correct_orientation(img, mask, config.spine_side_override, config.spine);
  cxr::save_image(oriented_img, out_image);
  if (!out_mask.empty()) cxr::save_mask(oriented_mask, out_mask);
  std::cout << json{{"flipped", outcome.flipped},
                    {"detected_side", cxr::to_string(outcome.detected.side)},
                    {"score", outcome.detected.score},
                    {"source",
                     outcome.source == cxr::OrientationSource::Override ? "Override" : "Heuristic"}}
                   .dump()
            << "\n";
  return kExitOk;
}

// ---- regions ----

int cmd_regions(const std::string& mask_path, const std::string& image_path,
                const std::string& view_name, const std::string& case_id, bool verticalize,
                const cxr::PipelineConfig& config) {
  if (config.out_dir.empty())
    cxr::fail(cxr::ErrorCode::InvalidParams, "regions requires --out-dir");
  fs::create_directories(config.out_dir);
  const cxr::ViewKind view = view_name == "LAT" ? cxr::ViewKind::LAT : cxr::ViewKind::AP;

  cxr::BinaryMask mask = cxr::load_mask(mask_path);
  std::optional<cxr::GrayImage> image;
  if (!image_path.empty()) image = cxr::load_image(image_path);

  cxr::RegionSet rs;
  if (view == cxr::ViewKind::AP) {
    if (verticalize) {
      cxr::GrayImage img = image ? *image : cxr::GrayImage(mask.width, mask.height, 8);
      const cxr::VerticalizeResult v = cxr::verticalize_ap(img, mask, config.min_rotation_deg);
      mask = v.mask;
      if (image) image = v.image;
      rs = cxr::ap_regions(mask);
      rs.transform.rotation_deg = v.applied_deg;
      rs.transform.rotation_center = v.center;
    } else {
      rs = cxr::ap_regions(mask);
    }
  } else {
    rs = cxr::lat_regions(mask, config.tmpl);
  }

  const fs::path out(config.out_dir);
  const std::string stem = case_id.empty() ? fs::path(mask_path).stem().string() : case_id;
  std::ofstream(out / (std::string(cxr::to_string(view)) + "_regions.json"))
      << cxr::region_set_to_json(rs, stem).dump(2) << "\n";

  if (image) {
    for (const auto& [name, sub] : cxr::extract_region_images(*image, rs))
      cxr::save_image(sub, (out / (stem + "_" + cxr::to_string(view) + "_" +
                                   cxr::to_string(name) + ".png"))
                               .string());
    cxr::save_rgb(cxr::render_overlay(*image, rs),
                  (out / (std::string(cxr::to_string(view)) + "_overlay.png")).string());
  }
  return kExitOk;
}

// ---- evaluate ----

std::vector<std::pair<std::string, std::string>> pair_inputs(const std::string& pred,
                                                             const std::string& ref) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (fs::is_directory(pred) && fs::is_directory(ref)) {
    std::map<std::string, fs::path> ref_files;
    for (const auto& entry : fs::directory_iterator(ref))
      if (entry.is_regular_file()) ref_files[entry.path().filename().string()] = entry.path();
    std::vector<fs::path> pred_files;
    for (const auto& entry : fs::directory_iterator(pred))
      if (entry.is_regular_file()) pred_files.push_back(entry.path());
    std::sort(pred_files.begin(), pred_files.end());
    for (const fs::path& p : pred_files) {
      const auto it = ref_files.find(p.filename().string());
      if (it != ref_files.end()) pairs.emplace_back(p.string(), it->second.string());
    }
    if (pairs.empty())
      cxr::fail(cxr::ErrorCode::MissingInput, "no matching file names between pred and ref");
  } else {
    pairs.emplace_back(pred, ref);
  }
  return pairs;
}

int cmd_evaluate(const std::string& pred, const std::string& ref,
                 const cxr::PipelineConfig& config) {
  const auto pairs = pair_inputs(pred, ref);

  std::vector<cxr::SegMetrics> cases;
  json case_array = json::array();
  for (const auto& [pred_path, ref_path] : pairs) {
    const cxr::BinaryMask p = cxr::load_mask(pred_path);
    const cxr::BinaryMask r = cxr::load_mask(ref_path);
    const cxr::SegMetrics m = cxr::evaluate_case(p, r, config.resize_metrics);
    cases.push_back(m);
    case_array.push_back(json{{"case_id", fs::path(pred_path).stem().string()},
                              {"dice", m.dice},
                              {"precision", m.precision},
                              {"recall", m.recall},
                              {"asd", m.asd}});
  }
  const cxr::MetricsSummary summary = cxr::summarize(cases);
  const auto stat_json = [](const cxr::MetricStat& s) {
    return json{{"mean", s.mean}, {"std", s.stddev}};
  };
  json doc{{"schema_version", 1},
           {"cases", case_array},
           {"summary",
            {{"dice", stat_json(summary.dice)},
             {"precision", stat_json(summary.precision)},
             {"recall", stat_json(summary.recall)},
             {"asd", stat_json(summary.asd)}}}};

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    std::ofstream(fs::path(config.out_dir) / "metrics.json") << doc.dump(2) << "\n";

    // CSV: percentages for the overlap metrics, pixels for ASD
    std::ofstream csv(fs::path(config.out_dir) / "metrics.csv");
    csv << "case,dice_pct,prc_pct,rcl_pct,asd_px\n";
    char line[256];
    for (std::size_t i = 0; i < cases.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s,%.2f,%.2f,%.2f,%.2f\n",
                    case_array[i]["case_id"].get<std::string>().c_str(), 100.0 * cases[i].dice,
                    100.0 * cases[i].precision, 100.0 * cases[i].recall, cases[i].asd);
      csv << line;
    }
    std::snprintf(line, sizeof(line), "mean,%.2f,%.2f,%.2f,%.2f\n", 100.0 * summary.dice.mean,
                  100.0 * summary.precision.mean, 100.0 * summary.recall.mean, summary.asd.mean);
    csv << line;
    std::snprintf(line, sizeof(line), "std,%.2f,%.2f,%.2f,%.2f\n", 100.0 * summary.dice.stddev,
                  100.0 * summary.precision.stddev, 100.0 * summary.recall.stddev,
                  summary.asd.stddev);
    csv << line;
  }
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

// ---- phantom ----

int cmd_phantom(int count, std::uint64_t seed, const cxr::PipelineConfig& config) {
  if (config.out_dir.empty())
    cxr::fail(cxr::ErrorCode::InvalidParams, "phantom requires --out-dir");
  const fs::path out(config.out_dir);
  fs::create_directories(out);

  const auto corpus = cxr::make_corpus(count, seed);
  json manifest_cases = json::array();
  for (std::size_t i = 0; i < corpus.size(); i += 2) {
    const cxr::PhantomCase& ap = corpus[i];
    const cxr::PhantomCase& lat = corpus[i + 1];
    const auto truth_json = [](const cxr::PhantomCase& c) {
      json lungs = json::array();
      for (const cxr::BBox& b : c.truth.lung_bboxes)
        lungs.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
      return json{{"case_id", c.id},
                  {"view", cxr::to_string(c.spec.view)},
                  {"rotation_deg", c.truth.rotation_deg},
                  {"spine_side", cxr::to_string(c.truth.spine_side)},
                  {"canvas", {c.spec.canvas_w, c.spec.canvas_h}},
                  {"union_bbox",
                   {c.truth.union_bbox.x_min, c.truth.union_bbox.y_min, c.truth.union_bbox.x_max,
                    c.truth.union_bbox.y_max}},
                  {"lung_bboxes", lungs}};
    };

    cxr::save_image(ap.image, (out / (ap.id + "_AP.png")).string());
    cxr::save_mask(ap.truth.mask, (out / (ap.id + "_AP_mask.png")).string());
    std::ofstream(out / (ap.id + "_AP_truth.json")) << truth_json(ap).dump(2) << "\n";
    cxr::save_image(lat.image, (out / (lat.id + "_LAT.png")).string());
    cxr::save_mask(lat.truth.mask, (out / (lat.id + "_LAT_mask.png")).string());
    std::ofstream(out / (lat.id + "_LAT_truth.json")) << truth_json(lat).dump(2) << "\n";

    manifest_cases.push_back(json{{"case_id", ap.id},
                                  {"ap_image", ap.id + "_AP.png"},
                                  {"ap_mask", ap.id + "_AP_mask.png"},
                                  {"lat_image", lat.id + "_LAT.png"},
                                  {"lat_mask", lat.id + "_LAT_mask.png"}});
  }
  std::ofstream(out / "manifest.json") << json{{"cases", manifest_cases}}.dump(2) << "\n";
  std::printf("wrote %zu phantom images under %s\n", corpus.size(), config.out_dir.c_str());
  return kExitOk;
}

// ---- run ----

int cmd_run(const std::string& manifest_path, const cxr::PipelineConfig& config) {
  if (config.out_dir.empty()) cxr::fail(cxr::ErrorCode::InvalidParams, "run requires --out-dir");
  const auto manifests = cxr::load_manifests(manifest_path);
  const auto results = cxr::run_batch(manifests, config);

  int failed = 0;
  for (const cxr::PipelineResult& r : results) {
    if (r.status == cxr::CaseStatus::Failed) {
      ++failed;
      std::printf("%-12s failed at %s: %s\n", r.case_id.c_str(), r.failed_stage.c_str(),
                  r.error.c_str());
    } else if (r.status == cxr::CaseStatus::Warning) {
      std::printf("%-12s ok (with warnings)\n", r.case_id.c_str());
      for (const std::string& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
    } else {
      std::printf("%-12s ok\n", r.case_id.c_str());
    }
  }
  std::printf("%zu case(s), %d failed; results in %s\n", results.size(), failed,
              config.out_dir.c_str());
  return failed == 0 ? kExitOk : kExitCaseFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pediatric chest X-ray region extraction toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;

  // enhance
  auto* enhance_cmd = app.add_subcommand("enhance", "contrast enhancement / normalization");
  std::string enh_in, enh_out, enh_op = "clahe";
  enhance_cmd->add_option("--in", enh_in, "input image")->required();
  enhance_cmd->add_option("--out", enh_out, "output file")->required();
  enhance_cmd->add_option("--op", enh_op, "clahe or znorm")
      ->check(CLI::IsMember({"clahe", "znorm"}));
  add_common_flags(enhance_cmd, flags);

  // crop
  auto* crop_cmd = app.add_subcommand("crop", "crop to the lung detection or mask bbox");
  std::string crop_image, crop_mask, crop_detection, crop_view = "AP";
  std::string crop_out_image, crop_out_mask;
  crop_cmd->add_option("--image", crop_image, "input image")->required();
  crop_cmd->add_option("--mask", crop_mask, "input mask")->required();
  crop_cmd->add_option("--detection", crop_detection, "detection JSON (optional)");
  crop_cmd->add_option("--view", crop_view, "AP or LAT")->check(CLI::IsMember({"AP", "LAT"}));
  crop_cmd->add_option("--out-image", crop_out_image, "cropped image path")->required();
  crop_cmd->add_option("--out-mask", crop_out_mask, "cropped mask path");
  add_common_flags(crop_cmd, flags);

  // orient
  auto* orient_cmd = app.add_subcommand("orient", "LAT spine-side correction");
  std::string orient_image, orient_mask, orient_out_image, orient_out_mask;
  orient_cmd->add_option("--image", orient_image, "input image")->required();
  orient_cmd->add_option("--mask", orient_mask, "input mask")->required();
  orient_cmd->add_option("--out-image", orient_out_image, "oriented image path")->required();
  orient_cmd->add_option("--out-mask", orient_out_mask, "oriented mask path");
  add_common_flags(orient_cmd, flags);

  // regions
  auto* regions_cmd = app.add_subcommand("regions", "extract the 12 template regions");
  std::string regions_mask, regions_image, regions_view = "AP", regions_case;
  bool regions_verticalize = false;
  regions_cmd->add_option("--mask", regions_mask, "input mask")->required();
  regions_cmd->add_option("--image", regions_image, "image for crops/overlay (optional)");
  regions_cmd->add_option("--view", regions_view, "AP or LAT")
      ->check(CLI::IsMember({"AP", "LAT"}));
  regions_cmd->add_option("--case-id", regions_case, "case id for output naming");
  regions_cmd->add_flag("--verticalize", regions_verticalize, "verticalize AP input first");
  add_common_flags(regions_cmd, flags);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "segmentation metrics for mask pairs");
  std::string eval_pred, eval_ref;
  eval_cmd->add_option("--pred", eval_pred, "prediction mask file or directory")->required();
  eval_cmd->add_option("--ref", eval_ref, "reference mask file or directory")->required();
  add_common_flags(eval_cmd, flags);

  // phantom
  auto* phantom_cmd = app.add_subcommand("phantom", "generate a synthetic test corpus");
  int phantom_count = 30;
  std::uint64_t phantom_seed = 1;
  phantom_cmd->add_option("--count", phantom_count, "cases (each has AP + LAT)")
      ->check(CLI::PositiveNumber);
  phantom_cmd->add_option("--seed", phantom_seed, "corpus seed");
  add_common_flags(phantom_cmd, flags);

  // run
  auto* run_cmd = app.add_subcommand("run", "run the full pipeline over a manifest");
  std::string run_manifest;
  run_cmd->add_option("--manifest", run_manifest, "case manifest JSON")->required();
  add_common_flags(run_cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const CLI::App* active = app.get_subcommands().front();
    const cxr::PipelineConfig config = make_config(active, flags);
    if (enhance_cmd->parsed()) return cmd_enhance(enh_in, enh_out, enh_op, config);
    if (crop_cmd->parsed())
      return cmd_crop(crop_image, crop_mask, crop_detection, crop_view, crop_out_image,
                      crop_out_mask, config);
    if (orient_cmd->parsed())
      return cmd_orient(orient_image, orient_mask, orient_out_image, orient_out_mask, config);
    if (regions_cmd->parsed())
      return cmd_regions(regions_mask, regions_image, regions_view, regions_case,
                         regions_verticalize, config);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_pred, eval_ref, config);
    if (phantom_cmd->parsed()) return cmd_phantom(phantom_count, phantom_seed, config);
    if (run_cmd->parsed()) return cmd_run(run_manifest, config);
  } catch (const cxr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const auto code = e.code();
    if (code == cxr::ErrorCode::InvalidParams || code == cxr::ErrorCode::CorruptData ||
        code == cxr::ErrorCode::FileNotFound)
      return kExitUsage;
    return kExitCaseFailed;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCaseFailed;
  }
  return kExitUsage;
}
