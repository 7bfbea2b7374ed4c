#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cxr/enhance.hpp"
#include "cxr/error.hpp"
#include "cxr/image.hpp"
#include "cxr/image_io.hpp"
#include "cxr/maskops.hpp"
#include "cxr/metrics.hpp"
#include "cxr/orientation.hpp"
#include "cxr/regions.hpp"

namespace cxr {

/// One batch entry: where to find the per-view inputs for a case.
struct CaseManifest {
  std::string case_id;
  std::string ap_image, lat_image;
  std::string ap_mask, lat_mask;
  std::string ap_detection, lat_detection;  // optional detector JSON
  std::optional<Side> spine_side_override;
};

struct PipelineConfig {
  ClaheParams clahe;
  double epsilon = 1e-10;            // z-normalization guard
  double confidence_threshold = 0.7; // detection ingest filter
  double margin_frac = 0.1;          // crop margin per side
  double min_rotation_deg = 0.5;     // skip rotation at or below this tilt
  SpineParams spine;
  TemplateParams tmpl;
  std::optional<Side> spine_side_override;  // global --spine-side left/right
  std::optional<std::pair<int, int>> resize_metrics = {{256, 256}};
  std::string out_dir;               // empty: compute only, write nothing
  int jobs = 1;
};

enum class CaseStatus { Ok, Warning, Failed };

inline const char* to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::Ok: return "ok";
    case CaseStatus::Warning: return "warning";
    case CaseStatus::Failed: return "failed";
  }
  return "?";
}

struct PipelineResult {
  std::string case_id;
  CaseStatus status = CaseStatus::Failed;
  std::string failed_stage;
  std::string error;
  std::vector<std::string> warnings;
  std::optional<RegionSet> ap;
  std::optional<RegionSet> lat;
  std::optional<OrientationOutcome> lat_orientation;
  double align_scale = 0.0;
  std::vector<std::string> outputs;  // paths relative to the output directory
};

namespace detail {

using nlohmann::json;

inline json bbox_to_json(const BBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

inline BBox bbox_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) fail(ErrorCode::CorruptData, "bbox must be [x0,y0,x1,y1]");
  BBox b{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
  if (!b.valid()) fail(ErrorCode::CorruptData, "bbox coordinates out of order");
  return b;
}

inline json transform_to_json(const Transform& t) {
  return json{{"crop_offset", {t.crop_offset[0], t.crop_offset[1]}},
              {"rotation_deg", t.rotation_deg},
              {"rotation_center", {t.rotation_center.x, t.rotation_center.y}},
              {"flipped", t.flipped},
              {"align_scale", t.align_scale},
              {"frame_size", {t.frame_w, t.frame_h}}};
}

}  // namespace detail

/// Region JSON document for one processed view.
inline nlohmann::json region_set_to_json(const RegionSet& rs, const std::string& case_id) {
  nlohmann::json regions = nlohmann::json::object();
  for (const auto& [name, box] : rs.regions) regions[to_string(name)] = detail::bbox_to_json(box);
  return nlohmann::json{{"schema_version", 1},
                        {"case_id", case_id},
                        {"view", to_string(rs.view)},
                        {"transform", detail::transform_to_json(rs.transform)},
                        {"regions", regions}};
}

/// Parse a detection JSON file: {"view":"AP"|"LAT","bbox":[x0,y0,x1,y1],
/// "confidence":0..1}.
inline DetectionRecord load_detection(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::FileNotFound, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptData, "bad detection JSON " + path + ": " + e.what());
  }
  DetectionRecord det;
  try {
    const std::string view = j.at("view").get<std::string>();
    if (view == "AP")
      det.view = ViewKind::AP;
    else if (view == "LAT")
      det.view = ViewKind::LAT;
    else
      fail(ErrorCode::CorruptData, "detection view must be AP or LAT: " + path);
    det.bbox = detail::bbox_from_json(j.at("bbox"));
    det.confidence = j.at("confidence").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptData, "bad detection JSON " + path + ": " + e.what());
  }
  if (det.confidence < 0.0 || det.confidence > 1.0)
    fail(ErrorCode::CorruptData, "detection confidence outside [0,1]: " + path);
  return det;
}

inline void save_detection(const DetectionRecord& det, const std::string& path) {
  nlohmann::json j{{"view", to_string(det.view)},
                   {"bbox", detail::bbox_to_json(det.bbox)},
                   {"confidence", det.confidence}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << j.dump(2) << "\n";
}

namespace detail {

struct StageGuard {
  std::string stage;
};

struct ViewInputs {
  GrayImage image;
  BinaryMask mask;
  std::optional<DetectionRecord> detection;
};

inline ViewInputs load_view(const std::string& image_path, const std::string& mask_path,
                            const std::string& detection_path, ViewKind expected) {
  if (image_path.empty() || mask_path.empty())
    fail(ErrorCode::MissingInput, std::string(to_string(expected)) + " image/mask path missing");
  ViewInputs v;
  v.image = load_image(image_path);
  v.mask = load_mask(mask_path);
  if (v.image.width != v.mask.width || v.image.height != v.mask.height)
    fail(ErrorCode::DimensionMismatch, "image and mask dimensions differ for " + image_path);
  if (!detection_path.empty()) {
    v.detection = load_detection(detection_path);
    if (v.detection->view != expected)
      fail(ErrorCode::InvalidParams, "detection view does not match " +
                                         std::string(to_string(expected)) + ": " + detection_path);
  }
  return v;
}

// Crop stage: prefer the detector box; fall back to the mask bbox; pass
// through untouched when the mask is empty (later stages report EmptyMask).
struct CropOutcome {
  GrayImage image;
  BinaryMask mask;
  std::array<int, 2> offset{0, 0};
  bool skipped = false;
};

inline CropOutcome crop_stage(const ViewInputs& v, ViewKind view, const PipelineConfig& cfg) {
  CropOutcome out;
  BBox rect;
  if (v.detection.has_value()) {
    rect = detection_crop_rect(*v.detection, cfg.margin_frac, v.image.width, v.image.height,
                               cfg.confidence_threshold);
  } else if (!v.mask.empty()) {
    const DetectionRecord det = bbox_from_mask_fallback(v.mask, cfg.margin_frac, view);
    rect = detection_crop_rect(det, 0.0, v.image.width, v.image.height, 0.0);
  } else {
    out.image = v.image;
    out.mask = v.mask;
    out.skipped = true;
    return out;
  }
  out.image = crop(v.image, rect);
  out.mask = crop(v.mask, rect);
  out.offset = {rect.x_min, rect.y_min};
  return out;
}

inline std::string region_file_name(const std::string& case_id, ViewKind view, RegionName name) {
  return case_id + "_" + to_string(view) + "_" + to_string(name) + ".png";
}

}  // namespace detail

/// Run the full per-case pipeline: CLAHE, crop, AP verticalize / LAT orient,
/// region extraction, cross-view alignment, and (when configured) file
/// outputs under out_dir/<case_id>/. Stage failures are reported in the
/// result, never thrown.
inline PipelineResult run_pipeline(const CaseManifest& manifest, const PipelineConfig& config) {
  namespace fs = std::filesystem;
  PipelineResult result;
  result.case_id = manifest.case_id;
  detail::StageGuard guard{"load"};
  try {
    detail::ViewInputs ap_in = detail::load_view(manifest.ap_image, manifest.ap_mask,
                                                 manifest.ap_detection, ViewKind::AP);
    detail::ViewInputs lat_in = detail::load_view(manifest.lat_image, manifest.lat_mask,
                                                  manifest.lat_detection, ViewKind::LAT);

    guard.stage = "enhance";
    ap_in.image = clahe(ap_in.image, config.clahe);
    lat_in.image = clahe(lat_in.image, config.clahe);

    guard.stage = "crop";
    detail::CropOutcome ap_crop = detail::crop_stage(ap_in, ViewKind::AP, config);
    detail::CropOutcome lat_crop = detail::crop_stage(lat_in, ViewKind::LAT, config);
    if (ap_crop.skipped) result.warnings.push_back("AP crop skipped: empty mask");
    if (lat_crop.skipped) result.warnings.push_back("LAT crop skipped: empty mask");

    guard.stage = "verticalize";
    VerticalizeResult ap_vert =
        verticalize_ap(ap_crop.image, ap_crop.mask, config.min_rotation_deg);

    guard.stage = "orient";
    std::optional<Side> override_side = manifest.spine_side_override.has_value()
                                            ? manifest.spine_side_override
                                            : config.spine_side_override;
    auto [lat_img, lat_mask, orient_outcome] =
        correct_orientation(lat_crop.image, lat_crop.mask, override_side, config.spine);

    guard.stage = "regions";
    RegionSet ap_set = ap_regions(ap_vert.mask);
    ap_set.transform.crop_offset = ap_crop.offset;
    ap_set.transform.rotation_deg = ap_vert.applied_deg;
    ap_set.transform.rotation_center = ap_vert.center;
    RegionSet lat_set = lat_regions(lat_mask, config.tmpl);
    lat_set.transform.crop_offset = lat_crop.offset;
    lat_set.transform.flipped = orient_outcome.flipped;

    guard.stage = "align";
    result.align_scale = align_views(ap_set, lat_set);

    if (!config.out_dir.empty()) {
      guard.stage = "write";
      const fs::path case_dir = fs::path(config.out_dir) / manifest.case_id;
      fs::create_directories(case_dir);
      const auto emit = [&](const std::string& rel) { result.outputs.push_back(rel); };

      nlohmann::json ap_json = region_set_to_json(ap_set, manifest.case_id);
      std::ofstream(case_dir / "AP_regions.json") << ap_json.dump(2) << "\n";
      emit(manifest.case_id + "/AP_regions.json");
      nlohmann::json lat_json = region_set_to_json(lat_set, manifest.case_id);
      std::ofstream(case_dir / "LAT_regions.json") << lat_json.dump(2) << "\n";
      emit(manifest.case_id + "/LAT_regions.json");

      for (const auto& [name, crop_img] : extract_region_images(ap_vert.image, ap_set)) {
        const std::string fname = detail::region_file_name(manifest.case_id, ViewKind::AP, name);
        save_image(crop_img, (case_dir / fname).string());
        emit(manifest.case_id + "/" + fname);
      }
      for (const auto& [name, crop_img] : extract_region_images(lat_img, lat_set)) {
        const std::string fname = detail::region_file_name(manifest.case_id, ViewKind::LAT, name);
        save_image(crop_img, (case_dir / fname).string());
        emit(manifest.case_id + "/" + fname);
      }

      save_rgb(render_overlay(ap_vert.image, ap_set), (case_dir / "AP_overlay.png").string());
      emit(manifest.case_id + "/AP_overlay.png");
      save_rgb(render_overlay(lat_img, lat_set), (case_dir / "LAT_overlay.png").string());
      emit(manifest.case_id + "/LAT_overlay.png");
    }

    result.ap = std::move(ap_set);
    result.lat = std::move(lat_set);
    result.lat_orientation = orient_outcome;
    result.status = result.warnings.empty() ? CaseStatus::Ok : CaseStatus::Warning;
  } catch (const Error& e) {
    result.status = CaseStatus::Failed;
    result.failed_stage = guard.stage;
    result.error = e.what();
  } catch (const std::exception& e) {
    result.status = CaseStatus::Failed;
    result.failed_stage = guard.stage;
    result.error = e.what();
  }
  return result;
}

inline nlohmann::json pipeline_result_to_json(const PipelineResult& r) {
  nlohmann::json j{{"case_id", r.case_id}, {"status", to_string(r.status)}};
  if (r.status == CaseStatus::Failed) {
    j["failed_stage"] = r.failed_stage;
    j["error"] = r.error;
  }
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  if (r.ap.has_value()) j["ap_transform"] = detail::transform_to_json(r.ap->transform);
  if (r.lat.has_value()) j["lat_transform"] = detail::transform_to_json(r.lat->transform);
  if (r.lat_orientation.has_value()) {
    const OrientationOutcome& o = *r.lat_orientation;
    j["lat_orientation"] = {
        {"flipped", o.flipped},
        {"detected_side", to_string(o.detected.side)},
        {"score", o.detected.score},
        {"source", o.source == OrientationSource::Override ? "Override" : "Heuristic"}};
  }
  if (r.status != CaseStatus::Failed) j["align_scale"] = r.align_scale;
  if (!r.outputs.empty()) j["outputs"] = r.outputs;
  return j;
}

/// Run a batch over a bounded worker pool. Per-case failures never abort the
/// batch; results keep manifest order so reruns are byte-identical. Writes
/// out_dir/results.json when an output directory is configured.
inline std::vector<PipelineResult> run_batch(const std::vector<CaseManifest>& manifests,
                                             const PipelineConfig& config) {
  std::vector<PipelineResult> results(manifests.size());
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1 || manifests.size() <= 1) {
    for (std::size_t i = 0; i < manifests.size(); ++i)
      results[i] = run_pipeline(manifests[i], config);
  } else {
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
      for (std::size_t i = next.fetch_add(1); i < manifests.size(); i = next.fetch_add(1))
        results[i] = run_pipeline(manifests[i], config);
    };
    std::vector<std::thread> pool;
    const int width = std::min<int>(jobs, static_cast<int>(manifests.size()));
    pool.reserve(width);
    for (int t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    nlohmann::json cases = nlohmann::json::array();
    for (const PipelineResult& r : results) cases.push_back(pipeline_result_to_json(r));
    nlohmann::json doc{{"schema_version", 1}, {"cases", cases}};
    std::ofstream out(std::filesystem::path(config.out_dir) / "results.json");
    out << doc.dump(2) << "\n";
  }
  return results;
}

/// Parse a manifest file: {"cases":[{...}]} or a bare array of case objects.
inline std::vector<CaseManifest> load_manifests(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::FileNotFound, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::CorruptData, "bad manifest JSON " + path + ": " + e.what());
  }
  const nlohmann::json& arr = j.is_array() ? j : j.at("cases");
  if (!arr.is_array()) fail(ErrorCode::CorruptData, "manifest must contain a case array: " + path);

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).string();
  };

  std::vector<CaseManifest> out;
  for (const auto& c : arr) {
    CaseManifest m;
    m.case_id = c.value("case_id", "");
    if (m.case_id.empty()) fail(ErrorCode::CorruptData, "manifest case without case_id");
    m.ap_image = resolve(c.value("ap_image", ""));
    m.lat_image = resolve(c.value("lat_image", ""));
    m.ap_mask = resolve(c.value("ap_mask", ""));
    m.lat_mask = resolve(c.value("lat_mask", ""));
    m.ap_detection = resolve(c.value("ap_detection", ""));
    m.lat_detection = resolve(c.value("lat_detection", ""));
    if (c.contains("spine_side_override")) {
      const std::string s = c.at("spine_side_override").get<std::string>();
      if (s == "left")
        m.spine_side_override = Side::Left;
      else if (s == "right")
        m.spine_side_override = Side::Right;
      else
        fail(ErrorCode::CorruptData, "spine_side_override must be left or right");
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace cxr
