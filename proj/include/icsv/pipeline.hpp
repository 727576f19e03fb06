#pragma once

#include <string>
#include <vector>

#include "icsv/config.hpp"
#include "icsv/conneval.hpp"
#include "icsv/manifest.hpp"
#include "icsv/neural.hpp"
#include "icsv/report.hpp"

namespace icsv {

/// Generates n_images synthetic images with ground truth, corrupted masks and
/// error logs under out_dir, and writes out_dir/manifest.json.
DatasetManifest run_synth(const RunConfig& cfg, const std::string& out_dir);

/// Writes normalized V/H feature images next to out_prefix.
void run_features(const std::string& mask_path, const std::string& out_prefix);

struct TrainOutput {
  std::string checkpoint_path;
  std::vector<double> loss_curve;
  std::int64_t positives = 0;  // wire branch only
  std::int64_t negatives = 0;
};

/// image_ids empty = all images.
TrainOutput run_train_wire(const DatasetManifest& manifest, const RunConfig& cfg,
                           const std::vector<std::string>& image_ids,
                           const std::string& checkpoint_path);

TrainOutput run_train_via(const DatasetManifest& manifest, const RunConfig& cfg,
                          const std::vector<std::string>& image_ids,
                          const std::string& checkpoint_path);

ErrorReport detect_wire_image(const DatasetManifest& manifest, const ManifestImage& image,
                              Model& model, const RunConfig& cfg);

ErrorReport detect_via_image(const DatasetManifest& manifest, const ManifestImage& image,
                             Model& model, const RunConfig& cfg);

struct DetectOptions {
  std::string wire_checkpoint;  // empty = skip wire branch
  std::string via_checkpoint;   // empty = skip via branch
  std::vector<std::string> image_ids;
  std::string out_dir;
  bool overlays = true;
  bool dump_intermediates = false;  // rSEM / D1 / D2 PNGs
};

/// Writes out_dir/<id>.json per image (merged wire+via report) and overlays.
std::vector<ErrorReport> run_detect(const DatasetManifest& manifest, const RunConfig& cfg,
                                    const DetectOptions& opts);

struct EvalRow {
  std::string image;  // image id or "ALL"
  std::string mode;   // "wire-patch" or "via-region"
  PRScore score;
};

/// Scores report JSONs in reports_dir against the manifest's error logs and
/// writes out_prefix + ".json" / ".csv".
std::vector<EvalRow> run_eval(const DatasetManifest& manifest, const RunConfig& cfg,
                              const std::string& reports_dir,
                              const std::vector<std::string>& image_ids,
                              const std::string& out_prefix);

}  // namespace icsv
