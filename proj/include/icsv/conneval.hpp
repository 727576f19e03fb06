#pragma once

#include <utility>
#include <vector>

#include "icsv/raster.hpp"
#include "icsv/regions.hpp"
#include "icsv/report.hpp"
#include "icsv/synthgen.hpp"

namespace icsv {

struct PatchLabel {
  std::pair<int, int> origin;
  bool error = false;
  std::vector<ErrorEntry> evidence;  // Open/Short entries intersecting the patch
};

struct ViaMatchResult {
  std::vector<std::pair<std::int32_t, std::int32_t>> matched;  // (ev_label, gv_label)
  std::vector<std::int32_t> extra;                             // unmatched EV labels
  std::vector<std::int32_t> miss;                              // unmatched GV labels
  std::int32_t ev_total = 0;
  std::int32_t gv_total = 0;
};

struct PRScore {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double recall = 1.0;
  double precision = 1.0;
  bool recall_defined = false;
  bool precision_defined = false;

  void finalize() {
    recall_defined = tp + fn > 0;
    precision_defined = tp + fp > 0;
    recall = recall_defined ? static_cast<double>(tp) / (tp + fn) : 1.0;
    precision = precision_defined ? static_cast<double>(tp) / (tp + fp) : 1.0;
  }
};

enum class ScoreMode { WirePatch, ViaRegion };

/// Connectivity differences between ground truth GW and candidate EW inside a
/// window. Opens are gaps that split a ground-truth net (or a vanished net);
/// shorts are bridges that join two nets (or a phantom net). Bboxes are in
/// full-image coordinates.
std::vector<ErrorEntry> wire_diff_evidence(const BinaryMask& gw, const BinaryMask& ew,
                                           const Box& window);

/// Per-patch correct/error labels. Evidence is gathered on the patch expanded
/// by margin; a patch is an error iff some evidence bbox intersects the
/// unexpanded patch rectangle.
std::vector<PatchLabel> esd_label_patches(const BinaryMask& gw, const BinaryMask& ew,
                                          const PatchGrid& grid, int margin = 64);

/// Overlap matching of via regions; any overlap of >= 1 px counts.
ViaMatchResult via_match(const BinaryMask& ev, const BinaryMask& gv,
                         Connectivity conn = Connectivity::Eight);

/// Wire-patch mode scores patch verdicts against truth-derived patch labels;
/// via-region mode matches detection bboxes against logged error bboxes by kind.
PRScore score_detections(const ErrorReport& predicted, const ErrorLog& truth, ScoreMode mode,
                         const PatchGrid& grid);

}  // namespace icsv
