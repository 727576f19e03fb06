#pragma once

#include <string>
#include <vector>

#include "icsv/raster.hpp"
#include "icsv/synthgen.hpp"

namespace icsv {

/// Raw classifier output for one patch; positive detection when p > n.
struct PatchVerdict {
  int x = 0;
  int y = 0;
  float p = 0.0f;
  float n = 0.0f;

  bool positive() const { return p > n; }
  bool operator==(const PatchVerdict&) const = default;
};

struct Detection {
  ErrorKind kind;
  Box bbox;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

/// Typed detections for one image, covering both branches.
struct ErrorReport {
  std::string image_id;
  std::vector<PatchVerdict> patch_verdicts;  // wire branch, sliding window
  std::vector<Box> error_boxes;              // wire branch, vote localization
  std::vector<Detection> detections;         // typed entries (all kinds)
  double v = 0.0, w = 0.0, b = 0.0;          // via branch intensity triple
  bool low_contrast = false;

  bool operator==(const ErrorReport&) const = default;
};

}  // namespace icsv
