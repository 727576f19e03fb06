#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "icsv/raster.hpp"

namespace icsv {

enum class Connectivity { Four = 4, Eight = 8 };

/// Per-pixel component labels; 0 is background, foreground labels are 1..K
/// with no gaps, numbered in row-major first-encounter order.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  std::int32_t count = 0;  // K

  std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

struct Region {
  std::int32_t label = 0;
  std::int64_t area = 0;
  Box bbox;
  double mean_intensity = 0.0;  // mean of reference over this region's nonzero pixels
};

/// Two-pass labeling with union-find (path compression + union by rank).
LabelMap label_components(const BinaryMask& mask, Connectivity conn = Connectivity::Eight);

/// One Region per label 1..K. If ref is given, mean_intensity averages ref over
/// region pixels where ref > 0 (0 when the region has no nonzero ref pixel).
std::vector<Region> region_properties(const LabelMap& lm, const GrayImage* ref = nullptr);

/// All (label_a, label_b, overlap_area) with overlap_area >= 1, ordered by (a, b).
std::vector<std::tuple<std::int32_t, std::int32_t, std::int64_t>> overlap_pairs(const LabelMap& a,
                                                                                const LabelMap& b);

}  // namespace icsv
