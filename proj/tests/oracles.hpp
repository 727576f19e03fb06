#pragma once

// Independent reference implementations used to check the library's fast paths.

#include <deque>
#include <random>
#include <vector>

#include "icsv/extfeat.hpp"
#include "icsv/raster.hpp"
#include "icsv/regions.hpp"

namespace oracle {

// BFS flood fill, one component at a time.
inline icsv::LabelMap flood_fill_components(const icsv::BinaryMask& mask, icsv::Connectivity conn) {
  icsv::LabelMap lm;
  lm.width = mask.width;
  lm.height = mask.height;
  lm.labels.assign(mask.size(), 0);
  const bool eight = conn == icsv::Connectivity::Eight;
  std::int32_t next = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y) || lm.labels[static_cast<std::size_t>(y) * mask.width + x]) continue;
      ++next;
      std::deque<std::pair<int, int>> queue{{x, y}};
      lm.labels[static_cast<std::size_t>(y) * mask.width + x] = next;
      while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!eight && dx != 0 && dy != 0) continue;
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) continue;
            auto& lab = lm.labels[static_cast<std::size_t>(ny) * mask.width + nx];
            if (!mask.at(nx, ny) || lab) continue;
            lab = next;
            queue.emplace_back(nx, ny);
          }
      }
    }
  lm.count = next;
  return lm;
}

// True when both maps induce the same partition of pixels (labels may differ).
inline bool same_partition(const icsv::LabelMap& a, const icsv::LabelMap& b) {
  if (a.width != b.width || a.height != b.height || a.count != b.count) return false;
  std::vector<std::int32_t> a_to_b(static_cast<std::size_t>(a.count) + 1, -1);
  std::vector<std::int32_t> b_to_a(static_cast<std::size_t>(b.count) + 1, -1);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const std::int32_t la = a.labels[i], lb = b.labels[i];
    if ((la == 0) != (lb == 0)) return false;
    if (la == 0) continue;
    if (a_to_b[la] == -1) a_to_b[la] = lb;
    if (b_to_a[lb] == -1) b_to_a[lb] = la;
    if (a_to_b[la] != lb || b_to_a[lb] != la) return false;
  }
  return true;
}

// Per-pixel directional scan, deliberately quadratic.
inline icsv::ExtensionMap scan_h_extension(const icsv::BinaryMask& mask) {
  icsv::ExtensionMap ext;
  ext.width = mask.width;
  ext.height = mask.height;
  ext.values.assign(mask.size(), 0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      int run = 1;
      for (int l = x - 1; l >= 0 && mask.at(l, y); --l) ++run;
      for (int r = x + 1; r < mask.width && mask.at(r, y); ++r) ++run;
      ext.values[static_cast<std::size_t>(y) * mask.width + x] = run;
    }
  return ext;
}

inline icsv::ExtensionMap scan_v_extension(const icsv::BinaryMask& mask) {
  icsv::ExtensionMap ext;
  ext.width = mask.width;
  ext.height = mask.height;
  ext.values.assign(mask.size(), 0);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      int run = 1;
      for (int u = y - 1; u >= 0 && mask.at(x, u); --u) ++run;
      for (int d = y + 1; d < mask.height && mask.at(x, d); ++d) ++run;
      ext.values[static_cast<std::size_t>(y) * mask.width + x] = run;
    }
  return ext;
}

inline icsv::BinaryMask random_mask(std::mt19937& rng, int width, int height,
                                    double p_foreground) {
  icsv::BinaryMask mask(width, height);
  std::bernoulli_distribution coin(p_foreground);
  for (auto& v : mask.data) v = coin(rng) ? 1 : 0;
  return mask;
}

}  // namespace oracle
