#include "icsv/regions.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace icsv {

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;
  std::vector<std::int8_t> rank_;

  std::int32_t make() {
    parent.push_back(static_cast<std::int32_t>(parent.size()));
    rank_.push_back(0);
    return parent.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }
};

}  // namespace

LabelMap label_components(const BinaryMask& mask, Connectivity conn) {
  LabelMap lm;
  lm.width = mask.width;
  lm.height = mask.height;
  lm.labels.assign(mask.data.size(), 0);

  UnionFind uf;
  uf.make();  // slot 0 reserved for background
  std::vector<std::int32_t> prov(mask.data.size(), 0);

  const bool diag = conn == Connectivity::Eight;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * mask.width + x;
      if (!mask.data[i]) continue;

      std::int32_t neighbor = 0;
      auto consider = [&](int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= mask.width) return;
        const std::int32_t p = prov[static_cast<std::size_t>(ny) * mask.width + nx];
        if (!p) return;
        if (!neighbor)
          neighbor = p;
        else
          uf.unite(neighbor, p);
      };
      consider(x - 1, y);
      consider(x, y - 1);
      if (diag) {
        consider(x - 1, y - 1);
        consider(x + 1, y - 1);
      }
      prov[i] = neighbor ? neighbor : uf.make();
    }
  }

  // compact roots to 1..K in first-encounter order
  std::vector<std::int32_t> compact(uf.parent.size(), 0);
  std::int32_t next = 0;
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (!prov[i]) continue;
    const std::int32_t root = uf.find(prov[i]);
    if (!compact[root]) compact[root] = ++next;
    lm.labels[i] = compact[root];
  }
  lm.count = next;
  return lm;
}

std::vector<Region> region_properties(const LabelMap& lm, const GrayImage* ref) {
  if (ref && (ref->width != lm.width || ref->height != lm.height))
    throw Error("region_properties: reference dimensions differ");

  std::vector<Region> regions(lm.count);
  for (std::int32_t k = 0; k < lm.count; ++k) regions[k].label = k + 1;
  std::vector<std::int64_t> nz_count(lm.count, 0);
  std::vector<double> nz_sum(lm.count, 0.0);

  for (int y = 0; y < lm.height; ++y) {
    for (int x = 0; x < lm.width; ++x) {
      const std::int32_t lab = lm.at(x, y);
      if (!lab) continue;
      Region& r = regions[lab - 1];
      ++r.area;
      r.bbox.expand_to(x, y);
      if (ref) {
        const std::uint8_t v = ref->at(x, y);
        if (v > 0) {
          ++nz_count[lab - 1];
          nz_sum[lab - 1] += v;
        }
      }
    }
  }
  if (ref)
    for (std::int32_t k = 0; k < lm.count; ++k)
      regions[k].mean_intensity = nz_count[k] ? nz_sum[k] / nz_count[k] : 0.0;
  return regions;
}

std::vector<std::tuple<std::int32_t, std::int32_t, std::int64_t>> overlap_pairs(const LabelMap& a,
                                                                                const LabelMap& b) {
  if (a.width != b.width || a.height != b.height) throw Error("overlap_pairs: dimensions differ");
  std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> counts;
  for (std::size_t i = 0; i < a.labels.size(); ++i)
    if (a.labels[i] && b.labels[i]) ++counts[{a.labels[i], b.labels[i]}];

  std::vector<std::tuple<std::int32_t, std::int32_t, std::int64_t>> out;
  out.reserve(counts.size());
  for (const auto& [key, n] : counts) out.emplace_back(key.first, key.second, n);
  return out;
}

}  // namespace icsv
