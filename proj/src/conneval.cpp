#include "icsv/conneval.hpp"

#include <algorithm>
#include <set>

namespace icsv {

namespace {

BinaryMask crop(const BinaryMask& m, const Box& w) {
  BinaryMask out(w.width(), w.height());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = m.at(w.x0 + x, w.y0 + y);
  return out;
}

Box clip(const Box& b, int width, int height) {
  return Box{std::max(b.x0, 0), std::max(b.y0, 0), std::min(b.x1, width - 1),
             std::min(b.y1, height - 1)};
}

// Labels of `other` 8-adjacent to (or under) each component of `parts`.
std::vector<std::set<std::int32_t>> adjacent_labels(const LabelMap& parts, const LabelMap& other) {
  std::vector<std::set<std::int32_t>> adj(parts.count);
  for (int y = 0; y < parts.height; ++y)
    for (int x = 0; x < parts.width; ++x) {
      const std::int32_t p = parts.at(x, y);
      if (!p) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= parts.width || ny >= parts.height) continue;
          const std::int32_t o = other.at(nx, ny);
          if (o) adj[p - 1].insert(o);
        }
    }
  return adj;
}

}  // namespace

std::vector<ErrorEntry> wire_diff_evidence(const BinaryMask& gw, const BinaryMask& ew,
                                           const Box& window) {
  if (gw.width != ew.width || gw.height != ew.height)
    throw Error("wire_diff_evidence: dimensions differ");
  const Box win = clip(window, gw.width, gw.height);
  if (win.empty()) return {};

  const BinaryMask g = crop(gw, win);
  const BinaryMask e = crop(ew, win);
  const LabelMap lg = label_components(g);
  const LabelMap le = label_components(e);

  std::vector<bool> g_overlapped(lg.count, false), e_overlapped(le.count, false);
  for (std::size_t i = 0; i < lg.labels.size(); ++i)
    if (lg.labels[i] && le.labels[i]) {
      g_overlapped[lg.labels[i] - 1] = true;
      e_overlapped[le.labels[i] - 1] = true;
    }

  std::vector<ErrorEntry> evidence;
  auto emit = [&](ErrorKind kind, const Box& local) {
    evidence.push_back({kind, Box{local.x0 + win.x0, local.y0 + win.y0, local.x1 + win.x0,
                                  local.y1 + win.y0}});
  };

  // gap components: ground-truth wire absent from the candidate
  BinaryMask gaps(g.width, g.height);
  BinaryMask bridges(g.width, g.height);
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    gaps.data[i] = g.data[i] && !e.data[i];
    bridges.data[i] = e.data[i] && !g.data[i];
  }
  const LabelMap lgaps = label_components(gaps);
  const LabelMap lbridges = label_components(bridges);

  // a gap splitting a net: adjacent to >= 2 candidate components
  const auto gap_adj = adjacent_labels(lgaps, le);
  const auto gap_regions = region_properties(lgaps);
  for (const auto& r : gap_regions)
    if (gap_adj[r.label - 1].size() >= 2) emit(ErrorKind::Open, r.bbox);

  // a bridge joining nets: adjacent to >= 2 ground-truth components
  const auto bridge_adj = adjacent_labels(lbridges, lg);
  const auto bridge_regions = region_properties(lbridges);
  for (const auto& r : bridge_regions)
    if (bridge_adj[r.label - 1].size() >= 2) emit(ErrorKind::Short, r.bbox);

  // vanished nets (no candidate overlap) and phantom nets (no truth overlap)
  const auto g_regions = region_properties(lg);
  for (const auto& r : g_regions)
    if (!g_overlapped[r.label - 1]) emit(ErrorKind::Open, r.bbox);
  const auto e_regions = region_properties(le);
  for (const auto& r : e_regions)
    if (!e_overlapped[r.label - 1]) emit(ErrorKind::Short, r.bbox);

  return evidence;
}

std::vector<PatchLabel> esd_label_patches(const BinaryMask& gw, const BinaryMask& ew,
                                          const PatchGrid& grid, int margin) {
  if (margin < 0) throw Error("esd_label_patches: margin must be >= 0");
  std::vector<PatchLabel> labels;
  labels.reserve(grid.origins.size());
  for (const auto& [ox, oy] : grid.origins) {
    const Box patch{ox, oy, ox + grid.patch_size - 1, oy + grid.patch_size - 1};
    const Box window{patch.x0 - margin, patch.y0 - margin, patch.x1 + margin, patch.y1 + margin};
    PatchLabel pl;
    pl.origin = {ox, oy};
    for (const auto& ev : wire_diff_evidence(gw, ew, window))
      if (ev.bbox.intersects(patch)) pl.evidence.push_back(ev);
    pl.error = !pl.evidence.empty();
    labels.push_back(std::move(pl));
  }
  return labels;
}

ViaMatchResult via_match(const BinaryMask& ev, const BinaryMask& gv, Connectivity conn) {
  if (ev.width != gv.width || ev.height != gv.height) throw Error("via_match: dimensions differ");
  const LabelMap le = label_components(ev, conn);
  const LabelMap lg = label_components(gv, conn);

  ViaMatchResult result;
  result.ev_total = le.count;
  result.gv_total = lg.count;
  std::vector<bool> e_matched(le.count, false), g_matched(lg.count, false);
  for (const auto& [a, b, n] : overlap_pairs(le, lg)) {
    result.matched.emplace_back(a, b);
    e_matched[a - 1] = true;
    g_matched[b - 1] = true;
  }
  for (std::int32_t k = 1; k <= le.count; ++k)
    if (!e_matched[k - 1]) result.extra.push_back(k);
  for (std::int32_t k = 1; k <= lg.count; ++k)
    if (!g_matched[k - 1]) result.miss.push_back(k);
  return result;
}

PRScore score_detections(const ErrorReport& predicted, const ErrorLog& truth, ScoreMode mode,
                         const PatchGrid& grid) {
  PRScore score;
  if (mode == ScoreMode::WirePatch) {
    for (const auto& v : predicted.patch_verdicts) {
      const Box patch{v.x, v.y, v.x + grid.patch_size - 1, v.y + grid.patch_size - 1};
      bool truth_error = false;
      for (const auto& e : truth.entries)
        if ((e.kind == ErrorKind::Open || e.kind == ErrorKind::Short) && e.bbox.intersects(patch))
          truth_error = true;
      const bool pred_error = v.positive();
      if (truth_error && pred_error)
        ++score.tp;
      else if (!truth_error && pred_error)
        ++score.fp;
      else if (truth_error && !pred_error)
        ++score.fn;
    }
  } else {
    std::vector<bool> truth_hit(truth.entries.size(), false);
    for (const auto& d : predicted.detections) {
      if (d.kind != ErrorKind::ViaExtra && d.kind != ErrorKind::ViaMiss) continue;
      bool hit = false;
      for (std::size_t i = 0; i < truth.entries.size(); ++i)
        if (truth.entries[i].kind == d.kind && truth.entries[i].bbox.intersects(d.bbox)) {
          truth_hit[i] = true;
          hit = true;
        }
      if (!hit) ++score.fp;
    }
    for (std::size_t i = 0; i < truth.entries.size(); ++i) {
      const auto kind = truth.entries[i].kind;
      if (kind != ErrorKind::ViaExtra && kind != ErrorKind::ViaMiss) continue;
      if (truth_hit[i])
        ++score.tp;
      else
        ++score.fn;
    }
  }
  score.finalize();
  return score;
}

}  // namespace icsv
