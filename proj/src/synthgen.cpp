#include "icsv/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "icsv/regions.hpp"
#include "icsv/rng.hpp"

namespace icsv {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Open:
      return "open";
    case ErrorKind::Short:
      return "short";
    case ErrorKind::ViaMiss:
      return "via_miss";
    case ErrorKind::ViaExtra:
      return "via_extra";
  }
  return "?";
}

ErrorKind parse_error_kind(const std::string& name) {
  if (name == "open") return ErrorKind::Open;
  if (name == "short") return ErrorKind::Short;
  if (name == "via_miss") return ErrorKind::ViaMiss;
  if (name == "via_extra") return ErrorKind::ViaExtra;
  throw Error("unknown error kind: " + name);
}

std::vector<std::pair<int, int>> affected_origins(const Box& box, const PatchGrid& grid) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [ox, oy] : grid.origins) {
    const Box patch{ox, oy, ox + grid.patch_size - 1, oy + grid.patch_size - 1};
    if (patch.intersects(box)) out.emplace_back(ox, oy);
  }
  return out;
}

namespace {

void fill_rect(BinaryMask& mask, int x0, int y0, int x1, int y1, std::uint8_t value) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, mask.width - 1);
  y1 = std::min(y1, mask.height - 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) mask.at(x, y) = value;
}

bool rect_all(const BinaryMask& mask, int x0, int y0, int x1, int y1) {
  if (x0 < 0 || y0 < 0 || x1 >= mask.width || y1 >= mask.height) return false;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (!mask.at(x, y)) return false;
  return true;
}

bool rect_any(const BinaryMask& mask, int x0, int y0, int x1, int y1) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, mask.width - 1);
  y1 = std::min(y1, mask.height - 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (mask.at(x, y)) return true;
  return false;
}

bool disjoint_from_log(const Box& box, const ErrorLog& log, int separation) {
  const Box grown{box.x0 - separation, box.y0 - separation, box.x1 + separation,
                  box.y1 + separation};
  for (const auto& e : log.entries)
    if (grown.intersects(e.bbox)) return false;
  return true;
}

bool inside_border(const Box& box, int width, int height, int border) {
  return box.x0 >= border && box.y0 >= border && box.x1 < width - border &&
         box.y1 < height - border;
}

}  // namespace

Layout gen_layout(std::uint64_t seed, int width, int height, const LayoutParams& p) {
  const int w = p.wire_width;
  if (p.pitch < 2 * w) throw Error("gen_layout: pitch must be >= 2 x wire_width");
  if (width < 4 * p.pitch || height < 4 * p.pitch)
    throw Error("gen_layout: image must span at least 4 pitches");

  Rng rng(seed);
  Layout layout;
  layout.wire_mask = BinaryMask(width, height);
  layout.via_mask = BinaryMask(width, height);
  layout.track_pitch = p.pitch;
  layout.wire_width = w;

  const int border = p.border;
  for (int yc = border + p.pitch / 2; yc + w / 2 < height - border; yc += p.pitch)
    layout.track_centers.push_back(yc);

  // horizontal segments per track
  std::vector<std::vector<std::pair<int, int>>> segments(layout.track_centers.size());
  for (std::size_t t = 0; t < layout.track_centers.size(); ++t) {
    const int yc = layout.track_centers[t];
    int x = border;
    while (x < width - border) {
      // a wide length range: short segments occur naturally everywhere (so a
      // short run is not itself an error cue) while long ones leave room for
      // an injected gap plus its flank requirement
      const int seg = static_cast<int>(rng.uniform_int(4 * w, 28 * w));
      // natural gaps stay well above the injected-open gap range [w, 3w]
      const int gap = static_cast<int>(rng.uniform_int(5 * w, 9 * w));
      const int x1 = std::min(x + seg - 1, width - border - 1);
      if (x1 - x + 1 >= 4 * w && rng.bernoulli(p.density)) {
        fill_rect(layout.wire_mask, x, yc - w / 2, x1, yc - w / 2 + w - 1, 1);
        segments[t].emplace_back(x, x1);
      }
      x = x1 + 1 + gap;
    }
  }

  // vertical stubs between adjacent tracks where both have wire; stubs are
  // drawn 3w wide so a thin w-wide bridge stays visually distinct
  const int sw = 3 * w;
  for (std::size_t t = 0; t + 1 < layout.track_centers.size(); ++t) {
    if (!rng.bernoulli(p.stub_density)) continue;
    const int y_top = layout.track_centers[t] - w / 2;
    const int y_bot = layout.track_centers[t + 1] - w / 2 + w - 1;
    for (int attempt = 0; attempt < 8; ++attempt) {
      const int x = static_cast<int>(rng.uniform_int(border, width - border - sw));
      const bool on_top = rect_all(layout.wire_mask, x, y_top, x + sw - 1, y_top + w - 1);
      const bool on_bot = rect_all(layout.wire_mask, x, y_bot - w + 1, x + sw - 1, y_bot);
      // keep vertical runs at one gap span: no stacking on a stub in the
      // adjacent gap
      const bool clear_above = y_top == 0 ||
          !rect_any(layout.wire_mask, x, y_top - 1, x + sw - 1, y_top - 1);
      const bool clear_below = y_bot + 1 >= height ||
          !rect_any(layout.wire_mask, x, y_bot + 1, x + sw - 1, y_bot + 1);
      if (on_top && on_bot && clear_above && clear_below) {
        fill_rect(layout.wire_mask, x, y_top, x + sw - 1, y_bot, 1);
        break;
      }
    }
  }

  // vias centered on track wires, spaced at least 4 x wire_width apart
  for (std::size_t t = 0; t < layout.track_centers.size(); ++t) {
    const int yc = layout.track_centers[t];
    for (const auto& [sx, sx1] : segments[t]) {
      int x = sx + w;
      while (x + w - 1 <= sx1 - w) {
        if (rng.bernoulli(p.via_density) &&
            rect_all(layout.wire_mask, x, yc - w / 2, x + w - 1, yc - w / 2 + w - 1) &&
            !rect_any(layout.via_mask, x - 2 * w, yc - w / 2 - 2 * w, x + 3 * w, yc + w / 2 + 2 * w)) {
          fill_rect(layout.via_mask, x, yc - w / 2, x + w - 1, yc - w / 2 + w - 1, 1);
        }
        x += 4 * w;
      }
    }
  }

  if (layout.wire_mask.foreground_count() == 0 || layout.via_mask.foreground_count() == 0)
    throw Error("gen_layout: no objects generated (density too low?)");
  return layout;
}

GrayImage render_sem(const Layout& layout, const RenderParams& rp, std::uint64_t seed) {
  if (!(rp.via_level > rp.wire_level && rp.wire_level > rp.bg_level))
    throw Error("render_sem: require via_level > wire_level > bg_level");

  const int width = layout.wire_mask.width;
  const int height = layout.wire_mask.height;
  std::vector<double> buf(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double v = rp.bg_level;
      if (layout.via_mask.at(x, y))
        v = rp.via_level;
      else if (layout.wire_mask.at(x, y))
        v = rp.wire_level;
      buf[static_cast<std::size_t>(y) * width + x] = v;
    }

  if (rp.noise_sigma > 0.0) {
    Rng rng(seed);
    for (auto& v : buf) v += rng.gaussian(0.0, rp.noise_sigma);
  }

  if (rp.blur_radius > 0) {
    // separable box blur, borders truncated
    const int r = rp.blur_radius;
    std::vector<double> tmp(buf.size());
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double sum = 0;
        int n = 0;
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= width) continue;
          sum += buf[static_cast<std::size_t>(y) * width + xx];
          ++n;
        }
        tmp[static_cast<std::size_t>(y) * width + x] = sum / n;
      }
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double sum = 0;
        int n = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = y + dy;
          if (yy < 0 || yy >= height) continue;
          sum += tmp[static_cast<std::size_t>(yy) * width + x];
          ++n;
        }
        buf[static_cast<std::size_t>(y) * width + x] = sum / n;
      }
  }

  if (rp.illumination_tilt != 0.0 && width > 1) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        buf[static_cast<std::size_t>(y) * width + x] +=
            rp.illumination_tilt * (static_cast<double>(x) / (width - 1) - 0.5);
  }

  GrayImage img(width, height);
  for (std::size_t i = 0; i < buf.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(std::clamp(std::floor(buf[i] + 0.5), 0.0, 255.0));
  return img;
}

std::pair<BinaryMask, ErrorLog> inject_wire_errors(const Layout& layout, int n_open, int n_short,
                                                   std::uint64_t seed, int border) {
  Rng rng(seed);
  BinaryMask mask = layout.wire_mask;
  ErrorLog log;
  const int w = layout.wire_width;
  const int width = mask.width;
  const int height = mask.height;

  auto components = [](const BinaryMask& m) { return label_components(m).count; };
  int current = components(mask);

  // keep open gaps horizontally clear of sliding-window boundaries (multiples
  // of 64, the finest stride in use) so every window an open touches sees the
  // whole gap width plus flanks; same rationale as the image-border margin:
  // unambiguous patch labels. No vertical constraint: any visible row of the
  // track shows the full wire-gap-wire pattern.
  auto clear_of_grid = [](int a, int b) {
    const int step = 64, m = 16;
    const int lo = a - m, hi = b + m;
    return lo > 0 && lo / step == hi / step && lo % step != 0;
  };

  int placed_open = 0;
  for (int attempt = 0; attempt < 2000 && placed_open < n_open; ++attempt) {
    if (layout.track_centers.empty()) break;
    const int yc = layout.track_centers[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(layout.track_centers.size()) - 1))];
    const int gap = static_cast<int>(rng.uniform_int(w, 3 * w));
    const int gx = static_cast<int>(rng.uniform_int(border, width - border - gap));
    const Box box{gx, yc - w / 2, gx + gap - 1, yc - w / 2 + w - 1};
    if (!clear_of_grid(box.x0, box.x1)) continue;
    // gap must be strictly interior with generous flanks: each remnant keeps
    // at least the minimum natural segment length, so a stump alone is not a
    // telltale for an open outside the patch under inspection
    if (!rect_all(mask, box.x0 - 4 * w, box.y0, box.x1 + 4 * w, box.y1)) continue;
    if (rect_any(layout.via_mask, box.x0 - w, box.y0, box.x1 + w, box.y1)) continue;
    if (!inside_border(box, width, height, border) || !disjoint_from_log(box, log, 2 * w)) continue;

    BinaryMask trial = mask;
    fill_rect(trial, box.x0, box.y0, box.x1, box.y1, 0);
    if (components(trial) != current + 1) continue;  // a stub bridged around the gap
    mask = std::move(trial);
    ++current;
    log.entries.push_back({ErrorKind::Open, box});
    ++placed_open;
  }
  if (placed_open < n_open)
    throw Error("inject_wire_errors: placed only " + std::to_string(placed_open) + " of " +
                std::to_string(n_open) + " opens");

  int placed_short = 0;
  for (int attempt = 0; attempt < 400 && placed_short < n_short; ++attempt) {
    if (layout.track_centers.size() < 2) break;
    const std::size_t t = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(layout.track_centers.size()) - 2));
    const int y_top = layout.track_centers[t] - w / 2;
    const int y_bot = layout.track_centers[t + 1] - w / 2 + w - 1;
    const int x = static_cast<int>(rng.uniform_int(border, width - border - w));
    if (!rect_all(mask, x, y_top, x + w - 1, y_top + w - 1)) continue;
    if (!rect_all(mask, x, y_bot - w + 1, x + w - 1, y_bot)) continue;
    // don't stack on a stub in the adjacent gap: the merged vertical run would
    // exceed one gap span and skew the v-extension scale
    if (y_top > 0 && rect_any(mask, x, y_top - 1, x + w - 1, y_top - 1)) continue;
    if (y_bot + 1 < height && rect_any(mask, x, y_bot + 1, x + w - 1, y_bot + 1)) continue;
    const Box box{x, y_top + w, x + w - 1, y_bot - w};  // bridge between the two tracks
    if (box.empty() || rect_any(mask, box.x0, box.y0, box.x1, box.y1)) continue;
    if (!inside_border(box, width, height, border) || !disjoint_from_log(box, log, 2 * w)) continue;

    BinaryMask trial = mask;
    fill_rect(trial, box.x0, box.y0, box.x1, box.y1, 1);
    if (components(trial) != current - 1) continue;  // tracks already connected elsewhere
    mask = std::move(trial);
    --current;
    log.entries.push_back({ErrorKind::Short, box});
    ++placed_short;
  }
  if (placed_short < n_short)
    throw Error("inject_wire_errors: placed only " + std::to_string(placed_short) + " of " +
                std::to_string(n_short) + " shorts");

  return {std::move(mask), std::move(log)};
}

std::pair<BinaryMask, ErrorLog> inject_via_errors(const Layout& layout, int n_miss, int n_extra,
                                                  std::uint64_t seed, int border) {
  Rng rng(seed);
  BinaryMask mask = layout.via_mask;
  ErrorLog log;
  const int w = layout.wire_width;
  const int width = mask.width;
  const int height = mask.height;

  const LabelMap lm = label_components(layout.via_mask);
  auto regions = region_properties(lm);
  if (static_cast<int>(regions.size()) < n_miss)
    throw Error("inject_via_errors: only " + std::to_string(regions.size()) + " vias, need " +
                std::to_string(n_miss));
  rng.shuffle(regions);

  int placed_miss = 0;
  for (const auto& r : regions) {
    if (placed_miss >= n_miss) break;
    if (!inside_border(r.bbox, width, height, border) || !disjoint_from_log(r.bbox, log, 2 * w))
      continue;
    for (int y = r.bbox.y0; y <= r.bbox.y1; ++y)
      for (int x = r.bbox.x0; x <= r.bbox.x1; ++x)
        if (lm.at(x, y) == r.label) mask.at(x, y) = 0;
    log.entries.push_back({ErrorKind::ViaMiss, r.bbox});
    ++placed_miss;
  }
  if (placed_miss < n_miss && n_miss == static_cast<int>(regions.size())) {
    // caller asked for every via; border constraints waived
    for (const auto& r : regions) {
      if (placed_miss >= n_miss) break;
      bool logged = false;
      for (const auto& e : log.entries) logged = logged || e.bbox == r.bbox;
      if (logged) continue;
      for (int y = r.bbox.y0; y <= r.bbox.y1; ++y)
        for (int x = r.bbox.x0; x <= r.bbox.x1; ++x)
          if (lm.at(x, y) == r.label) mask.at(x, y) = 0;
      log.entries.push_back({ErrorKind::ViaMiss, r.bbox});
      ++placed_miss;
    }
  }
  if (placed_miss < n_miss)
    throw Error("inject_via_errors: placed only " + std::to_string(placed_miss) + " of " +
                std::to_string(n_miss) + " misses");

  int placed_extra = 0;
  for (int attempt = 0; attempt < 800 && placed_extra < n_extra; ++attempt) {
    if (layout.track_centers.empty()) break;
    const int yc = layout.track_centers[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(layout.track_centers.size()) - 1))];
    const int x = static_cast<int>(rng.uniform_int(border, width - border - w));
    const Box box{x, yc - w / 2, x + w - 1, yc - w / 2 + w - 1};
    if (!rect_all(layout.wire_mask, box.x0, box.y0, box.x1, box.y1)) continue;
    // keep 2 x wire_width clearance from every existing via
    if (rect_any(mask, box.x0 - 2 * w, box.y0 - 2 * w, box.x1 + 2 * w, box.y1 + 2 * w)) continue;
    if (!inside_border(box, width, height, border) || !disjoint_from_log(box, log, 2 * w)) continue;
    fill_rect(mask, box.x0, box.y0, box.x1, box.y1, 1);
    log.entries.push_back({ErrorKind::ViaExtra, box});
    ++placed_extra;
  }
  if (placed_extra < n_extra)
    throw Error("inject_via_errors: placed only " + std::to_string(placed_extra) + " of " +
                std::to_string(n_extra) + " extras");

  return {std::move(mask), std::move(log)};
}

GrayImage degrade(const GrayImage& img, DegradeKind kind, double severity, std::uint64_t seed) {
  if (severity < 0.0 || severity > 1.0) throw Error("degrade: severity must be in [0,1]");
  if (severity == 0.0) return img;
  Rng rng(seed);
  GrayImage out = img;

  if (kind == DegradeKind::Exposure) {
    const double gamma = rng.bernoulli(0.5) ? 1.0 + severity : 1.0 - severity;
    for (auto& v : out.data) {
      const double x = v / 255.0;
      const double y = gamma == 0.0 ? 1.0 : std::pow(x, gamma);
      v = static_cast<std::uint8_t>(std::clamp(std::floor(255.0 * y + 0.5), 0.0, 255.0));
    }
    return out;
  }

  // contamination: dark elliptical blotches
  const int n_blobs = 1 + static_cast<int>(severity * 6);
  for (int b = 0; b < n_blobs; ++b) {
    const double cx = rng.uniform(0.0, img.width);
    const double cy = rng.uniform(0.0, img.height);
    const double rx = rng.uniform(img.width * 0.02, img.width * 0.08);
    const double ry = rng.uniform(img.height * 0.02, img.height * 0.08);
    const int x0 = std::max(0, static_cast<int>(cx - rx));
    const int x1 = std::min(img.width - 1, static_cast<int>(cx + rx));
    const int y0 = std::max(0, static_cast<int>(cy - ry));
    const int y1 = std::min(img.height - 1, static_cast<int>(cy + ry));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = (x - cx) / rx;
        const double dy = (y - cy) / ry;
        if (dx * dx + dy * dy <= 1.0)
          out.at(x, y) = static_cast<std::uint8_t>(
              std::clamp(std::floor(out.at(x, y) * (1.0 - severity) + 0.5), 0.0, 255.0));
      }
  }
  return out;
}

}  // namespace icsv
