#include "icsv/viadetect.hpp"

#include <algorithm>
#include <cmath>

#include "icsv/parallel.hpp"

namespace icsv {

namespace {

double nearest_rank_percentile(std::vector<std::uint8_t>& values, double pct) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return values[rank - 1];
}

}  // namespace

IntensityTriple estimate_vwb(const GrayImage& osem, const BinaryMask& w_mask,
                             const BinaryMask& v_mask, double contrast_floor) {
  if (osem.width != w_mask.width || osem.height != w_mask.height || osem.width != v_mask.width ||
      osem.height != v_mask.height)
    throw Error("estimate_vwb: dimensions differ");

  std::vector<std::uint8_t> via, wire, bg;
  for (std::size_t i = 0; i < osem.data.size(); ++i) {
    if (v_mask.data[i])
      via.push_back(osem.data[i]);
    else if (w_mask.data[i])
      wire.push_back(osem.data[i]);
    else
      bg.push_back(osem.data[i]);
  }
  if (via.empty() || wire.empty() || bg.empty())
    throw Error("estimate_vwb: empty pixel class (via/wire/background)");

  IntensityTriple t;
  t.v = nearest_rank_percentile(via, 90.0);
  t.w = nearest_rank_percentile(wire, 50.0);
  t.b = nearest_rank_percentile(bg, 10.0);
  t.low_contrast = t.v - t.w < contrast_floor;
  return t;
}

GrayImage encode_wv(const BinaryMask& w_mask, const BinaryMask& v_mask, const IntensityTriple& t) {
  if (w_mask.width != v_mask.width || w_mask.height != v_mask.height)
    throw Error("encode_wv: dimensions differ");
  GrayImage out(w_mask.width, w_mask.height);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double level = v_mask.data[i] ? t.v : w_mask.data[i] ? t.w : t.b;
    out.data[i] = static_cast<std::uint8_t>(std::clamp(std::floor(level + 0.5), 0.0, 255.0));
  }
  return out;
}

std::unique_ptr<Model> train_translator_model(const TranslatorDataset& data, const TrainConfig& cfg,
                                              std::vector<double>* loss_curve) {
  auto model = make_translator(cfg.seed);
  auto curve = train_translator(*model, data, cfg);
  if (loss_curve) *loss_curve = std::move(curve);
  return model;
}

Tensor4 gray_to_tensor(const GrayImage& img) {
  Tensor4 t(1, 1, img.height, img.width);
  for (std::size_t i = 0; i < img.data.size(); ++i) t.data[i] = img.data[i] / 255.0;
  return t;
}

GrayImage tensor_to_gray(const Tensor4& t) {
  GrayImage img(t.w, t.h);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(std::clamp(std::floor(t.data[i] * 255.0 + 0.5), 0.0, 255.0));
  return img;
}

GrayImage reconstruct(Model& model, const GrayImage& encoded, const PatchGrid& grid) {
  // patches are computed in parallel but stitched serially in grid order, so
  // clamped (overlapping) final tiles resolve deterministically
  std::vector<GrayImage> patches(grid.origins.size());
  parallel_for(grid.origins.size(), [&](std::size_t lo, std::size_t hi) {
    std::unique_ptr<Model> local;
    Model* m = &model;
    if (lo != 0 || hi != grid.origins.size()) {
      local = clone_model(model);
      m = local.get();
    }
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& [ox, oy] = grid.origins[i];
      const Tensor4 x = gray_to_tensor(extract_patch(encoded, ox, oy, grid.patch_size));
      patches[i] = tensor_to_gray(m->forward(x));
    }
  });

  GrayImage out(encoded.width, encoded.height);
  for (std::size_t i = 0; i < grid.origins.size(); ++i) {
    const auto& [ox, oy] = grid.origins[i];
    const GrayImage& patch = patches[i];
    for (int y = 0; y < patch.height; ++y)
      for (int x = 0; x < patch.width; ++x) out.at(ox + x, oy + y) = patch.at(x, y);
  }
  return out;
}

DiffPair diff_images(const GrayImage& osem, const GrayImage& rsem) {
  if (osem.width != rsem.width || osem.height != rsem.height)
    throw Error("diff_images: dimensions differ");
  DiffPair d;
  d.d1 = GrayImage(osem.width, osem.height);
  d.d2 = GrayImage(osem.width, osem.height);
  for (std::size_t i = 0; i < osem.data.size(); ++i) {
    const int diff = static_cast<int>(rsem.data[i]) - static_cast<int>(osem.data[i]);
    d.d1.data[i] = static_cast<std::uint8_t>(std::max(diff, 0));
    d.d2.data[i] = static_cast<std::uint8_t>(std::max(-diff, 0));
  }
  return d;
}

std::vector<Region> filter_candidates(const GrayImage& d, const CandidateFilter& f,
                                      int binarize_threshold) {
  if (f.bbox_min > f.bbox_max || f.mean_min > f.mean_max)
    throw Error("filter_candidates: inverted filter range");
  BinaryMask above(d.width, d.height);
  for (std::size_t i = 0; i < d.data.size(); ++i)
    above.data[i] = d.data[i] > binarize_threshold ? 1 : 0;
  const LabelMap lm = label_components(above);

  std::vector<Region> kept;
  for (const auto& r : region_properties(lm, &d)) {
    const int extent = std::max(r.bbox.width(), r.bbox.height());
    if (extent < f.bbox_min || extent > f.bbox_max) continue;
    if (r.mean_intensity < f.mean_min || r.mean_intensity > f.mean_max) continue;
    kept.push_back(r);
  }
  return kept;
}

std::vector<Detection> classify_via_errors(const std::vector<Region>& cands_d1,
                                           const std::vector<Region>& cands_d2,
                                           const BinaryMask& v_mask) {
  auto overlaps_via = [&v_mask](const Box& b) {
    const int x0 = std::max(b.x0, 0), y0 = std::max(b.y0, 0);
    const int x1 = std::min(b.x1, v_mask.width - 1), y1 = std::min(b.y1, v_mask.height - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if (v_mask.at(x, y)) return true;
    return false;
  };

  std::vector<Detection> out;
  for (const auto& r : cands_d1)
    if (overlaps_via(r.bbox)) out.push_back({ErrorKind::ViaExtra, r.bbox, r.mean_intensity});
  for (const auto& r : cands_d2)
    if (!overlaps_via(r.bbox)) out.push_back({ErrorKind::ViaMiss, r.bbox, r.mean_intensity});
  return out;
}

}  // namespace icsv
