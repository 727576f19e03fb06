#pragma once

#include <memory>
#include <vector>

#include "icsv/neural.hpp"
#include "icsv/raster.hpp"
#include "icsv/regions.hpp"
#include "icsv/report.hpp"

namespace icsv {

/// Representative via/wire/background intensities of one SEM image.
struct IntensityTriple {
  double v = 0.0;
  double w = 0.0;
  double b = 0.0;
  bool low_contrast = false;  // v - w below the contrast floor
};

struct DiffPair {
  GrayImage d1;  // max(rSEM - oSEM, 0): candidate extra vias
  GrayImage d2;  // max(oSEM - rSEM, 0): candidate missed vias
};

struct CandidateFilter {
  int bbox_min = 4;
  int bbox_max = 16;
  double mean_min = 40.0;
  double mean_max = 255.0;
};

constexpr double kDefaultContrastFloor = 20.0;

/// v = 90th percentile of via pixels, w = median of wire-not-via pixels,
/// b = 10th percentile of background pixels; nearest-rank percentiles.
IntensityTriple estimate_vwb(const GrayImage& osem, const BinaryMask& w_mask,
                             const BinaryMask& v_mask,
                             double contrast_floor = kDefaultContrastFloor);

/// t.v on vias (via precedence), t.w on wire-not-via, t.b elsewhere.
GrayImage encode_wv(const BinaryMask& w_mask, const BinaryMask& v_mask, const IntensityTriple& t);

/// Encoder-decoder training with L1 reconstruction loss.
std::unique_ptr<Model> train_translator_model(const TranslatorDataset& data, const TrainConfig& cfg,
                                              std::vector<double>* loss_curve = nullptr);

Tensor4 gray_to_tensor(const GrayImage& img);  // [0,1] scaling
GrayImage tensor_to_gray(const Tensor4& t);    // x255, clamped

/// Per-patch inference stitched at stride == patch_size.
GrayImage reconstruct(Model& model, const GrayImage& encoded, const PatchGrid& grid);

DiffPair diff_images(const GrayImage& osem, const GrayImage& rsem);

/// Binarize at > threshold, label components, keep regions whose bbox extent
/// and nonzero-pixel mean fall inside the filter ranges.
std::vector<Region> filter_candidates(const GrayImage& d, const CandidateFilter& f,
                                      int binarize_threshold);

/// D1 candidates overlapping a via region are extra vias; D2 candidates
/// overlapping no via region are missed vias; others are discarded.
std::vector<Detection> classify_via_errors(const std::vector<Region>& cands_d1,
                                           const std::vector<Region>& cands_d2,
                                           const BinaryMask& v_mask);

}  // namespace icsv
