#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "icsv/conneval.hpp"
#include "icsv/extfeat.hpp"
#include "icsv/neural.hpp"
#include "icsv/raster.hpp"
#include "icsv/report.hpp"

namespace icsv {

struct WireSample {
  MultiChannelImage stack;  // crop of the full-image feature stack
  int label = 0;            // 1 = error (positive), 0 = correct
  std::string image_id;
  std::pair<int, int> origin;
};

struct WireDetection {
  std::vector<PatchVerdict> verdicts;
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> vote_map;  // positive votes per pixel
  std::vector<Box> error_boxes;

  std::int32_t vote_at(int x, int y) const {
    return vote_map[static_cast<std::size_t>(y) * width + x];
  }
};

/// One ground-truth/candidate wire mask pair with an id for bookkeeping.
struct WirePair {
  std::string image_id;
  const BinaryMask* gw = nullptr;
  const BinaryMask* ew = nullptr;
};

/// Uniformly samples fully in-bounds origins, labels them with
/// esd_label_patches semantics, and crops stacks from full-image features.
std::vector<WireSample> build_wire_dataset(const std::vector<WirePair>& pairs,
                                           std::size_t n_samples, EncodeVariant variant,
                                           int patch_size, std::uint64_t seed, int margin = 64);

/// Trains the patch classifier with class weights from the sample counts.
std::unique_ptr<Model> train_wire_classifier(const std::vector<WireSample>& samples,
                                             TrainConfig cfg, std::vector<double>* loss_curve = nullptr);

/// Converts a stack crop to a [0,1]-normalized input tensor.
Tensor4 stack_to_tensor(const MultiChannelImage& stack);

/// Sliding-window inference; features are computed once on the full image.
std::vector<PatchVerdict> classify_patches(Model& model, const BinaryMask& ew,
                                           const PatchGrid& grid, EncodeVariant variant);

/// Overlap-vote localization: error regions are components of
/// {vote_map >= vote_threshold}; patch verdicts pass through unchanged.
WireDetection vote_localize(const std::vector<PatchVerdict>& verdicts, const PatchGrid& grid,
                            int width, int height, int vote_threshold);

}  // namespace icsv
