#include "icsv/wiredetect.hpp"

#include <algorithm>

#include "icsv/parallel.hpp"
#include "icsv/rng.hpp"

namespace icsv {

std::vector<WireSample> build_wire_dataset(const std::vector<WirePair>& pairs,
                                           std::size_t n_samples, EncodeVariant variant,
                                           int patch_size, std::uint64_t seed, int margin) {
  if (pairs.empty()) throw Error("build_wire_dataset: empty image set");
  Rng rng(seed);

  // full-image stacks and per-image label grids are computed once
  std::vector<MultiChannelImage> stacks;
  stacks.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (!p.gw || !p.ew || p.gw->width != p.ew->width || p.gw->height != p.ew->height)
      throw Error("build_wire_dataset: mask pair mismatch for " + p.image_id);
    if (p.gw->width < patch_size || p.gw->height < patch_size)
      throw Error("build_wire_dataset: image smaller than patch for " + p.image_id);
    stacks.push_back(encode_variant(*p.ew, variant));
  }

  std::vector<WireSample> samples;
  samples.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::size_t k =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pairs.size()) - 1));
    const auto& p = pairs[k];
    const int ox = static_cast<int>(rng.uniform_int(0, p.gw->width - patch_size));
    const int oy = static_cast<int>(rng.uniform_int(0, p.gw->height - patch_size));

    PatchGrid one;
    one.patch_size = patch_size;
    one.stride = patch_size;
    one.origins = {{ox, oy}};
    const auto labels = esd_label_patches(*p.gw, *p.ew, one, margin);

    WireSample sample;
    sample.stack = extract_patch(stacks[k], ox, oy, patch_size);
    sample.label = labels.front().error ? 1 : 0;
    sample.image_id = p.image_id;
    sample.origin = {ox, oy};
    samples.push_back(std::move(sample));
  }
  return samples;
}

Tensor4 stack_to_tensor(const MultiChannelImage& stack) {
  const int c = static_cast<int>(stack.channels.size());
  Tensor4 t(1, c, stack.height(), stack.width());
  std::size_t o = 0;
  for (int ic = 0; ic < c; ++ic)
    for (std::uint8_t v : stack.channels[ic].data) t.data[o++] = v / 255.0;
  return t;
}

std::unique_ptr<Model> train_wire_classifier(const std::vector<WireSample>& samples,
                                             TrainConfig cfg, std::vector<double>* loss_curve) {
  std::int64_t positives = 0;
  for (const auto& s : samples) positives += s.label;
  const std::int64_t negatives = static_cast<std::int64_t>(samples.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw Error("train_wire_classifier: need both classes, got " + std::to_string(positives) +
                " positives / " + std::to_string(negatives) + " negatives");
  std::tie(cfg.w_pos, cfg.w_neg) = class_weights(positives, negatives);
  cfg.loss = LossKind::WeightedCE;

  const int channels = static_cast<int>(samples.front().stack.channels.size());
  auto model = make_classifier(channels, cfg.seed);
  ClassifierDataset data;
  data.count = samples.size();
  data.get = [&samples](std::size_t i, Tensor4& x, int& label) {
    x = stack_to_tensor(samples[i].stack);
    label = samples[i].label;
  };
  auto curve = train_classifier(*model, data, cfg);
  if (loss_curve) *loss_curve = std::move(curve);
  return model;
}

std::vector<PatchVerdict> classify_patches(Model& model, const BinaryMask& ew,
                                           const PatchGrid& grid, EncodeVariant variant) {
  const MultiChannelImage full = encode_variant(ew, variant);
  std::vector<PatchVerdict> verdicts(grid.origins.size());
  // inference is pure; checkpointed weights are shared read-only, but each
  // worker needs its own layer activation storage
  parallel_for(grid.origins.size(), [&](std::size_t lo, std::size_t hi) {
    std::unique_ptr<Model> local;
    Model* m = &model;
    if (lo != 0 || hi != grid.origins.size()) {
      local = clone_model(model);
      m = local.get();
    }
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& [ox, oy] = grid.origins[i];
      const Tensor4 x = stack_to_tensor(extract_patch(full, ox, oy, grid.patch_size));
      const Tensor4 y = m->forward(x);
      verdicts[i] = {ox, oy, static_cast<float>(y.at(0, 0, 0, 0)),
                     static_cast<float>(y.at(0, 1, 0, 0))};
    }
  });
  return verdicts;
}

WireDetection vote_localize(const std::vector<PatchVerdict>& verdicts, const PatchGrid& grid,
                            int width, int height, int vote_threshold) {
  if (vote_threshold < 1) throw Error("vote_localize: vote_threshold must be >= 1");
  WireDetection det;
  det.verdicts = verdicts;
  det.width = width;
  det.height = height;
  det.vote_map.assign(static_cast<std::size_t>(width) * height, 0);
  for (const auto& v : verdicts) {
    if (!v.positive()) continue;
    for (int y = v.y; y < v.y + grid.patch_size; ++y)
      for (int x = v.x; x < v.x + grid.patch_size; ++x)
        ++det.vote_map[static_cast<std::size_t>(y) * width + x];
  }

  BinaryMask above(width, height);
  for (std::size_t i = 0; i < above.data.size(); ++i)
    above.data[i] = det.vote_map[i] >= vote_threshold ? 1 : 0;
  const LabelMap lm = label_components(above);
  for (const auto& r : region_properties(lm)) det.error_boxes.push_back(r.bbox);
  return det;
}

}  // namespace icsv
