#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "icsv/extfeat.hpp"
#include "icsv/neural.hpp"
#include "icsv/synthgen.hpp"
#include "icsv/viadetect.hpp"

namespace icsv {

/// Pipeline configuration. Stored as a flat key = value text file with typed
/// keys; unknown keys are rejected.
struct RunConfig {
  // shared
  std::string variant = "WVH";
  int patch_size = 256;
  int stride = 128;  // wire inference stride (patch_size/2: up to 4 votes per pixel)
  int vote_threshold = 2;
  int margin = 64;  // context margin for connectivity labeling
  std::uint64_t seed = 1;

  // synthetic dataset
  int n_images = 8;
  int image_size = 1024;
  int pitch = 32;
  int wire_width = 8;
  double density = 0.7;
  double stub_density = 0.3;
  double via_density = 0.5;
  int via_level = 220;
  int wire_level = 140;
  int bg_level = 40;
  double noise_sigma = 6.0;
  int blur_radius = 1;
  double illumination_tilt = 0.0;
  double wire_errors_per_image = 0.5;  // opens/shorts alternate
  double via_error_ratio = 0.09;       // fraction of vias corrupted

  // wire classifier training
  int wire_epochs = 4;
  double wire_lr = 0.05;
  int wire_batch = 8;
  int n_samples = 1500;
  std::string lr_schedule = "linear-decay-last-half";

  // translator training
  int via_epochs = 10;
  double via_lr = 0.05;
  int via_batch = 4;
  int via_patches_per_image = 8;

  // via post-processing
  int binarize_threshold = 40;
  double bbox_scale_min = 0.5;  // x nominal via size
  double bbox_scale_max = 2.0;
  double mean_min = 40.0;
  double mean_max = 255.0;
  double contrast_floor = 20.0;

  EncodeVariant encode_variant_enum() const { return parse_variant(variant); }
  LayoutParams layout_params() const;
  RenderParams render_params() const;
  TrainConfig wire_train_config() const;
  TrainConfig via_train_config() const;
  CandidateFilter candidate_filter(int nominal_via_size) const;
  void validate() const;
};

RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, std::ostream& out);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace icsv
