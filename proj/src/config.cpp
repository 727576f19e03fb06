#include "icsv/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace icsv {

namespace {

struct KeyBinding {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
T parse_value(const std::string& s);

template <>
int parse_value<int>(const std::string& s) {
  return std::stoi(s);
}
template <>
double parse_value<double>(const std::string& s) {
  return std::stod(s);
}
template <>
std::uint64_t parse_value<std::uint64_t>(const std::string& s) {
  return std::stoull(s);
}
template <>
std::string parse_value<std::string>(const std::string& s) {
  return s;
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, double>) {
    std::ostringstream os;
    os << v;
    return os.str();
  } else {
    return std::to_string(v);
  }
}

const std::map<std::string, KeyBinding>& bindings() {
  static const std::map<std::string, KeyBinding> map = [] {
    std::map<std::string, KeyBinding> m;
    auto bind = [&m](const std::string& key, auto member) {
      m[key] = KeyBinding{
          [member](const RunConfig& c) { return format_value(c.*member); },
          [member, key](RunConfig& c, const std::string& v) {
            using T = std::decay_t<decltype(c.*member)>;
            try {
              c.*member = parse_value<T>(v);
            } catch (const std::exception&) {
              throw Error("config: bad value for " + key + ": '" + v + "'");
            }
          }};
    };
    bind("variant", &RunConfig::variant);
    bind("patch_size", &RunConfig::patch_size);
    bind("stride", &RunConfig::stride);
    bind("vote_threshold", &RunConfig::vote_threshold);
    bind("margin", &RunConfig::margin);
    bind("seed", &RunConfig::seed);
    bind("n_images", &RunConfig::n_images);
    bind("image_size", &RunConfig::image_size);
    bind("pitch", &RunConfig::pitch);
    bind("wire_width", &RunConfig::wire_width);
    bind("density", &RunConfig::density);
    bind("stub_density", &RunConfig::stub_density);
    bind("via_density", &RunConfig::via_density);
    bind("via_level", &RunConfig::via_level);
    bind("wire_level", &RunConfig::wire_level);
    bind("bg_level", &RunConfig::bg_level);
    bind("noise_sigma", &RunConfig::noise_sigma);
    bind("blur_radius", &RunConfig::blur_radius);
    bind("illumination_tilt", &RunConfig::illumination_tilt);
    bind("wire_errors_per_image", &RunConfig::wire_errors_per_image);
    bind("via_error_ratio", &RunConfig::via_error_ratio);
    bind("wire_epochs", &RunConfig::wire_epochs);
    bind("wire_lr", &RunConfig::wire_lr);
    bind("wire_batch", &RunConfig::wire_batch);
    bind("n_samples", &RunConfig::n_samples);
    bind("lr_schedule", &RunConfig::lr_schedule);
    bind("via_epochs", &RunConfig::via_epochs);
    bind("via_lr", &RunConfig::via_lr);
    bind("via_batch", &RunConfig::via_batch);
    bind("via_patches_per_image", &RunConfig::via_patches_per_image);
    bind("binarize_threshold", &RunConfig::binarize_threshold);
    bind("bbox_scale_min", &RunConfig::bbox_scale_min);
    bind("bbox_scale_max", &RunConfig::bbox_scale_max);
    bind("mean_min", &RunConfig::mean_min);
    bind("mean_max", &RunConfig::mean_max);
    bind("contrast_floor", &RunConfig::contrast_floor);
    return m;
  }();
  return map;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

LrSchedule parse_schedule(const std::string& name) {
  if (name == "constant") return LrSchedule::Constant;
  if (name == "linear-decay-last-half") return LrSchedule::LinearDecayLastHalf;
  throw Error("config: unknown lr_schedule '" + name + "'");
}

}  // namespace

LayoutParams RunConfig::layout_params() const {
  LayoutParams p;
  p.pitch = pitch;
  p.wire_width = wire_width;
  p.density = density;
  p.stub_density = stub_density;
  p.via_density = via_density;
  p.border = std::max(patch_size / 4, 2 * pitch);
  return p;
}

RenderParams RunConfig::render_params() const {
  RenderParams rp;
  rp.via_level = static_cast<std::uint8_t>(via_level);
  rp.wire_level = static_cast<std::uint8_t>(wire_level);
  rp.bg_level = static_cast<std::uint8_t>(bg_level);
  rp.noise_sigma = noise_sigma;
  rp.blur_radius = blur_radius;
  rp.illumination_tilt = illumination_tilt;
  return rp;
}

TrainConfig RunConfig::wire_train_config() const {
  TrainConfig tc;
  tc.epochs = wire_epochs;
  tc.lr = wire_lr;
  tc.batch_size = wire_batch;
  tc.seed = seed;
  tc.loss = LossKind::WeightedCE;
  tc.lr_schedule = parse_schedule(lr_schedule);
  return tc;
}

TrainConfig RunConfig::via_train_config() const {
  TrainConfig tc;
  tc.epochs = via_epochs;
  tc.lr = via_lr;
  tc.batch_size = via_batch;
  tc.seed = seed;
  tc.loss = LossKind::L1;
  tc.lr_schedule = parse_schedule(lr_schedule);
  return tc;
}

CandidateFilter RunConfig::candidate_filter(int nominal_via_size) const {
  CandidateFilter f;
  f.bbox_min = static_cast<int>(std::floor(bbox_scale_min * nominal_via_size));
  f.bbox_max = static_cast<int>(std::ceil(bbox_scale_max * nominal_via_size));
  f.mean_min = mean_min;
  f.mean_max = mean_max;
  return f;
}

void RunConfig::validate() const {
  parse_variant(variant);
  parse_schedule(lr_schedule);
  if (patch_size <= 0 || patch_size % 16) throw Error("config: patch_size must be a positive multiple of 16");
  if (stride < 1 || stride > patch_size) throw Error("config: require 1 <= stride <= patch_size");
  if (vote_threshold < 1) throw Error("config: vote_threshold must be >= 1");
  if (margin < 0) throw Error("config: margin must be >= 0");
  if (!(via_level > wire_level && wire_level > bg_level))
    throw Error("config: require via_level > wire_level > bg_level");
  if (wire_epochs < 1 || via_epochs < 1) throw Error("config: epochs must be >= 1");
  if (wire_lr <= 0 || via_lr <= 0) throw Error("config: lr must be > 0");
  if (bbox_scale_min > bbox_scale_max || mean_min > mean_max)
    throw Error("config: inverted filter range");
  if (via_error_ratio < 0.0 || via_error_ratio > 1.0)
    throw Error("config: via_error_ratio must be in [0,1]");
  if (wire_errors_per_image < 0.0) throw Error("config: wire_errors_per_image must be >= 0");
  for (const double d : {density, stub_density, via_density})
    if (d < 0.0 || d > 1.0) throw Error("config: densities must be in [0,1]");
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config: missing '=' at " + path + ":" + std::to_string(lineno));
    apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void save_config(const RunConfig& cfg, std::ostream& out) {
  for (const auto& [key, binding] : bindings()) out << key << " = " << binding.get(cfg) << "\n";
}

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = bindings().find(key);
  if (it == bindings().end()) throw Error("config: unknown key '" + key + "'");
  it->second.set(cfg, value);
}

}  // namespace icsv
