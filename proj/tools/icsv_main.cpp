#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "icsv/config.hpp"
#include "icsv/manifest.hpp"
#include "icsv/pipeline.hpp"

namespace {

icsv::RunConfig make_config(const std::string& config_path,
                            const std::vector<std::string>& overrides,
                            std::optional<std::uint64_t> seed,
                            std::optional<std::string> variant) {
  icsv::RunConfig cfg;
  if (!config_path.empty()) cfg = icsv::load_config(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw icsv::Error("override must be key=value: " + kv);
    icsv::apply_config_line(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed) cfg.seed = *seed;
  if (variant) cfg.variant = *variant;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Connectivity-error detection for segmented IC SEM images"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, out_path, checkpoint_path, mask_path, reports_dir;
  std::string wire_checkpoint, via_checkpoint;
  std::vector<std::string> overrides, image_ids;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  bool print_defaults = false, dump_intermediates = false, no_overlays = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (flat key = value)");
    cmd->add_option("--set", overrides, "config override key=value")->take_all();
    cmd->add_option("--seed", seed, "override config seed");
  };
  auto add_manifest = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "dataset manifest.json")->required();
    cmd->add_option("--images", image_ids, "image id subset (default: all)")->delimiter(',');
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);
  synth->add_option("--out", out_path, "output dataset directory")->required();

  auto* features = app.add_subcommand("features", "write V/H extension feature images");
  features->add_option("--mask", mask_path, "wire mask PNG/PGM")->required();
  features->add_option("--out", out_path, "output prefix")->required();

  auto* train_wire = app.add_subcommand("train-wire", "train the wire patch classifier");
  add_common(train_wire);
  add_manifest(train_wire);
  train_wire->add_option("--variant", variant, "input encoding: W, VH, or WVH");
  train_wire->add_option("--checkpoint", checkpoint_path, "output checkpoint path")->required();

  auto* train_via = app.add_subcommand("train-via", "train the SEM reconstruction translator");
  add_common(train_via);
  add_manifest(train_via);
  train_via->add_option("--checkpoint", checkpoint_path, "output checkpoint path")->required();

  auto* detect_wire = app.add_subcommand("detect-wire", "wire error detection");
  add_common(detect_wire);
  add_manifest(detect_wire);
  detect_wire->add_option("--variant", variant, "input encoding: W, VH, or WVH");
  detect_wire->add_option("--checkpoint", wire_checkpoint, "classifier checkpoint")->required();
  detect_wire->add_option("--out", out_path, "report output directory")->required();
  detect_wire->add_flag("--no-overlays", no_overlays, "skip overlay PNGs");

  auto* detect_via = app.add_subcommand("detect-via", "via error detection");
  add_common(detect_via);
  add_manifest(detect_via);
  detect_via->add_option("--checkpoint", via_checkpoint, "translator checkpoint")->required();
  detect_via->add_option("--out", out_path, "report output directory")->required();
  detect_via->add_flag("--dump", dump_intermediates, "also write rSEM/D1/D2 PNGs");
  detect_via->add_flag("--no-overlays", no_overlays, "skip overlay PNGs");

  auto* detect = app.add_subcommand("detect", "both branches");
  add_common(detect);
  add_manifest(detect);
  detect->add_option("--variant", variant, "input encoding: W, VH, or WVH");
  detect->add_option("--wire-checkpoint", wire_checkpoint, "classifier checkpoint")->required();
  detect->add_option("--via-checkpoint", via_checkpoint, "translator checkpoint")->required();
  detect->add_option("--out", out_path, "report output directory")->required();
  detect->add_flag("--dump", dump_intermediates, "also write rSEM/D1/D2 PNGs");
  detect->add_flag("--no-overlays", no_overlays, "skip overlay PNGs");

  auto* eval = app.add_subcommand("eval", "score detection reports against ground truth");
  add_common(eval);
  add_manifest(eval);
  eval->add_option("--reports", reports_dir, "directory of <id>.json reports")->required();
  eval->add_option("--out", out_path, "output prefix for scores .json/.csv")->required();

  auto* config_cmd = app.add_subcommand("config", "configuration utilities");
  add_common(config_cmd);
  config_cmd->add_flag("--print-defaults", print_defaults, "dump all keys with default values");

  CLI11_PARSE(app, argc, argv);

  try {
    const icsv::RunConfig cfg = make_config(config_path, overrides, seed, variant);

    if (synth->parsed()) {
      const auto manifest = icsv::run_synth(cfg, out_path);
      std::cout << "wrote " << manifest.images.size() << " images to " << out_path << "\n";
    } else if (features->parsed()) {
      icsv::run_features(mask_path, out_path);
    } else if (train_wire->parsed() || train_via->parsed()) {
      auto manifest = icsv::load_manifest(manifest_path);
      icsv::validate_manifest(manifest);
      const auto out = train_wire->parsed()
                           ? icsv::run_train_wire(manifest, cfg, image_ids, checkpoint_path)
                           : icsv::run_train_via(manifest, cfg, image_ids, checkpoint_path);
      std::cout << "checkpoint: " << out.checkpoint_path << "\n";
      if (!out.loss_curve.empty())
        std::cout << "loss: " << out.loss_curve.front() << " -> " << out.loss_curve.back() << "\n";
    } else if (detect_wire->parsed() || detect_via->parsed() || detect->parsed()) {
      auto manifest = icsv::load_manifest(manifest_path);
      icsv::DetectOptions opts;
      opts.wire_checkpoint = wire_checkpoint;
      opts.via_checkpoint = via_checkpoint;
      opts.image_ids = image_ids;
      opts.out_dir = out_path;
      opts.overlays = !no_overlays;
      opts.dump_intermediates = dump_intermediates;
      const auto reports = icsv::run_detect(manifest, cfg, opts);
      std::cout << "wrote " << reports.size() << " reports to " << out_path << "\n";
    } else if (eval->parsed()) {
      const auto manifest = icsv::load_manifest(manifest_path);
      const auto rows = icsv::run_eval(manifest, cfg, reports_dir, image_ids, out_path);
      for (const auto& r : rows)
        if (r.image == "ALL")
          std::cout << r.mode << ": recall " << r.score.recall << " precision "
                    << r.score.precision << "\n";
    } else if (config_cmd->parsed()) {
      if (print_defaults)
        icsv::save_config(icsv::RunConfig{}, std::cout);
      else
        icsv::save_config(cfg, std::cout);
    }
  } catch (const icsv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
