#include "icsv/pipeline.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "icsv/extfeat.hpp"
#include "icsv/rng.hpp"
#include "icsv/serialize.hpp"
#include "icsv/synthgen.hpp"
#include "icsv/viadetect.hpp"
#include "icsv/wiredetect.hpp"

namespace icsv {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<const ManifestImage*> select_images(const DatasetManifest& manifest,
                                                const std::vector<std::string>& ids) {
  std::vector<const ManifestImage*> out;
  if (ids.empty()) {
    for (const auto& img : manifest.images) out.push_back(&img);
  } else {
    for (const auto& id : ids) out.push_back(&manifest.find(id));
  }
  if (out.empty()) throw Error("no images selected");
  return out;
}

void write_rgb_png(const std::vector<std::uint8_t>& rgb, int width, int height,
                   const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw Error("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("png write failure: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

struct Rgb {
  std::uint8_t r, g, b;
};

constexpr Rgb kRed{255, 64, 64};
constexpr Rgb kBlue{64, 96, 255};

void burn_box(std::vector<std::uint8_t>& rgb, int width, int height, const Box& box, Rgb color,
              int thickness = 2) {
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
    rgb[o] = color.r;
    rgb[o + 1] = color.g;
    rgb[o + 2] = color.b;
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = box.x0 - t; x <= box.x1 + t; ++x) {
      put(x, box.y0 - t);
      put(x, box.y1 + t);
    }
    for (int y = box.y0 - t; y <= box.y1 + t; ++y) {
      put(box.x0 - t, y);
      put(box.x1 + t, y);
    }
  }
}

std::vector<std::uint8_t> gray_as_rgb(const GrayImage& img) {
  std::vector<std::uint8_t> rgb(img.data.size() * 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = img.data[i];
  return rgb;
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

void check_variant_channels(const Model& model, EncodeVariant variant) {
  const std::string arch = model.arch();
  if (arch.rfind("classifier:", 0) != 0)
    throw Error("checkpoint/variant mismatch: not a classifier checkpoint");
  const int channels = std::stoi(arch.substr(11));
  if (channels != variant_channels(variant))
    throw Error("checkpoint/variant mismatch: checkpoint has " + std::to_string(channels) +
                " input channels, variant " + variant_name(variant) + " needs " +
                std::to_string(variant_channels(variant)));
}

}  // namespace

DatasetManifest run_synth(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);

  DatasetManifest manifest;
  manifest.patch_size = cfg.patch_size;
  manifest.nominal_via_size = cfg.wire_width;
  manifest.base_dir = fs::absolute(out_dir).string();

  const int border = std::max(cfg.patch_size / 4, 2 * cfg.pitch);
  std::int64_t wire_error_counter = 0;
  std::int64_t via_error_counter = 0;

  for (int i = 0; i < cfg.n_images; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "img%03d", i);
    const fs::path dir = fs::path(out_dir) / id;
    fs::create_directories(dir);

    const std::uint64_t seed_i = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const Layout layout = gen_layout(seed_i, cfg.image_size, cfg.image_size, cfg.layout_params());
    const GrayImage osem = render_sem(layout, cfg.render_params(), mix_seed(seed_i, 1));

    // spread fractional error budgets evenly over the image sequence
    const auto budget = [i](double rate) {
      return static_cast<int>(std::floor(rate * (i + 1)) - std::floor(rate * i));
    };
    const int n_wire = budget(cfg.wire_errors_per_image);
    int n_open = 0, n_short = 0;
    for (int k = 0; k < n_wire; ++k) (wire_error_counter++ % 2 == 0 ? n_open : n_short)++;

    const int total_vias = label_components(layout.via_mask).count;
    const int n_via = static_cast<int>(std::lround(cfg.via_error_ratio * total_vias));
    int n_miss = 0, n_extra = 0;
    for (int k = 0; k < n_via; ++k) (via_error_counter++ % 2 == 0 ? n_miss : n_extra)++;

    auto [w_err, wire_log] = inject_wire_errors(layout, n_open, n_short, mix_seed(seed_i, 2), border);
    auto [v_err, via_log] = inject_via_errors(layout, n_miss, n_extra, mix_seed(seed_i, 3), border);

    ErrorLog log = wire_log;
    log.entries.insert(log.entries.end(), via_log.entries.begin(), via_log.entries.end());

    save_gray(osem, (dir / "oSEM.png").string());
    save_mask(layout.wire_mask, (dir / "W_gt.png").string());
    save_mask(layout.via_mask, (dir / "V_gt.png").string());
    save_mask(w_err, (dir / "W_err.png").string());
    save_mask(v_err, (dir / "V_err.png").string());
    write_json_file(error_log_to_json(log), (dir / "errors.json").string());

    ManifestImage mi;
    mi.id = id;
    const std::string rel = std::string(id) + "/";
    mi.osem = rel + "oSEM.png";
    mi.w_gt = rel + "W_gt.png";
    mi.v_gt = rel + "V_gt.png";
    mi.w_err = rel + "W_err.png";
    mi.v_err = rel + "V_err.png";
    mi.errors = rel + "errors.json";
    manifest.images.push_back(std::move(mi));
  }

  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

void run_features(const std::string& mask_path, const std::string& out_prefix) {
  const BinaryMask mask = load_mask(mask_path);
  save_gray(normalize_extension(v_extension(mask)), out_prefix + "_V.png");
  save_gray(normalize_extension(h_extension(mask)), out_prefix + "_H.png");
}

TrainOutput run_train_wire(const DatasetManifest& manifest, const RunConfig& cfg,
                           const std::vector<std::string>& image_ids,
                           const std::string& checkpoint_path) {
  cfg.validate();
  const auto selected = select_images(manifest, image_ids);

  std::vector<BinaryMask> gws, ews;
  gws.reserve(selected.size());
  ews.reserve(selected.size());
  for (const auto* img : selected) {
    gws.push_back(load_mask(manifest.resolve(img->w_gt)));
    ews.push_back(load_mask(manifest.resolve(img->w_err)));
  }
  std::vector<WirePair> pairs;
  for (std::size_t k = 0; k < selected.size(); ++k)
    pairs.push_back({selected[k]->id, &gws[k], &ews[k]});

  const auto samples = build_wire_dataset(pairs, static_cast<std::size_t>(cfg.n_samples),
                                          cfg.encode_variant_enum(), cfg.patch_size, cfg.seed,
                                          cfg.margin);
  TrainOutput out;
  for (const auto& s : samples) (s.label ? out.positives : out.negatives)++;

  auto model = train_wire_classifier(samples, cfg.wire_train_config(), &out.loss_curve);
  save_checkpoint(*model, checkpoint_path, {cfg.seed, cfg.wire_epochs});
  out.checkpoint_path = checkpoint_path;
  write_json_file(Json{{"loss_curve", out.loss_curve},
                       {"positives", out.positives},
                       {"negatives", out.negatives}},
                  checkpoint_path + ".log.json");
  return out;
}

TrainOutput run_train_via(const DatasetManifest& manifest, const RunConfig& cfg,
                          const std::vector<std::string>& image_ids,
                          const std::string& checkpoint_path) {
  cfg.validate();
  const auto selected = select_images(manifest, image_ids);

  struct ImagePair {
    GrayImage encoded;
    GrayImage osem;
  };
  std::vector<ImagePair> images;
  std::vector<std::pair<std::size_t, std::pair<int, int>>> origins;  // (image idx, origin)
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto* img = selected[k];
    GrayImage osem = load_gray(manifest.resolve(img->osem));
    const BinaryMask w = load_mask(manifest.resolve(img->w_gt));
    const BinaryMask v = load_mask(manifest.resolve(img->v_gt));
    const IntensityTriple t = estimate_vwb(osem, w, v, cfg.contrast_floor);
    images.push_back({encode_wv(w, v, t), std::move(osem)});

    Rng rng(mix_seed(cfg.seed, 0xF00D + k));
    const int max_x = images[k].osem.width - cfg.patch_size;
    const int max_y = images[k].osem.height - cfg.patch_size;
    for (int s = 0; s < cfg.via_patches_per_image; ++s)
      origins.push_back({k,
                         {static_cast<int>(rng.uniform_int(0, max_x)),
                          static_cast<int>(rng.uniform_int(0, max_y))}});
  }

  TranslatorDataset data;
  data.count = origins.size();
  data.get = [&](std::size_t i, Tensor4& x, Tensor4& target) {
    const auto& [k, origin] = origins[i];
    x = gray_to_tensor(extract_patch(images[k].encoded, origin.first, origin.second, cfg.patch_size));
    target = gray_to_tensor(extract_patch(images[k].osem, origin.first, origin.second, cfg.patch_size));
  };

  TrainOutput out;
  auto model = train_translator_model(data, cfg.via_train_config(), &out.loss_curve);
  save_checkpoint(*model, checkpoint_path, {cfg.seed, cfg.via_epochs});
  out.checkpoint_path = checkpoint_path;
  write_json_file(Json{{"loss_curve", out.loss_curve}, {"pairs", data.count}},
                  checkpoint_path + ".log.json");
  return out;
}

ErrorReport detect_wire_image(const DatasetManifest& manifest, const ManifestImage& image,
                              Model& model, const RunConfig& cfg) {
  const EncodeVariant variant = cfg.encode_variant_enum();
  check_variant_channels(model, variant);
  const BinaryMask ew = load_mask(manifest.resolve(image.w_err));
  const PatchGrid grid = tile(ew.width, ew.height, cfg.patch_size, cfg.stride);
  const auto verdicts = classify_patches(model, ew, grid, variant);
  const WireDetection det = vote_localize(verdicts, grid, ew.width, ew.height, cfg.vote_threshold);

  ErrorReport report;
  report.image_id = image.id;
  report.patch_verdicts = det.verdicts;
  report.error_boxes = det.error_boxes;
  return report;
}

ErrorReport detect_via_image(const DatasetManifest& manifest, const ManifestImage& image,
                             Model& model, const RunConfig& cfg) {
  if (model.arch() != "translator")
    throw Error("checkpoint/variant mismatch: not a translator checkpoint");
  const GrayImage osem = load_gray(manifest.resolve(image.osem));
  const BinaryMask w = load_mask(manifest.resolve(image.w_gt));  // wires assumed error-free
  const BinaryMask v = load_mask(manifest.resolve(image.v_err));

  const IntensityTriple t = estimate_vwb(osem, w, v, cfg.contrast_floor);
  if (t.low_contrast)
    std::cerr << "warning: low via/wire contrast on " << image.id << " (v=" << t.v << ", w=" << t.w
              << "); candidate filtering may be unreliable\n";

  const GrayImage encoded = encode_wv(w, v, t);
  const PatchGrid grid = tile(osem.width, osem.height, cfg.patch_size, cfg.patch_size);
  const GrayImage rsem = reconstruct(model, encoded, grid);
  const DiffPair diffs = diff_images(osem, rsem);
  const CandidateFilter filter = cfg.candidate_filter(manifest.nominal_via_size);
  const auto cands_d1 = filter_candidates(diffs.d1, filter, cfg.binarize_threshold);
  const auto cands_d2 = filter_candidates(diffs.d2, filter, cfg.binarize_threshold);

  ErrorReport report;
  report.image_id = image.id;
  report.detections = classify_via_errors(cands_d1, cands_d2, v);
  report.v = t.v;
  report.w = t.w;
  report.b = t.b;
  report.low_contrast = t.low_contrast;
  return report;
}

std::vector<ErrorReport> run_detect(const DatasetManifest& manifest, const RunConfig& cfg,
                                    const DetectOptions& opts) {
  cfg.validate();
  if (opts.wire_checkpoint.empty() && opts.via_checkpoint.empty())
    throw Error("run_detect: no checkpoint given");
  fs::create_directories(opts.out_dir);

  std::unique_ptr<Model> wire_model, via_model;
  if (!opts.wire_checkpoint.empty()) {
    wire_model = load_checkpoint(opts.wire_checkpoint);
    check_variant_channels(*wire_model, cfg.encode_variant_enum());
  }
  if (!opts.via_checkpoint.empty()) {
    via_model = load_checkpoint(opts.via_checkpoint);
    if (via_model->arch() != "translator")
      throw Error("checkpoint/variant mismatch: not a translator checkpoint");
  }

  std::vector<ErrorReport> reports;
  for (const auto* img : select_images(manifest, opts.image_ids)) {
    ErrorReport merged;
    merged.image_id = img->id;

    if (wire_model) {
      const ErrorReport wire = detect_wire_image(manifest, *img, *wire_model, cfg);
      merged.patch_verdicts = wire.patch_verdicts;
      merged.error_boxes = wire.error_boxes;
      if (opts.overlays) {
        const GrayImage base = load_gray(manifest.resolve(img->w_err));
        auto rgb = gray_as_rgb(base);
        // wire detections are kind-agnostic; red marks a connectivity error
        for (const auto& b : merged.error_boxes) burn_box(rgb, base.width, base.height, b, kRed);
        write_rgb_png(rgb, base.width, base.height,
                      (fs::path(opts.out_dir) / (img->id + "_wire_overlay.png")).string());
      }
    }

    if (via_model) {
      const ErrorReport via = detect_via_image(manifest, *img, *via_model, cfg);
      merged.detections = via.detections;
      merged.v = via.v;
      merged.w = via.w;
      merged.b = via.b;
      merged.low_contrast = via.low_contrast;
      if (opts.overlays) {
        const GrayImage base = load_gray(manifest.resolve(img->osem));
        auto rgb = gray_as_rgb(base);
        for (const auto& d : merged.detections)
          burn_box(rgb, base.width, base.height, d.bbox,
                   d.kind == ErrorKind::ViaMiss ? kRed : kBlue);
        write_rgb_png(rgb, base.width, base.height,
                      (fs::path(opts.out_dir) / (img->id + "_via_overlay.png")).string());
      }
      if (opts.dump_intermediates) {
        const GrayImage osem = load_gray(manifest.resolve(img->osem));
        const BinaryMask w = load_mask(manifest.resolve(img->w_gt));
        const BinaryMask v = load_mask(manifest.resolve(img->v_err));
        const IntensityTriple t = estimate_vwb(osem, w, v, cfg.contrast_floor);
        const GrayImage encoded = encode_wv(w, v, t);
        const PatchGrid grid = tile(osem.width, osem.height, cfg.patch_size, cfg.patch_size);
        const GrayImage rsem = reconstruct(*via_model, encoded, grid);
        const DiffPair diffs = diff_images(osem, rsem);
        save_gray(rsem, (fs::path(opts.out_dir) / (img->id + "_rSEM.png")).string());
        save_gray(diffs.d1, (fs::path(opts.out_dir) / (img->id + "_D1.png")).string());
        save_gray(diffs.d2, (fs::path(opts.out_dir) / (img->id + "_D2.png")).string());
      }
    }

    write_json_file(report_to_json(merged),
                    (fs::path(opts.out_dir) / (img->id + ".json")).string());
    reports.push_back(std::move(merged));
  }
  return reports;
}

std::vector<EvalRow> run_eval(const DatasetManifest& manifest, const RunConfig& cfg,
                              const std::string& reports_dir,
                              const std::vector<std::string>& image_ids,
                              const std::string& out_prefix) {
  cfg.validate();
  std::vector<EvalRow> rows;
  PRScore wire_total, via_total;
  bool any_wire = false, any_via = false;

  for (const auto* img : select_images(manifest, image_ids)) {
    const std::string report_path = (fs::path(reports_dir) / (img->id + ".json")).string();
    std::ifstream in(report_path);
    if (!in) throw Error("missing report for image '" + img->id + "': " + report_path);
    const ErrorReport report = report_from_json(Json::parse(in));
    if (report.image_id != img->id)
      throw Error("report/manifest id mismatch: " + report.image_id + " vs " + img->id);

    std::ifstream elog(manifest.resolve(img->errors));
    if (!elog) throw Error("missing error log for image '" + img->id + "'");
    const ErrorLog truth = error_log_from_json(Json::parse(elog));

    if (!report.patch_verdicts.empty()) {
      const GrayImage probe = load_gray(manifest.resolve(img->osem));
      const PatchGrid grid = tile(probe.width, probe.height, cfg.patch_size, cfg.stride);
      PRScore s = score_detections(report, truth, ScoreMode::WirePatch, grid);
      rows.push_back({img->id, "wire-patch", s});
      wire_total.tp += s.tp;
      wire_total.fp += s.fp;
      wire_total.fn += s.fn;
      any_wire = true;
    }
    {
      PRScore s = score_detections(report, truth, ScoreMode::ViaRegion,
                                   PatchGrid{cfg.patch_size, cfg.patch_size, {}});
      const bool has_via_truth = std::any_of(truth.entries.begin(), truth.entries.end(), [](auto& e) {
        return e.kind == ErrorKind::ViaMiss || e.kind == ErrorKind::ViaExtra;
      });
      if (has_via_truth || !report.detections.empty()) {
        rows.push_back({img->id, "via-region", s});
        via_total.tp += s.tp;
        via_total.fp += s.fp;
        via_total.fn += s.fn;
        any_via = true;
      }
    }
  }

  if (any_wire) {
    wire_total.finalize();
    rows.push_back({"ALL", "wire-patch", wire_total});
  }
  if (any_via) {
    via_total.finalize();
    rows.push_back({"ALL", "via-region", via_total});
  }

  Json j = Json::array();
  for (const auto& r : rows) {
    Json e = score_to_json(r.score);
    e["image"] = r.image;
    e["mode"] = r.mode;
    j.push_back(e);
  }
  write_json_file(j, out_prefix + ".json");

  std::ofstream csv(out_prefix + ".csv");
  if (!csv) throw Error("cannot write " + out_prefix + ".csv");
  csv << "image,mode,tp,fp,fn,recall,precision\n";
  for (const auto& r : rows)
    csv << r.image << "," << r.mode << "," << r.score.tp << "," << r.score.fp << "," << r.score.fn
        << "," << r.score.recall << "," << r.score.precision << "\n";
  return rows;
}

}  // namespace icsv
