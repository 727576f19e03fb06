// End-to-end acceptance checks. Each check prints exactly one PASS/FAIL line;
// the process exits nonzero if any check fails. The benchmark checks share one
// generated dataset and train real models, so a full run takes tens of minutes
// on a single core.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "icsv/conneval.hpp"
#include "icsv/extfeat.hpp"
#include "icsv/neural.hpp"
#include "icsv/pipeline.hpp"
#include "icsv/regions.hpp"
#include "icsv/serialize.hpp"
#include "icsv/synthgen.hpp"
#include "icsv/viadetect.hpp"
#include "icsv/wiredetect.hpp"
#include "oracles.hpp"

using namespace icsv;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s: %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.empty() ? "" : " | ",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void run(const std::string& name, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(name, ok, detail);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "icsv_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::vector<char>> read_tree(const fs::path& root) {
  std::map<std::string, std::vector<char>> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[fs::relative(entry.path(), root).string()] = {std::istreambuf_iterator<char>(in),
                                                        std::istreambuf_iterator<char>()};
  }
  return files;
}

ErrorLog load_error_log(const DatasetManifest& manifest, const ManifestImage& img) {
  std::ifstream in(manifest.resolve(img.errors));
  return error_log_from_json(Json::parse(in));
}

// ---- shared benchmark state ----

RunConfig benchmark_config() {
  RunConfig cfg;
  cfg.n_images = 24;
  cfg.image_size = 1024;
  cfg.seed = 42;
  cfg.patch_size = 128;
  cfg.stride = 64;
  cfg.wire_errors_per_image = 1.2;  // about 3% of uniformly sampled patches hit an error
  cfg.via_error_ratio = 0.09;
  cfg.n_samples = 2000;
  cfg.wire_epochs = 20;
  cfg.via_patches_per_image = 16;
  cfg.mean_min = 52.0;
  return cfg;
}

struct Benchmark {
  RunConfig cfg = benchmark_config();
  DatasetManifest manifest;
  std::vector<std::string> train_ids, test_ids;

  void build() {
    const fs::path dir = fresh_dir("benchmark");
    manifest = run_synth(cfg, dir.string());
    for (std::size_t i = 0; i < manifest.images.size(); ++i)
      (i < 16 ? train_ids : test_ids).push_back(manifest.images[i].id);
  }

  // Aggregate patch-level score of one trained wire classifier over the
  // held-out images.
  PRScore score_wire(Model& model, const std::string& variant) {
    RunConfig c = cfg;
    c.variant = variant;
    PRScore total;
    const PatchGrid grid = tile(c.image_size, c.image_size, c.patch_size, c.stride);
    for (const auto& id : test_ids) {
      const ManifestImage& img = manifest.find(id);
      const ErrorReport rep = detect_wire_image(manifest, img, model, c);
      const PRScore s = score_detections(rep, load_error_log(manifest, img),
                                         ScoreMode::WirePatch, grid);
      total.tp += s.tp;
      total.fp += s.fp;
      total.fn += s.fn;
    }
    total.finalize();
    return total;
  }
};

std::string pr_text(const PRScore& s) {
  std::ostringstream os;
  os << "R=" << s.recall << " P=" << s.precision << " (tp=" << s.tp << " fp=" << s.fp
     << " fn=" << s.fn << ")";
  return os.str();
}

}  // namespace

int main() {
  // 1. weighted-loss class weights
  run("class weights from sample counts", [](std::string& detail) {
    const auto [wp, wn] = class_weights(6883, 222166);
    const double ep = std::abs(wp - 222166.0 / 229049.0);
    const double en = std::abs(wn - 6883.0 / 229049.0);
    bool ok = ep < 1e-6 && en < 1e-6;
    std::mt19937_64 mt(1);
    std::uniform_int_distribution<std::int64_t> counts(1, 1000000);
    for (int i = 0; i < 200 && ok; ++i) {
      const auto [a, b] = class_weights(counts(mt), counts(mt));
      ok = std::abs(a + b - 1.0) < 1e-12;
    }
    std::ostringstream os;
    os << "w_pos=" << wp << " w_neg=" << wn;
    detail = os.str();
    return ok;
  });

  // 2. component labeling vs flood fill
  run("component labeling matches flood fill", [](std::string& detail) {
    std::mt19937 mt(2);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
      const double p = 0.2 + 0.6 * (i % 5) / 4.0;
      const BinaryMask mask = oracle::random_mask(mt, 64, 64, p);
      for (const Connectivity conn : {Connectivity::Four, Connectivity::Eight}) {
        const LabelMap lm = label_components(mask, conn);
        const LabelMap ref = oracle::flood_fill_components(mask, conn);
        if (!oracle::same_partition(lm, ref)) {
          detail = "disagreement at mask " + std::to_string(i);
          return false;
        }
        ++checked;
      }
    }
    detail = std::to_string(checked) + " labelings";
    return true;
  });

  // 3. extension features vs per-pixel scan
  run("extension features match scan oracle", [](std::string& detail) {
    std::mt19937 mt(3);
    for (int i = 0; i < 100; ++i) {
      const BinaryMask mask = oracle::random_mask(mt, 32, 32, 0.5);
      const ExtensionMap h = h_extension(mask), v = v_extension(mask);
      const ExtensionMap hr = oracle::scan_h_extension(mask), vr = oracle::scan_v_extension(mask);
      if (h.values != hr.values || v.values != vr.values) {
        detail = "disagreement at mask " + std::to_string(i);
        return false;
      }
    }
    detail = "100 masks";
    return true;
  });

  // 4. per-layer gradient checks
  run("layer gradients pass finite differences", [](std::string& detail) {
    Rng rng(4);
    std::mt19937 mt(4);
    // keep activations away from relu kinks and pooling ties
    auto fill = [&mt](Tensor4& t) {
      std::uniform_real_distribution<double> mag(0.25, 1.5);
      std::bernoulli_distribution sign(0.5);
      for (auto& v : t.data) v = (sign(mt) ? 1.0 : -1.0) * mag(mt);
    };
    struct Case {
      const char* name;
      std::unique_ptr<Model> model;
      Tensor4 input;
    };
    std::vector<Case> cases;
    auto add = [&](const char* name, std::vector<std::unique_ptr<Layer>> layers, int c, int h,
                   int w) {
      Case cs{name, make_sequential(std::move(layers), name), Tensor4(2, c, h, w)};
      fill(cs.input);
      cases.push_back(std::move(cs));
    };
    auto single = [](std::unique_ptr<Layer> l) {
      std::vector<std::unique_ptr<Layer>> v;
      v.push_back(std::move(l));
      return v;
    };
    // parameter-free layers sit behind a conv so their backward pass is what
    // carries the checked gradients
    auto behind_conv = [&rng](std::unique_ptr<Layer> l) {
      std::vector<std::unique_ptr<Layer>> v;
      v.push_back(make_conv3x3(2, 2, rng));
      v.push_back(std::move(l));
      return v;
    };
    add("conv3x3", single(make_conv3x3(2, 3, rng)), 2, 6, 6);
    add("dense", single(make_dense(6, 4, rng)), 6, 1, 1);
    add("relu", behind_conv(make_relu()), 2, 4, 4);
    add("sigmoid", behind_conv(make_sigmoid()), 2, 4, 4);
    add("maxpool2", behind_conv(make_maxpool2()), 2, 4, 4);
    add("upsample2", behind_conv(make_upsample2()), 2, 4, 4);
    add("global_avg_pool", behind_conv(make_global_avg_pool()), 2, 4, 4);

    double worst = 0.0;
    std::string worst_name;
    for (auto& cs : cases) {
      Tensor4 target = cs.model->forward(cs.input);
      for (auto& v : target.data) v += 0.3;  // nonzero loss everywhere
      const auto loss = [&target](const Tensor4& y) { return l1_loss(y, target); };
      const double err = grad_check(*cs.model, cs.input, loss, 1e-3);
      if (err > worst) {
        worst = err;
        worst_name = cs.name;
      }
      if (err > 1e-3) {
        detail = std::string(cs.name) + " rel err " + std::to_string(err);
        return false;
      }
    }
    std::ostringstream os;
    os << "worst rel err " << worst << " (" << worst_name << ")";
    detail = os.str();
    return true;
  });

  // 5. patch labels vs injected error boxes
  run("patch labels match injected error boxes", [](std::string& detail) {
    const PatchGrid grid = tile(512, 512, 128, 128);
    int disagreements = 0;
    for (std::uint64_t seed = 100; seed < 150; ++seed) {
      LayoutParams lp;
      lp.stub_density = 0.0;
      const Layout layout = gen_layout(seed, 512, 512, lp);
      const auto [ew, log] = inject_wire_errors(layout, 1, 1, seed);
      const auto labels = esd_label_patches(layout.wire_mask, ew, grid, 64);
      for (const auto& pl : labels) {
        const Box patch{pl.origin.first, pl.origin.second, pl.origin.first + 127,
                        pl.origin.second + 127};
        bool expected = false;
        for (const auto& e : log.entries) expected = expected || patch.intersects(e.bbox);
        if (expected != pl.error) ++disagreements;
      }
    }
    detail = std::to_string(disagreements) + " disagreements over 50 layouts";
    return disagreements == 0;
  });

  // 6. via matching conservation
  run("via matching conserves region counts", [](std::string& detail) {
    std::mt19937 mt(6);
    for (int i = 0; i < 200; ++i) {
      const BinaryMask ev = oracle::random_mask(mt, 32, 32, 0.3);
      const BinaryMask gv = oracle::random_mask(mt, 32, 32, 0.3);
      const ViaMatchResult r = via_match(ev, gv);
      std::vector<bool> ev_seen(static_cast<std::size_t>(r.ev_total) + 1, false);
      std::vector<bool> gv_seen(static_cast<std::size_t>(r.gv_total) + 1, false);
      for (const auto& [e, g] : r.matched) {
        ev_seen[static_cast<std::size_t>(e)] = true;
        gv_seen[static_cast<std::size_t>(g)] = true;
      }
      std::int64_t ev_matched = 0, gv_matched = 0;
      for (std::size_t l = 1; l < ev_seen.size(); ++l) ev_matched += ev_seen[l];
      for (std::size_t l = 1; l < gv_seen.size(); ++l) gv_matched += gv_seen[l];
      if (ev_matched + static_cast<std::int64_t>(r.extra.size()) != r.ev_total ||
          gv_matched + static_cast<std::int64_t>(r.miss.size()) != r.gv_total) {
        detail = "conservation broken at pair " + std::to_string(i);
        return false;
      }
    }
    detail = "200 mask pairs";
    return true;
  });

  // 7. difference-map, filter and vote properties
  run("difference, filter and vote properties hold", [](std::string& detail) {
    std::mt19937 mt(7);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int i = 0; i < 100; ++i) {
      GrayImage a(24, 24), b(24, 24);
      for (auto& v : a.data) v = static_cast<std::uint8_t>(byte(mt));
      for (auto& v : b.data) v = static_cast<std::uint8_t>(byte(mt));
      const DiffPair d = diff_images(a, b);
      for (std::size_t k = 0; k < d.d1.data.size(); ++k)
        if (std::min(d.d1.data[k], d.d2.data[k]) != 0) {
          detail = "nonzero min(d1,d2)";
          return false;
        }
    }
    for (int i = 0; i < 100; ++i) {
      GrayImage d(48, 48, 0);
      std::uniform_int_distribution<int> pos(0, 40), size(1, 8), val(30, 255);
      for (int blob = 0; blob < 6; ++blob) {
        const int x0 = pos(mt), y0 = pos(mt), s = size(mt);
        const std::uint8_t v = static_cast<std::uint8_t>(val(mt));
        for (int y = y0; y < std::min(48, y0 + s); ++y)
          for (int x = x0; x < std::min(48, x0 + s); ++x) d.at(x, y) = v;
      }
      CandidateFilter narrow{3, 8, 80.0, 200.0};
      CandidateFilter wide{2, 12, 50.0, 255.0};
      const auto kept_narrow = filter_candidates(d, narrow, 25);
      const auto kept_wide = filter_candidates(d, wide, 25);
      for (const auto& r : kept_narrow) {
        bool found = false;
        for (const auto& w : kept_wide) found = found || w.bbox == r.bbox;
        if (!found) {
          detail = "widened filter dropped a region";
          return false;
        }
      }
    }
    const PatchGrid grid = tile(256, 256, 64, 32);
    std::bernoulli_distribution coin(0.3);
    for (int i = 0; i < 100; ++i) {
      std::vector<PatchVerdict> verdicts;
      for (const auto& [ox, oy] : grid.origins) {
        const bool pos = coin(mt);
        verdicts.push_back({ox, oy, pos ? 1.0f : 0.0f, pos ? 0.0f : 1.0f});
      }
      WireDetection prev = vote_localize(verdicts, grid, 256, 256, 1);
      for (int t = 2; t <= 4; ++t) {
        const WireDetection cur = vote_localize(verdicts, grid, 256, 256, t);
        // each region above the raised threshold sits inside a lower one
        for (const auto& box : cur.error_boxes) {
          bool contained = false;
          for (const auto& low : prev.error_boxes)
            contained = contained || (low.x0 <= box.x0 && low.y0 <= box.y0 &&
                                      box.x1 <= low.x1 && box.y1 <= low.y1);
          if (!contained) {
            detail = "raising the vote threshold produced a region outside lower ones";
            return false;
          }
        }
        if (cur.error_boxes.size() > 0 && prev.error_boxes.empty()) {
          detail = "regions appeared as the threshold rose";
          return false;
        }
        prev = cur;
      }
    }
    detail = "100 trials each";
    return true;
  });

  // 8. determinism of the full pipeline
  run("full pipeline is deterministic", [](std::string& detail) {
    RunConfig cfg;
    cfg.n_images = 2;
    cfg.image_size = 512;
    cfg.patch_size = 128;
    cfg.stride = 64;
    cfg.margin = 32;
    cfg.wire_errors_per_image = 1.0;
    cfg.n_samples = 24;
    cfg.wire_epochs = 1;
    cfg.via_epochs = 1;
    cfg.via_patches_per_image = 2;
    cfg.seed = 9;
    auto pipeline = [&cfg](const std::string& tag) {
      const fs::path dir = fresh_dir("determinism_" + tag);
      const DatasetManifest manifest = run_synth(cfg, dir.string());
      const auto wire = run_train_wire(manifest, cfg, {}, (dir / "wire.ckpt").string());
      const auto via = run_train_via(manifest, cfg, {}, (dir / "via.ckpt").string());
      DetectOptions opts;
      opts.wire_checkpoint = wire.checkpoint_path;
      opts.via_checkpoint = via.checkpoint_path;
      opts.out_dir = (dir / "reports").string();
      opts.overlays = false;
      run_detect(manifest, cfg, opts);
      run_eval(manifest, cfg, opts.out_dir, {}, (dir / "scores").string());
      return read_tree(dir / "reports");
    };
    const bool ok = pipeline("a") == pipeline("b");
    detail = ok ? "reports byte-identical across runs" : "reports differ";
    return ok;
  });

  // 9. low-contrast rendering is flagged but processed
  run("low-contrast input is flagged and still processed", [](std::string& detail) {
    RunConfig cfg;
    cfg.n_images = 1;
    cfg.image_size = 512;
    cfg.patch_size = 128;
    cfg.stride = 64;
    cfg.via_level = 150;
    cfg.wire_level = 140;
    cfg.via_epochs = 1;
    cfg.via_patches_per_image = 2;
    cfg.seed = 10;
    const fs::path dir = fresh_dir("low_contrast");
    const DatasetManifest manifest = run_synth(cfg, dir.string());
    const auto via = run_train_via(manifest, cfg, {}, (dir / "via.ckpt").string());
    DetectOptions opts;
    opts.via_checkpoint = via.checkpoint_path;
    opts.out_dir = (dir / "reports").string();
    opts.overlays = false;
    const auto reports = run_detect(manifest, cfg, opts);
    if (reports.size() != 1) {
      detail = "expected one report";
      return false;
    }
    std::ostringstream os;
    os << "v=" << reports[0].v << " w=" << reports[0].w << " flagged="
       << (reports[0].low_contrast ? "yes" : "no");
    detail = os.str();
    return reports[0].low_contrast;
  });

  // 10. full-frame feature + labeling throughput
  run("8192x8192 features and labeling under 60 s", [](std::string& detail) {
    LayoutParams lp;
    const Layout layout = gen_layout(11, 8192, 8192, lp);
    const auto t0 = Clock::now();
    const MultiChannelImage stack = build_stack(layout.wire_mask);
    const LabelMap lm = label_components(layout.wire_mask);
    const double elapsed = seconds_since(t0);
    std::ostringstream os;
    os << elapsed << " s, " << lm.count << " components, " << stack.channels.size()
       << " channels";
    detail = os.str();
    return elapsed < 60.0;
  });

  // 11-13. shared synthetic benchmark: wire classifier, encoding ablation,
  // via translator
  Benchmark bench;
  bool bench_ready = false;
  run("benchmark dataset has the intended error mix", [&](std::string& detail) {
    bench.build();
    int wire_errors = 0, via_errors = 0, held_out_wire = 0;
    for (const auto& img : bench.manifest.images) {
      const ErrorLog log = load_error_log(bench.manifest, img);
      const bool held_out =
          std::find(bench.test_ids.begin(), bench.test_ids.end(), img.id) != bench.test_ids.end();
      for (const auto& e : log.entries) {
        const bool wire = e.kind == ErrorKind::Open || e.kind == ErrorKind::Short;
        wire_errors += wire;
        via_errors += !wire;
        held_out_wire += wire && held_out;
      }
    }
    std::ostringstream os;
    os << wire_errors << " wire / " << via_errors << " via errors, " << held_out_wire
       << " wire errors held out";
    detail = os.str();
    bench_ready = wire_errors >= 4 && via_errors > 0 && held_out_wire >= 2;
    return bench_ready;
  });

  std::map<std::string, PRScore> wire_scores;
  run("wire classifier meets recall/precision on held-out images", [&](std::string& detail) {
    if (!bench_ready) {
      detail = "benchmark unavailable";
      return false;
    }
    RunConfig cfg = bench.cfg;
    cfg.variant = "WVH";
    const fs::path ckpt = fresh_dir("wire_ckpt") / "wvh.ckpt";
    const auto t0 = Clock::now();
    run_train_wire(bench.manifest, cfg, bench.train_ids, ckpt.string());
    const double train_s = seconds_since(t0);
    auto model = load_checkpoint(ckpt.string());
    const PRScore s = bench.score_wire(*model, "WVH");
    wire_scores["WVH"] = s;
    std::ostringstream os;
    os << pr_text(s) << ", trained in " << train_s << " s";
    detail = os.str();
    return s.recall >= 0.85 && s.precision >= 0.85 && train_s <= 1800.0;
  });

  run("combined encoding beats single encodings", [&](std::string& detail) {
    if (!wire_scores.count("WVH")) {
      detail = "no combined-encoding baseline";
      return false;
    }
    for (const std::string variant : {"W", "VH"}) {
      RunConfig cfg = bench.cfg;
      cfg.variant = variant;
      const fs::path ckpt = fresh_dir("wire_ckpt_" + variant) / "model.ckpt";
      run_train_wire(bench.manifest, cfg, bench.train_ids, ckpt.string());
      auto model = load_checkpoint(ckpt.string());
      wire_scores[variant] = bench.score_wire(*model, variant);
    }
    const auto sum = [&](const std::string& v) {
      return wire_scores[v].recall + wire_scores[v].precision;
    };
    std::ostringstream os;
    os << "WVH " << pr_text(wire_scores["WVH"]) << "; W " << pr_text(wire_scores["W"]) << "; VH "
       << pr_text(wire_scores["VH"]);
    detail = os.str();
    return sum("WVH") >= sum("W") && sum("WVH") >= sum("VH");
  });

  run("via detector meets recall/precision on held-out images", [&](std::string& detail) {
    if (!bench_ready) {
      detail = "benchmark unavailable";
      return false;
    }
    const fs::path ckpt = fresh_dir("via_ckpt") / "via.ckpt";
    const auto t0 = Clock::now();
    run_train_via(bench.manifest, bench.cfg, bench.train_ids, ckpt.string());
    const double train_s = seconds_since(t0);
    auto model = load_checkpoint(ckpt.string());
    PRScore total;
    const PatchGrid grid =
        tile(bench.cfg.image_size, bench.cfg.image_size, bench.cfg.patch_size, bench.cfg.stride);
    for (const auto& id : bench.test_ids) {
      const ManifestImage& img = bench.manifest.find(id);
      const ErrorReport rep = detect_via_image(bench.manifest, img, *model, bench.cfg);
      const PRScore s =
          score_detections(rep, load_error_log(bench.manifest, img), ScoreMode::ViaRegion, grid);
      total.tp += s.tp;
      total.fp += s.fp;
      total.fn += s.fn;
    }
    total.finalize();
    std::ostringstream os;
    os << pr_text(total) << ", trained in " << train_s << " s";
    detail = os.str();
    return total.recall >= 0.90 && total.precision >= 0.85 && train_s <= 1800.0;
  });

  std::printf("%s: %d check(s) failed\n", failures ? "RESULT FAIL" : "RESULT PASS", failures);
  return failures ? 1 : 0;
}
