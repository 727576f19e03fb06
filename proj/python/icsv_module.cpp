#include <algorithm>

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icsv/conneval.hpp"
#include "icsv/extfeat.hpp"
#include "icsv/neural.hpp"
#include "icsv/pipeline.hpp"
#include "icsv/regions.hpp"
#include "icsv/synthgen.hpp"
#include "icsv/viadetect.hpp"
#include "icsv/wiredetect.hpp"

namespace py = pybind11;
using namespace icsv;

namespace {

BinaryMask mask_from_array(const py::array_t<std::uint8_t, py::array::c_style>& arr) {
  if (arr.ndim() != 2) throw Error("expected a 2-d uint8 array");
  BinaryMask mask(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  const auto* p = arr.data();
  for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = p[i] ? 1 : 0;
  return mask;
}

GrayImage gray_from_array(const py::array_t<std::uint8_t, py::array::c_style>& arr) {
  if (arr.ndim() != 2) throw Error("expected a 2-d uint8 array");
  GrayImage img(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)));
  std::copy(arr.data(), arr.data() + img.data.size(), img.data.begin());
  return img;
}

py::array_t<std::uint8_t> array_from_gray(const GrayImage& img) {
  py::array_t<std::uint8_t> arr(std::vector<py::ssize_t>{img.height, img.width});
  std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
  return arr;
}

py::array_t<std::uint8_t> array_from_mask(const BinaryMask& mask) {
  py::array_t<std::uint8_t> arr(std::vector<py::ssize_t>{mask.height, mask.width});
  auto* p = arr.mutable_data();
  for (std::size_t i = 0; i < mask.data.size(); ++i) p[i] = mask.data[i] ? 255 : 0;
  return arr;
}

py::array_t<std::int32_t> array_from_labels(const LabelMap& lm) {
  py::array_t<std::int32_t> arr(std::vector<py::ssize_t>{lm.height, lm.width});
  std::copy(lm.labels.begin(), lm.labels.end(), arr.mutable_data());
  return arr;
}

py::array_t<std::int32_t> array_from_ext(const ExtensionMap& ext) {
  py::array_t<std::int32_t> arr(std::vector<py::ssize_t>{ext.height, ext.width});
  std::copy(ext.values.begin(), ext.values.end(), arr.mutable_data());
  return arr;
}

py::array_t<std::uint8_t> array_from_stack(const MultiChannelImage& stack) {
  const auto c = static_cast<py::ssize_t>(stack.channels.size());
  py::array_t<std::uint8_t> arr(
      std::vector<py::ssize_t>{c, static_cast<py::ssize_t>(stack.height()),
                               static_cast<py::ssize_t>(stack.width())});
  auto* p = arr.mutable_data();
  for (const auto& ch : stack.channels) p = std::copy(ch.data.begin(), ch.data.end(), p);
  return arr;
}

RunConfig config_from_dict(const py::dict& overrides) {
  RunConfig cfg;
  for (const auto& item : overrides)
    apply_config_line(cfg, py::str(item.first), py::str(item.second));
  cfg.validate();
  return cfg;
}

py::dict entry_to_dict(const ErrorEntry& e) {
  py::dict d;
  d["kind"] = error_kind_name(e.kind);
  d["bbox"] = py::make_tuple(e.bbox.x0, e.bbox.y0, e.bbox.x1, e.bbox.y1);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "segmentation connectivity checking: core operations";

  py::register_exception<Error>(m, "IcsvError");

  // regions
  m.def(
      "label_components",
      [](const py::array_t<std::uint8_t, py::array::c_style>& mask, int connectivity) {
        if (connectivity != 4 && connectivity != 8) throw Error("connectivity must be 4 or 8");
        const LabelMap lm = label_components(
            mask_from_array(mask),
            connectivity == 4 ? Connectivity::Four : Connectivity::Eight);
        return py::make_tuple(array_from_labels(lm), lm.count);
      },
      py::arg("mask"), py::arg("connectivity") = 8,
      "Two-pass connected component labeling; returns (labels, count).");

  // extension features
  m.def(
      "h_extension",
      [](const py::array_t<std::uint8_t, py::array::c_style>& mask) {
        return array_from_ext(h_extension(mask_from_array(mask)));
      },
      py::arg("mask"));
  m.def(
      "v_extension",
      [](const py::array_t<std::uint8_t, py::array::c_style>& mask) {
        return array_from_ext(v_extension(mask_from_array(mask)));
      },
      py::arg("mask"));
  m.def(
      "encode_variant",
      [](const py::array_t<std::uint8_t, py::array::c_style>& mask, const std::string& variant) {
        return array_from_stack(encode_variant(mask_from_array(mask), parse_variant(variant)));
      },
      py::arg("mask"), py::arg("variant") = "WVH",
      "Classifier input stack (channels, height, width) for a wire mask.");

  // synthesis
  py::class_<Layout>(m, "Layout")
      .def_property_readonly("wire_mask", [](const Layout& l) { return array_from_mask(l.wire_mask); })
      .def_property_readonly("via_mask", [](const Layout& l) { return array_from_mask(l.via_mask); })
      .def_readonly("track_pitch", &Layout::track_pitch)
      .def_readonly("wire_width", &Layout::wire_width);

  m.def(
      "gen_layout",
      [](std::uint64_t seed, int width, int height, const py::dict& overrides) {
        return gen_layout(seed, width, height, config_from_dict(overrides).layout_params());
      },
      py::arg("seed"), py::arg("width"), py::arg("height"), py::arg("config") = py::dict());
  m.def(
      "render_sem",
      [](const Layout& layout, std::uint64_t seed, const py::dict& overrides) {
        return array_from_gray(
            render_sem(layout, config_from_dict(overrides).render_params(), seed));
      },
      py::arg("layout"), py::arg("seed"), py::arg("config") = py::dict());
  m.def(
      "inject_wire_errors",
      [](const Layout& layout, int n_open, int n_short, std::uint64_t seed) {
        const auto [mask, log] = inject_wire_errors(layout, n_open, n_short, seed);
        py::list entries;
        for (const auto& e : log.entries) entries.append(entry_to_dict(e));
        return py::make_tuple(array_from_mask(mask), entries);
      },
      py::arg("layout"), py::arg("n_open"), py::arg("n_short"), py::arg("seed"));
  m.def(
      "inject_via_errors",
      [](const Layout& layout, int n_miss, int n_extra, std::uint64_t seed) {
        const auto [mask, log] = inject_via_errors(layout, n_miss, n_extra, seed);
        py::list entries;
        for (const auto& e : log.entries) entries.append(entry_to_dict(e));
        return py::make_tuple(array_from_mask(mask), entries);
      },
      py::arg("layout"), py::arg("n_miss"), py::arg("n_extra"), py::arg("seed"));

  // reconstruction differencing
  m.def(
      "diff_images",
      [](const py::array_t<std::uint8_t, py::array::c_style>& osem,
         const py::array_t<std::uint8_t, py::array::c_style>& rsem) {
        const DiffPair d = diff_images(gray_from_array(osem), gray_from_array(rsem));
        return py::make_tuple(array_from_gray(d.d1), array_from_gray(d.d2));
      },
      py::arg("osem"), py::arg("rsem"),
      "Zero-clamped differences (rsem - osem, osem - rsem).");
  m.def(
      "estimate_vwb",
      [](const py::array_t<std::uint8_t, py::array::c_style>& img,
         const py::array_t<std::uint8_t, py::array::c_style>& wire,
         const py::array_t<std::uint8_t, py::array::c_style>& via) {
        const IntensityTriple t =
            estimate_vwb(gray_from_array(img), mask_from_array(wire), mask_from_array(via));
        py::dict d;
        d["v"] = t.v;
        d["w"] = t.w;
        d["b"] = t.b;
        d["low_contrast"] = t.low_contrast;
        return d;
      },
      py::arg("image"), py::arg("wire_mask"), py::arg("via_mask"));
  m.def(
      "encode_wv",
      [](const py::array_t<std::uint8_t, py::array::c_style>& wire,
         const py::array_t<std::uint8_t, py::array::c_style>& via, double v, double w, double b) {
        IntensityTriple t;
        t.v = v;
        t.w = w;
        t.b = b;
        return array_from_gray(encode_wv(mask_from_array(wire), mask_from_array(via), t));
      },
      py::arg("wire_mask"), py::arg("via_mask"), py::arg("v"), py::arg("w"), py::arg("b"));

  // neural building blocks
  m.def("class_weights", [](std::int64_t p, std::int64_t n) { return class_weights(p, n); },
        py::arg("positives"), py::arg("negatives"));

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def_property_readonly("arch", &Model::arch);
  m.def("load_checkpoint",
        [](const std::string& path) { return std::shared_ptr<Model>(load_checkpoint(path)); },
        py::arg("path"));
  m.def(
      "classify_patches",
      [](Model& model, const py::array_t<std::uint8_t, py::array::c_style>& ew, int patch_size,
         int stride, const std::string& variant) {
        const BinaryMask mask = mask_from_array(ew);
        const PatchGrid grid = tile(mask.width, mask.height, patch_size, stride);
        py::list out;
        for (const auto& v : classify_patches(model, mask, grid, parse_variant(variant))) {
          py::dict d;
          d["x"] = v.x;
          d["y"] = v.y;
          d["p"] = v.p;
          d["n"] = v.n;
          d["positive"] = v.positive();
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("wire_mask"), py::arg("patch_size") = 256,
      py::arg("stride") = 128, py::arg("variant") = "WVH");
  m.def(
      "reconstruct",
      [](Model& model, const py::array_t<std::uint8_t, py::array::c_style>& encoded,
         int patch_size) {
        const GrayImage img = gray_from_array(encoded);
        const PatchGrid grid = tile(img.width, img.height, patch_size, patch_size);
        return array_from_gray(reconstruct(model, img, grid));
      },
      py::arg("model"), py::arg("encoded"), py::arg("patch_size") = 256);

  // pipeline entry points (path based, mirroring the command line)
  m.def(
      "run_synth",
      [](const std::string& out_dir, const py::dict& overrides) {
        const DatasetManifest manifest = run_synth(config_from_dict(overrides), out_dir);
        py::list ids;
        for (const auto& img : manifest.images) ids.append(img.id);
        return ids;
      },
      py::arg("out_dir"), py::arg("config") = py::dict());
  m.def(
      "run_train_wire",
      [](const std::string& manifest_path, const std::string& checkpoint,
         const std::vector<std::string>& image_ids, const py::dict& overrides) {
        const auto out = run_train_wire(load_manifest(manifest_path),
                                        config_from_dict(overrides), image_ids, checkpoint);
        py::dict d;
        d["checkpoint"] = out.checkpoint_path;
        d["loss_curve"] = out.loss_curve;
        d["positives"] = out.positives;
        d["negatives"] = out.negatives;
        return d;
      },
      py::arg("manifest"), py::arg("checkpoint"),
      py::arg("image_ids") = std::vector<std::string>{}, py::arg("config") = py::dict());
  m.def(
      "run_train_via",
      [](const std::string& manifest_path, const std::string& checkpoint,
         const std::vector<std::string>& image_ids, const py::dict& overrides) {
        const auto out = run_train_via(load_manifest(manifest_path), config_from_dict(overrides),
                                       image_ids, checkpoint);
        py::dict d;
        d["checkpoint"] = out.checkpoint_path;
        d["loss_curve"] = out.loss_curve;
        return d;
      },
      py::arg("manifest"), py::arg("checkpoint"),
      py::arg("image_ids") = std::vector<std::string>{}, py::arg("config") = py::dict());
  m.def(
      "run_detect",
      [](const std::string& manifest_path, const std::string& out_dir,
         const std::string& wire_checkpoint, const std::string& via_checkpoint,
         const std::vector<std::string>& image_ids, bool overlays, const py::dict& overrides) {
        DetectOptions opts;
        opts.wire_checkpoint = wire_checkpoint;
        opts.via_checkpoint = via_checkpoint;
        opts.image_ids = image_ids;
        opts.out_dir = out_dir;
        opts.overlays = overlays;
        const auto reports =
            run_detect(load_manifest(manifest_path), config_from_dict(overrides), opts);
        py::list out;
        for (const auto& r : reports) {
          py::dict d;
          d["image_id"] = r.image_id;
          d["num_positive_patches"] =
              std::count_if(r.patch_verdicts.begin(), r.patch_verdicts.end(),
                            [](const PatchVerdict& v) { return v.positive(); });
          py::list dets;
          for (const auto& det : r.detections) {
            py::dict e;
            e["kind"] = error_kind_name(det.kind);
            e["bbox"] = py::make_tuple(det.bbox.x0, det.bbox.y0, det.bbox.x1, det.bbox.y1);
            e["score"] = det.score;
            dets.append(e);
          }
          d["detections"] = dets;
          d["low_contrast"] = r.low_contrast;
          out.append(d);
        }
        return out;
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("wire_checkpoint") = "",
      py::arg("via_checkpoint") = "", py::arg("image_ids") = std::vector<std::string>{},
      py::arg("overlays") = false, py::arg("config") = py::dict());
  m.def(
      "run_eval",
      [](const std::string& manifest_path, const std::string& reports_dir,
         const std::string& out_prefix, const std::vector<std::string>& image_ids,
         const py::dict& overrides) {
        const auto rows = run_eval(load_manifest(manifest_path), config_from_dict(overrides),
                                   reports_dir, image_ids, out_prefix);
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["image"] = r.image;
          d["mode"] = r.mode;
          d["tp"] = r.score.tp;
          d["fp"] = r.score.fp;
          d["fn"] = r.score.fn;
          d["recall"] = r.score.recall;
          d["precision"] = r.score.precision;
          out.append(d);
        }
        return out;
      },
      py::arg("manifest"), py::arg("reports_dir"), py::arg("out_prefix"),
      py::arg("image_ids") = std::vector<std::string>{}, py::arg("config") = py::dict());
}
