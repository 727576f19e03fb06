#include "icsv/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "icsv/serialize.hpp"

namespace icsv {

namespace fs = std::filesystem;

std::string DatasetManifest::resolve(const std::string& rel) const {
  if (rel.empty()) return rel;
  const fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(base_dir) / p).string();
}

const ManifestImage& DatasetManifest::find(const std::string& id) const {
  for (const auto& img : images)
    if (img.id == id) return img;
  throw Error("manifest: no image with id '" + id + "'");
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest: " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("malformed manifest JSON: " + path);

  DatasetManifest m;
  m.patch_size = j.at("patch_size");
  m.nominal_via_size = j.at("nominal_via_size");
  for (const auto& img : j.at("images")) {
    ManifestImage mi;
    mi.id = img.at("id");
    mi.osem = img.at("osem");
    mi.w_gt = img.at("w_gt");
    mi.v_gt = img.at("v_gt");
    mi.w_err = img.at("w_err");
    mi.v_err = img.at("v_err");
    mi.errors = img.at("errors");
    m.images.push_back(std::move(mi));
  }
  m.base_dir = fs::absolute(fs::path(path)).parent_path().string();
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  Json j;
  j["patch_size"] = manifest.patch_size;
  j["nominal_via_size"] = manifest.nominal_via_size;
  Json images = Json::array();
  for (const auto& img : manifest.images)
    images.push_back({{"id", img.id},
                      {"osem", img.osem},
                      {"w_gt", img.w_gt},
                      {"v_gt", img.v_gt},
                      {"w_err", img.w_err},
                      {"v_err", img.v_err},
                      {"errors", img.errors}});
  j["images"] = images;
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

void validate_manifest(const DatasetManifest& manifest) {
  for (const auto& img : manifest.images) {
    int width = -1, height = -1;
    for (const std::string& rel : {img.osem, img.w_gt, img.v_gt, img.w_err, img.v_err}) {
      const std::string p = manifest.resolve(rel);
      if (!fs::exists(p)) throw Error("manifest: missing file " + p);
      const GrayImage g = load_gray(p);
      if (width < 0) {
        width = g.width;
        height = g.height;
      } else if (g.width != width || g.height != height) {
        throw Error("manifest: dimension mismatch in " + p);
      }
    }
    const std::string errs = manifest.resolve(img.errors);
    if (!fs::exists(errs)) throw Error("manifest: missing file " + errs);
    if (width < manifest.patch_size || height < manifest.patch_size)
      throw Error("manifest: image " + img.id + " smaller than patch_size");
  }
}

}  // namespace icsv
