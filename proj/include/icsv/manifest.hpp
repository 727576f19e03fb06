#pragma once

#include <string>
#include <vector>

#include "icsv/raster.hpp"

namespace icsv {

struct ManifestImage {
  std::string id;
  std::string osem;
  std::string w_gt;
  std::string v_gt;
  std::string w_err;
  std::string v_err;
  std::string errors;  // errors.json
};

/// Dataset index; all paths are relative to the manifest's directory.
struct DatasetManifest {
  std::vector<ManifestImage> images;
  int patch_size = 256;
  int nominal_via_size = 8;
  std::string base_dir;  // set on load, not serialized

  std::string resolve(const std::string& rel) const;
  const ManifestImage& find(const std::string& id) const;
};

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& manifest, const std::string& path);

/// Checks every referenced file exists and that rasters of one image share
/// dimensions; throws naming the offending path.
void validate_manifest(const DatasetManifest& manifest);

}  // namespace icsv
