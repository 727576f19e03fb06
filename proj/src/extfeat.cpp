#include "icsv/extfeat.hpp"

#include <algorithm>
#include <cmath>

namespace icsv {

ExtensionMap h_extension(const BinaryMask& mask) {
  ExtensionMap ext;
  ext.width = mask.width;
  ext.height = mask.height;
  ext.values.assign(mask.data.size(), 0);
  for (int y = 0; y < mask.height; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * mask.width;
    int x = 0;
    while (x < mask.width) {
      if (!mask.data[row + x]) {
        ++x;
        continue;
      }
      int end = x;
      while (end < mask.width && mask.data[row + end]) ++end;
      const std::int32_t len = end - x;
      for (int i = x; i < end; ++i) ext.values[row + i] = len;
      x = end;
    }
  }
  return ext;
}

ExtensionMap v_extension(const BinaryMask& mask) {
  ExtensionMap ext;
  ext.width = mask.width;
  ext.height = mask.height;
  ext.values.assign(mask.data.size(), 0);
  for (int x = 0; x < mask.width; ++x) {
    int y = 0;
    while (y < mask.height) {
      if (!mask.at(x, y)) {
        ++y;
        continue;
      }
      int end = y;
      while (end < mask.height && mask.at(x, end)) ++end;
      const std::int32_t len = end - y;
      for (int i = y; i < end; ++i) ext.values[static_cast<std::size_t>(i) * mask.width + x] = len;
      y = end;
    }
  }
  return ext;
}

GrayImage normalize_extension(const ExtensionMap& ext) {
  GrayImage img(ext.width, ext.height);
  const std::int32_t max_val =
      ext.values.empty() ? 0 : *std::max_element(ext.values.begin(), ext.values.end());
  if (max_val == 0) return img;
  for (std::size_t i = 0; i < ext.values.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(
        std::floor(255.0 * ext.values[i] / max_val + 0.5));  // round half up
  return img;
}

MultiChannelImage build_stack(const BinaryMask& wire) {
  MultiChannelImage out;
  out.channels.push_back(mask_to_gray(wire));
  out.channels.push_back(normalize_extension(v_extension(wire)));
  out.channels.push_back(normalize_extension(h_extension(wire)));
  return out;
}

MultiChannelImage encode_variant(const BinaryMask& wire, EncodeVariant variant) {
  switch (variant) {
    case EncodeVariant::W: {
      MultiChannelImage out;
      out.channels.push_back(mask_to_gray(wire));
      return out;
    }
    case EncodeVariant::VH: {
      MultiChannelImage out;
      out.channels.push_back(normalize_extension(v_extension(wire)));
      out.channels.push_back(normalize_extension(h_extension(wire)));
      return out;
    }
    case EncodeVariant::WVH:
      return build_stack(wire);
  }
  throw Error("encode_variant: unknown variant");
}

EncodeVariant parse_variant(const std::string& name) {
  if (name == "W" || name == "w") return EncodeVariant::W;
  if (name == "VH" || name == "vh") return EncodeVariant::VH;
  if (name == "WVH" || name == "wvh") return EncodeVariant::WVH;
  throw Error("unknown encoding variant: " + name);
}

const char* variant_name(EncodeVariant variant) {
  switch (variant) {
    case EncodeVariant::W:
      return "W";
    case EncodeVariant::VH:
      return "VH";
    case EncodeVariant::WVH:
      return "WVH";
  }
  return "?";
}

int variant_channels(EncodeVariant variant) {
  switch (variant) {
    case EncodeVariant::W:
      return 1;
    case EncodeVariant::VH:
      return 2;
    case EncodeVariant::WVH:
      return 3;
  }
  return 0;
}

}  // namespace icsv
