#pragma once

#include <cstdint>
#include <vector>

#include "icsv/raster.hpp"

namespace icsv {

/// Per-pixel run lengths; 0 exactly on background pixels.
struct ExtensionMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> values;

  std::int32_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

enum class EncodeVariant { W, VH, WVH };

/// Run length of the maximal contiguous horizontal run through each foreground pixel.
ExtensionMap h_extension(const BinaryMask& mask);
/// Same along the vertical axis.
ExtensionMap v_extension(const BinaryMask& mask);

/// round(255 * value / max) with the maximum taken over the full map.
/// Must be applied to full-image maps before any patch cropping.
GrayImage normalize_extension(const ExtensionMap& ext);

/// Channels (wire as 0/255, normalized V, normalized H).
MultiChannelImage build_stack(const BinaryMask& wire);

/// W -> 1 channel, VH -> 2 channels (V, H), WVH -> build_stack.
MultiChannelImage encode_variant(const BinaryMask& wire, EncodeVariant variant);

EncodeVariant parse_variant(const std::string& name);
const char* variant_name(EncodeVariant variant);
int variant_channels(EncodeVariant variant);

}  // namespace icsv
