#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace icsv {

/// Thrown for contract violations (bad arguments, malformed files).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Single-channel 8-bit raster, row-major, origin top-left (x = column, y = row).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }

  bool operator==(const GrayImage&) const = default;
};

/// Foreground/background raster; data holds 0 or 1.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }
  std::size_t foreground_count() const;

  bool operator==(const BinaryMask&) const = default;
};

/// Ordered stack of 1..3 equally sized gray channels.
struct MultiChannelImage {
  std::vector<GrayImage> channels;

  int width() const { return channels.empty() ? 0 : channels.front().width; }
  int height() const { return channels.empty() ? 0 : channels.front().height; }
  void validate() const;

  bool operator==(const MultiChannelImage&) const = default;
};

/// Inclusive rectangle in pixel coordinates.
struct Box {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;

  bool empty() const { return x1 < x0 || y1 < y0; }
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool intersects(const Box& o) const {
    return !empty() && !o.empty() && x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
  void expand_to(int x, int y) {
    if (empty()) {
      x0 = x1 = x;
      y0 = y1 = y;
    } else {
      if (x < x0) x0 = x;
      if (x > x1) x1 = x;
      if (y < y0) y0 = y;
      if (y > y1) y1 = y;
    }
  }

  bool operator==(const Box&) const = default;
};

/// Sliding-window origins over an image. The final row/column is clamped so
/// every patch stays in-bounds; the union of patches covers the image.
struct PatchGrid {
  int patch_size = 0;
  int stride = 0;
  std::vector<std::pair<int, int>> origins;  // (x, y) top-left corners
};

GrayImage load_gray(const std::string& path);
void save_gray(const GrayImage& img, const std::string& path);

// Masks are stored as 0/255 images and thresholded at >127 on load.
BinaryMask load_mask(const std::string& path);
void save_mask(const BinaryMask& mask, const std::string& path);

GrayImage mask_to_gray(const BinaryMask& mask);  // 0/255 encoding
BinaryMask gray_to_mask(const GrayImage& img);   // threshold >127

PatchGrid tile(int width, int height, int patch_size, int stride);

GrayImage extract_patch(const GrayImage& img, int x, int y, int size);
BinaryMask extract_patch(const BinaryMask& mask, int x, int y, int size);
MultiChannelImage extract_patch(const MultiChannelImage& img, int x, int y, int size);

}  // namespace icsv
