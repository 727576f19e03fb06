#include "icsv/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace icsv {

std::size_t BinaryMask::foreground_count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

void MultiChannelImage::validate() const {
  if (channels.empty() || channels.size() > 3)
    throw Error("MultiChannelImage: channel count must be 1..3");
  for (const auto& c : channels)
    if (c.width != channels.front().width || c.height != channels.front().height)
      throw Error("MultiChannelImage: channel dimensions differ");
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_signature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {0};
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

GrayImage load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("png read failure: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 8 || color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (depth != 8) throw Error("unsupported depth (" + std::to_string(depth) + "-bit): " + path);
    throw Error("unsupported channel count (expect single-channel gray): " + path);
  }

  GrayImage img(static_cast<int>(png_get_image_width(png, info)),
                static_cast<int>(png_get_image_height(png, info)));
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = img.data.data() + static_cast<std::size_t>(y) * img.width;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void save_png(const GrayImage& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error("cannot write " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png write failure: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

GrayImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw Error("not a P5 PGM: " + path);

  auto next_token = [&in, &path]() -> long {
    // skips whitespace and '#' comments
    for (;;) {
      int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    if (!in) throw Error("malformed PGM header: " + path);
    return v;
  };

  const long w = next_token();
  const long h = next_token();
  const long maxval = next_token();
  if (maxval > 255) throw Error("unsupported depth (16-bit PGM): " + path);
  in.get();  // single whitespace after maxval
  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size()))
    throw Error("truncated PGM payload: " + path);
  return img;
}

void save_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw Error("I/O failure writing " + path);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

GrayImage load_gray(const std::string& path) {
  if (has_png_signature(path)) return load_png(path);
  return load_pgm(path);
}

void save_gray(const GrayImage& img, const std::string& path) {
  if (ends_with(path, ".pgm")) {
    save_pgm(img, path);
  } else {
    save_png(img, path);
  }
}

GrayImage mask_to_gray(const BinaryMask& mask) {
  GrayImage img(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.data.size(); ++i) img.data[i] = mask.data[i] ? 255 : 0;
  return img;
}

BinaryMask gray_to_mask(const GrayImage& img) {
  BinaryMask mask(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) mask.data[i] = img.data[i] > 127 ? 1 : 0;
  return mask;
}

BinaryMask load_mask(const std::string& path) { return gray_to_mask(load_gray(path)); }

void save_mask(const BinaryMask& mask, const std::string& path) { save_gray(mask_to_gray(mask), path); }

PatchGrid tile(int width, int height, int patch_size, int stride) {
  if (patch_size <= 0 || stride <= 0 || stride > patch_size)
    throw Error("tile: require 1 <= stride <= patch_size");
  if (patch_size > width || patch_size > height)
    throw Error("tile: patch_size exceeds image dimension");

  auto axis_origins = [&](int extent) {
    std::vector<int> out;
    for (int o = 0;; o += stride) {
      if (o + patch_size >= extent) {
        out.push_back(extent - patch_size);  // clamped final origin
        break;
      }
      out.push_back(o);
    }
    return out;
  };

  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.stride = stride;
  const auto xs = axis_origins(width);
  const auto ys = axis_origins(height);
  grid.origins.reserve(xs.size() * ys.size());
  for (int y : ys)
    for (int x : xs) grid.origins.emplace_back(x, y);
  return grid;
}

namespace {
template <typename Raster>
Raster extract_impl(const Raster& img, int x, int y, int size) {
  if (x < 0 || y < 0 || size <= 0 || x + size > img.width || y + size > img.height)
    throw Error("extract_patch: out of bounds");
  Raster out;
  out.width = size;
  out.height = size;
  out.data.resize(static_cast<std::size_t>(size) * size);
  for (int j = 0; j < size; ++j)
    std::memcpy(out.data.data() + static_cast<std::size_t>(j) * size,
                img.data.data() + static_cast<std::size_t>(y + j) * img.width + x,
                static_cast<std::size_t>(size));
  return out;
}
}  // namespace

GrayImage extract_patch(const GrayImage& img, int x, int y, int size) {
  return extract_impl(img, x, y, size);
}

BinaryMask extract_patch(const BinaryMask& mask, int x, int y, int size) {
  return extract_impl(mask, x, y, size);
}

MultiChannelImage extract_patch(const MultiChannelImage& img, int x, int y, int size) {
  MultiChannelImage out;
  out.channels.reserve(img.channels.size());
  for (const auto& c : img.channels) out.channels.push_back(extract_patch(c, x, y, size));
  return out;
}

}  // namespace icsv
