#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "icsv/raster.hpp"

namespace icsv {

enum class ErrorKind { Open, Short, ViaMiss, ViaExtra };

const char* error_kind_name(ErrorKind kind);
ErrorKind parse_error_kind(const std::string& name);

struct ErrorEntry {
  ErrorKind kind;
  Box bbox;

  bool operator==(const ErrorEntry&) const = default;
};

struct ErrorLog {
  std::vector<ErrorEntry> entries;
};

/// Patch origins of a grid whose patch rectangle intersects the box.
std::vector<std::pair<int, int>> affected_origins(const Box& box, const PatchGrid& grid);

/// Manhattan single-layer layout: horizontal tracks with vertical stubs,
/// vias as wire_width squares centered on track wires.
struct Layout {
  BinaryMask wire_mask;
  BinaryMask via_mask;
  int track_pitch = 0;
  int wire_width = 0;
  std::vector<int> track_centers;  // y of each track centerline
};

struct LayoutParams {
  int pitch = 32;
  int wire_width = 8;
  double density = 0.7;      // probability a candidate segment is drawn
  double stub_density = 0.3; // probability of a stub between adjacent tracks
  double via_density = 0.5;  // probability of a via per candidate site
  int border = 72;           // keep-out from the image border
};

struct RenderParams {
  std::uint8_t via_level = 220;
  std::uint8_t wire_level = 140;
  std::uint8_t bg_level = 40;
  double noise_sigma = 6.0;
  int blur_radius = 1;
  double illumination_tilt = 0.0;  // intensity delta across image width
};

enum class DegradeKind { Contamination, Exposure };

Layout gen_layout(std::uint64_t seed, int width, int height, const LayoutParams& params);

GrayImage render_sem(const Layout& layout, const RenderParams& rp, std::uint64_t seed);

/// Returns the corrupted wire mask plus the log of injected errors.
/// Injected regions are pairwise disjoint and kept >= border px from the edge.
std::pair<BinaryMask, ErrorLog> inject_wire_errors(const Layout& layout, int n_open, int n_short,
                                                   std::uint64_t seed, int border = 72);

std::pair<BinaryMask, ErrorLog> inject_via_errors(const Layout& layout, int n_miss, int n_extra,
                                                  std::uint64_t seed, int border = 72);

GrayImage degrade(const GrayImage& img, DegradeKind kind, double severity, std::uint64_t seed);

}  // namespace icsv
