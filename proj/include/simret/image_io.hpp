#pragma once

#include <optional>
#include <string>

#include "simret/raster.hpp"

namespace simret {

/// Loads a PNG (8/16-bit gray, 8-bit RGB) or PGM "P5" (8/16-bit) file.
/// Samples scale to [0,1] by the format's maximum value; RGB converts to
/// equal-weight luma. The id defaults to the file stem.
/// bit_depth_hint, when given, must match the file's sample depth.
GrayRaster load_raster(const std::string& path,
                       std::optional<int> bit_depth_hint = std::nullopt);

/// Writers used by tools and tests. Intensities quantize to the target depth.
void save_pgm(const GrayRaster& r, const std::string& path, int bit_depth = 8);
void save_png_gray(const GrayRaster& r, const std::string& path,
                   int bit_depth = 8);
void save_png_rgb(const GrayRaster& red, const GrayRaster& green,
                  const GrayRaster& blue, const std::string& path);

/// True if the filename extension is one load_raster understands.
bool is_supported_raster(const std::string& path);

/// Filename without directory or extension.
std::string file_stem(const std::string& path);

}  // namespace simret
