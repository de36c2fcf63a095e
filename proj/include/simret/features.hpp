#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "simret/raster.hpp"

namespace simret {

inline constexpr int kDescriptorDim = 64;

// Bump when the descriptor geometry changes; feature caches key on it.
inline constexpr const char* kDescriptorAlgoVersion = "surf-grid/1";

struct Descriptor {
    std::array<double, kDescriptorDim> v{};
    double x = 0;
    double y = 0;
    double scale = 0;            // patch side in pixels
    double orientation_deg = 0;  // 0 in upright mode
    double strength = 0;         // pre-normalization vector norm
};

struct FeatureSet {
    std::string image_id;
    std::vector<Descriptor> descriptors;
};

struct ExtractorConfig {
    int grid_spacing = 8;
    std::vector<int> scales{32, 64, 96, 128};
    bool upright = true;
    double strongest_fraction = 0.8;

    void validate() const;  // throws std::invalid_argument
    // Stable textual encoding of every field, used for cache keys.
    std::string cache_key_material() const;
};

// One descriptor per (grid point, scale) whose patch lies fully inside the
// image; row-major over grid points, then ascending scale. An image smaller
// than the smallest scale yields an empty set (warned on stderr).
FeatureSet extract_grid(const GrayRaster& r, const ExtractorConfig& cfg);

// Descriptor for an s-sized patch centered at (cx, cy), sampling axes rotated
// by orientation_deg. Centers need not be integral.
Descriptor compute_descriptor(const IntegralImage& ii, double cx, double cy,
                              int scale, double orientation_deg);

// Dominant gradient direction (degrees, counter-clockwise as displayed) from
// Haar responses in a circular neighborhood of radius 6*(scale/16), scanned
// by a sliding 60 degree window. Flat neighborhoods return 0.
double assign_orientation(const IntegralImage& ii, double x, double y, int scale);

// Keeps the ceil(fraction*n) highest-strength descriptors, ties broken by
// original position; output preserves original relative order.
FeatureSet select_strongest(const FeatureSet& fs, double fraction);

// Rounds every stored value through 32-bit floats, matching what a
// serialize/deserialize round trip produces.
void canonicalize_f32(FeatureSet& fs);

std::string serialize_features(const FeatureSet& fs);
FeatureSet deserialize_features(const std::string& bytes);
std::string features_to_text(const FeatureSet& fs);

}  // namespace simret
