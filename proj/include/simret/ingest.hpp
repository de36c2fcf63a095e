#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simret/features.hpp"
#include "simret/raster.hpp"

namespace simret {

struct SpaceDescriptor {
    std::string name;
    std::string root;
    std::vector<std::string> preprocessing;  // ordered: "none" | "log_transform"
    std::optional<int> expected_count;
};

// Loads every supported raster under sd.root sorted by filename (bytewise),
// applies the preprocessing chain, and assigns ids from file stems.
std::vector<GrayRaster> scan_space(const SpaceDescriptor& sd);

GrayRaster apply_preprocessing(GrayRaster r, const std::vector<std::string>& steps);

// Content-addressed feature cache. The key covers the raster's pixel content,
// dimensions, and the full extractor config including the descriptor
// algorithm version, so any change forces a recompute. Entries are written
// atomically; corrupted entries (checksum mismatch) are recomputed in place.
class FeatureCache {
public:
    // Root resolution order: explicit argument, $SIMRET_CACHE_DIR, then
    // ".simret-cache" in the working directory.
    explicit FeatureCache(std::string root = {}, bool enabled = true);

    static std::string default_root();

    FeatureSet get(const std::string& space, const GrayRaster& r,
                   const ExtractorConfig& cfg);

    // Number of fresh extractions performed (cache misses + disabled calls).
    long extractions() const { return extractions_; }
    const std::string& root() const { return root_; }
    bool enabled() const { return enabled_; }

private:
    std::string entry_path(const std::string& space, const GrayRaster& r,
                           const ExtractorConfig& cfg) const;

    std::string root_;
    bool enabled_;
    long extractions_ = 0;
};

}  // namespace simret
