#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simret/features.hpp"
#include "simret/index.hpp"
#include "simret/raster.hpp"

namespace simret {

struct PatchGrid {
    int patch = 0;
    int cover_w = 0;
    int cover_h = 0;
    std::vector<std::pair<int, int>> origins;  // row-major
};

// Minimal equidistant covering: per axis of length L, n = ceil(L/patch)
// origins at round(i*(L-patch)/(n-1)); the 2D grid is the product.
PatchGrid patch_grid(int width, int height, int patch);

// Caches per-patch feature sets across rerank calls that share rasters,
// extractor config and patch size (the benchmark reuses candidates heavily).
struct PatchFeatureMemo {
    std::map<std::tuple<std::string, int, int, int>, FeatureSet> by_origin;
};

struct ReRankOptions {
    int K_vocab = 0;            // requested fresh-vocabulary size (clamped)
    std::uint64_t seed = 0;
    int max_iters = 100;
    bool full_image_mode = false;
    bool mean_score = false;    // default scores a candidate by its best patch
    PatchFeatureMemo* memo = nullptr;
};

// Re-orders the top-N of first by a fresh bag-of-words built over the
// candidates' query-sized covering patches; pure permutation of the top-N.
RankedList rerank(const RankedList& first,
                  const std::unordered_map<std::string, const GrayRaster*>& repo,
                  const GrayRaster& q, const ExtractorConfig& cfg, int N,
                  const ReRankOptions& opt);

}  // namespace simret
