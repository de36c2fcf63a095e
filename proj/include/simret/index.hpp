#pragma once

#include <map>
#include <string>
#include <vector>

#include "simret/bow.hpp"
#include "simret/features.hpp"
#include "simret/raster.hpp"

namespace simret {

struct RankedItem {
    std::string image_id;
    double similarity = 0;
};

// Ordered by similarity descending, ties by ascending image_id.
struct RankedList {
    std::string query_id;
    std::vector<RankedItem> items;
};

struct RetrievalIndex {
    Vocabulary vocabulary;
    std::vector<BowHistogram> entries;
    std::string repo_tag;
};

// Featurizes every raster (extract, strongest-fraction selection, quantize)
// and stores one histogram per image. When both tags are nonempty they must
// match unless allow_tag_mismatch is set.
RetrievalIndex build_index(const std::vector<GrayRaster>& rasters,
                           const ExtractorConfig& cfg, const Vocabulary& vocab,
                           const std::string& repo_tag = {},
                           bool allow_tag_mismatch = false);

// Same, from already-extracted (unfiltered) feature sets.
RetrievalIndex build_index_from_features(const std::vector<FeatureSet>& sets,
                                         const ExtractorConfig& cfg,
                                         const Vocabulary& vocab,
                                         const std::string& repo_tag = {},
                                         bool allow_tag_mismatch = false);

// Ranks all entries against the featurized query, returning the best top_n
// (clamped to the repository size).
RankedList query(const RetrievalIndex& idx, const GrayRaster& q,
                 const ExtractorConfig& cfg, int top_n);

// Ranking core shared by query and the benchmark: scores a prebuilt
// histogram against every entry.
RankedList rank_histogram(const RetrievalIndex& idx, const BowHistogram& qh,
                          int top_n);

// Percentage of queries whose truth image appears within the first K items.
double topk_success(const std::vector<RankedList>& ranked,
                    const std::map<std::string, std::string>& truth, int K);

void save_index(const RetrievalIndex& idx, const std::string& vocab_path,
                const std::string& table_path);
RetrievalIndex load_index(const std::string& vocab_path,
                          const std::string& table_path);

std::string ranked_to_csv(const RankedList& r);
RankedList ranked_from_csv(const std::string& text);

}  // namespace simret
