#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "simret/features.hpp"
#include "simret/index.hpp"
#include "simret/ingest.hpp"
#include "simret/raster.hpp"
#include "simret/rerank.hpp"

namespace simret {

// Pinned pseudorandom generator identity, recorded in every report.
inline constexpr const char* kRngName = "mt19937_64-u53/v1";

struct DatasetManifest {
    std::string base_dir;
    std::vector<SpaceDescriptor> spaces;            // roots resolved absolute
    std::map<std::string, std::string> splits;      // pair_id -> train/test/val
    int patch_size = 256;

    const SpaceDescriptor& space(const std::string& name) const;
    // Split of a pair; pairs without an entry default to "test".
    std::string split_of(const std::string& pair_id) const;
};

// JSON manifest: {"spaces": [{"name","root","preprocessing","expected_count"}],
// "splits": {...}, "patch_size": N}. Roots are relative to the manifest file.
DatasetManifest load_manifest(const std::string& path);

// Deterministic per-pair rigid perturbations: rotation ~ U(-max_rot, max_rot),
// tx, ty ~ U(-max_trans, max_trans), drawn from kRngName seeded with
// splitmix64(seed ^ fnv1a64(pair_id)).
std::map<std::string, RigidTransform> make_transforms(
    const std::vector<std::string>& pair_ids, std::uint64_t seed,
    double max_rot = 30.0, double max_trans = 100.0);

struct BenchConfig {
    ExtractorConfig extractor;
    int K_vocab = 20000;
    std::uint64_t seed = 1;
    int max_iters = 100;
    std::vector<int> K_list{1, 5, 10, 15};
    std::vector<int> rerank_list{0, 15, 30};
    double max_rot = 30.0;
    double max_trans = 100.0;
    bool rerank_mean = false;
};

struct CellSpec {
    std::string repo_space;
    std::string query_space;
    bool query_transformed = false;
    bool query_is_patch = false;  // center crop to the manifest patch size

    std::string key() const;  // stable label used in report rows
};

struct QueryOutcome {
    std::string query_id;
    int rank_before = 0;            // 1-based rank of the true match
    std::map<int, int> rank_after;  // rerank N -> rank (N clamped to repo size)
};

struct CellOutcome {
    CellSpec spec;
    int repo_size = 0;
    std::vector<QueryOutcome> queries;
};

struct EvalReport {
    std::vector<CellOutcome> cells;
    BenchConfig config;
    std::string rng_name = kRngName;
};

// Success percentage for one cell at cutoff K; rerank_n 0 reads the
// first-stage ranks.
double cell_topk(const CellOutcome& cell, int K, int rerank_n);

// Rank histogram for one cell: counts[r-1] = queries whose match ranked r.
std::vector<int> cell_rank_histogram(const CellOutcome& cell, int rerank_n);

class BenchRunner {
public:
    BenchRunner(DatasetManifest manifest, BenchConfig config,
                FeatureCache* cache = nullptr);

    CellOutcome run_cell(const CellSpec& spec);
    EvalReport run_matrix(const std::vector<std::string>& spaces);

    const std::vector<GrayRaster>& space_rasters(const std::string& name);
    const std::map<std::string, RigidTransform>& transforms();

private:
    struct SpaceState {
        std::vector<GrayRaster> rasters;          // test split, sorted by id
        std::vector<FeatureSet> features;         // unfiltered, order matches
        std::unique_ptr<RetrievalIndex> index;    // built on demand
    };
    SpaceState& state(const std::string& name);

    DatasetManifest manifest_;
    BenchConfig config_;
    FeatureCache* cache_;
    std::map<std::string, SpaceState> spaces_;
    std::map<std::string, RigidTransform> transforms_;
    bool transforms_ready_ = false;
    PatchFeatureMemo patch_memo_;
};

struct EquivInput {
    std::string pair_id;
    const GrayRaster* a = nullptr;
    const GrayRaster* b = nullptr;  // related to a by t
    RigidTransform t;
};

struct EquivRow {
    std::string pair_id;
    double r = 0;
};

struct EquivSummary {
    std::vector<EquivRow> rows;
    double mean = 0, min_r = 0, max_r = 0;
};

// Overlap correlation per pair plus summary statistics.
EquivSummary equivariance_report(const std::vector<EquivInput>& inputs);

// CSV emission. All numeric formatting is fixed so reruns are byte-identical.
std::string report_to_csv(const EvalReport& report);
std::string rank_dump_to_csv(const EvalReport& report);
std::string rank_histogram_to_csv(const EvalReport& report);
std::string equivariance_to_csv(const EquivSummary& summary);

}  // namespace simret
