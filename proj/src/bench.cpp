#include "simret/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "simret/binio.hpp"
#include "simret/error.hpp"
#include "simret/hash.hpp"

namespace simret {

namespace fs = std::filesystem;
using nlohmann::json;

const SpaceDescriptor& DatasetManifest::space(const std::string& name) const {
    for (const SpaceDescriptor& sd : spaces)
        if (sd.name == name) return sd;
    throw DataError("manifest has no space named '" + name + "'");
}

std::string DatasetManifest::split_of(const std::string& pair_id) const {
    const auto it = splits.find(pair_id);
    return it == splits.end() ? "test" : it->second;
}

DatasetManifest load_manifest(const std::string& path) {
    json j;
    try {
        j = json::parse(binio::read_file(path));
    } catch (const json::exception& e) {
        throw DataError("manifest '" + path + "': " + e.what());
    }

    DatasetManifest m;
    m.base_dir = fs::absolute(fs::path(path)).parent_path().string();
    try {
        for (const json& js : j.at("spaces")) {
            SpaceDescriptor sd;
            sd.name = js.at("name").get<std::string>();
            fs::path root = js.at("root").get<std::string>();
            if (root.is_relative()) root = fs::path(m.base_dir) / root;
            sd.root = root.string();
            if (js.contains("preprocessing"))
                sd.preprocessing = js["preprocessing"].get<std::vector<std::string>>();
            if (js.contains("expected_count"))
                sd.expected_count = js["expected_count"].get<int>();
            m.spaces.push_back(std::move(sd));
        }
        if (j.contains("splits"))
            m.splits = j["splits"].get<std::map<std::string, std::string>>();
        m.patch_size = j.value("patch_size", 256);
    } catch (const json::exception& e) {
        throw DataError("manifest '" + path + "': " + e.what());
    }

    if (m.spaces.empty()) throw DataError("manifest declares no spaces");
    std::set<std::string> names;
    for (const SpaceDescriptor& sd : m.spaces)
        if (!names.insert(sd.name).second)
            throw DataError("manifest declares space '" + sd.name + "' twice");
    for (const auto& [id, split] : m.splits)
        if (split != "train" && split != "test" && split != "val")
            throw DataError("manifest split for '" + id + "' must be train/test/val");
    if (m.patch_size < 1) throw DataError("manifest patch_size must be >= 1");
    return m;
}

namespace {

double u53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

RigidTransform derive_transform(std::uint64_t seed, const std::string& pair_id,
                                double max_rot, double max_trans) {
    std::mt19937_64 rng(splitmix64(seed ^ fnv1a64(pair_id)));
    RigidTransform t;
    t.rotation_deg = (2.0 * u53(rng) - 1.0) * max_rot;
    t.tx = (2.0 * u53(rng) - 1.0) * max_trans;
    t.ty = (2.0 * u53(rng) - 1.0) * max_trans;
    return t;
}

}  // namespace

std::map<std::string, RigidTransform> make_transforms(
    const std::vector<std::string>& pair_ids, std::uint64_t seed, double max_rot,
    double max_trans) {
    std::map<std::string, RigidTransform> out;
    for (const std::string& id : pair_ids)
        out[id] = derive_transform(seed, id, max_rot, max_trans);
    return out;
}

std::string CellSpec::key() const {
    return "repo=" + repo_space + "|query=" + query_space +
           "|transformed=" + (query_transformed ? "1" : "0") +
           "|patch=" + (query_is_patch ? "1" : "0");
}

double cell_topk(const CellOutcome& cell, int K, int rerank_n) {
    if (cell.queries.empty()) throw std::invalid_argument("cell has no queries");
    std::size_t hits = 0;
    for (const QueryOutcome& q : cell.queries) {
        int rank = q.rank_before;
        if (rerank_n != 0) {
            const auto it = q.rank_after.find(rerank_n);
            if (it == q.rank_after.end())
                throw std::invalid_argument("cell has no rerank data for N=" +
                                            std::to_string(rerank_n));
            rank = it->second;
        }
        if (rank <= K) ++hits;
    }
    return 100.0 * static_cast<double>(hits) /
           static_cast<double>(cell.queries.size());
}

std::vector<int> cell_rank_histogram(const CellOutcome& cell, int rerank_n) {
    std::vector<int> counts(cell.repo_size, 0);
    for (const QueryOutcome& q : cell.queries) {
        int rank = q.rank_before;
        if (rerank_n != 0) {
            const auto it = q.rank_after.find(rerank_n);
            if (it == q.rank_after.end())
                throw std::invalid_argument("cell has no rerank data for N=" +
                                            std::to_string(rerank_n));
            rank = it->second;
        }
        if (rank < 1 || rank > cell.repo_size)
            throw InternalError("rank outside [1, repo size]");
        ++counts[rank - 1];
    }
    return counts;
}

BenchRunner::BenchRunner(DatasetManifest manifest, BenchConfig config,
                         FeatureCache* cache)
    : manifest_(std::move(manifest)), config_(std::move(config)), cache_(cache) {
    config_.extractor.validate();
}

BenchRunner::SpaceState& BenchRunner::state(const std::string& name) {
    const auto it = spaces_.find(name);
    if (it != spaces_.end()) return it->second;

    const SpaceDescriptor& sd = manifest_.space(name);
    std::vector<GrayRaster> all = scan_space(sd);
    SpaceState st;
    for (GrayRaster& r : all)
        if (manifest_.split_of(r.id) == "test") st.rasters.push_back(std::move(r));
    if (st.rasters.empty())
        throw DataError("space '" + name + "' has no test-split rasters");

    st.features.reserve(st.rasters.size());
    for (const GrayRaster& r : st.rasters) {
        if (cache_) {
            st.features.push_back(cache_->get(name, r, config_.extractor));
        } else {
            FeatureSet fs = extract_grid(r, config_.extractor);
            canonicalize_f32(fs);  // match what a cached run would produce
            st.features.push_back(std::move(fs));
        }
    }
    return spaces_.emplace(name, std::move(st)).first->second;
}

const std::vector<GrayRaster>& BenchRunner::space_rasters(const std::string& name) {
    return state(name).rasters;
}

const std::map<std::string, RigidTransform>& BenchRunner::transforms() {
    if (!transforms_ready_) {
        std::set<std::string> ids;
        for (const SpaceDescriptor& sd : manifest_.spaces)
            for (const GrayRaster& r : state(sd.name).rasters) ids.insert(r.id);
        for (const std::string& id : ids)
            transforms_[id] =
                derive_transform(config_.seed, id, config_.max_rot, config_.max_trans);
        transforms_ready_ = true;
    }
    return transforms_;
}

CellOutcome BenchRunner::run_cell(const CellSpec& spec) {
    SpaceState& repo = state(spec.repo_space);
    if (!repo.index) {
        std::vector<FeatureSet> selected;
        selected.reserve(repo.features.size());
        for (const FeatureSet& fs : repo.features)
            selected.push_back(
                select_strongest(fs, config_.extractor.strongest_fraction));
        const Vocabulary vocab =
            build_vocabulary(selected, config_.K_vocab, config_.seed,
                             config_.max_iters, spec.repo_space);
        repo.index = std::make_unique<RetrievalIndex>(build_index_from_features(
            repo.features, config_.extractor, vocab, spec.repo_space));
    }
    const int repo_size = static_cast<int>(repo.index->entries.size());

    std::set<std::string> repo_ids;
    for (const BowHistogram& h : repo.index->entries) repo_ids.insert(h.image_id);

    std::unordered_map<std::string, const GrayRaster*> repo_map;
    for (const GrayRaster& r : repo.rasters) repo_map[r.id] = &r;

    SpaceState& qspace = state(spec.query_space);
    CellOutcome out;
    out.spec = spec;
    out.repo_size = repo_size;

    for (const GrayRaster& base : qspace.rasters) {
        if (!repo_ids.count(base.id))
            throw DataError("query '" + base.id + "' has no counterpart in space '" +
                            spec.repo_space + "'");
        GrayRaster q = base;
        if (spec.query_transformed) {
            const RigidTransform t = derive_transform(config_.seed, base.id,
                                                      config_.max_rot,
                                                      config_.max_trans);
            q = apply_transform(q, t);
        }
        if (spec.query_is_patch) q = center_crop(q, manifest_.patch_size);

        const RankedList first = query(*repo.index, q, config_.extractor, repo_size);
        QueryOutcome qo;
        qo.query_id = base.id;
        qo.rank_before = 0;
        for (std::size_t i = 0; i < first.items.size(); ++i)
            if (first.items[i].image_id == base.id) {
                qo.rank_before = static_cast<int>(i) + 1;
                break;
            }
        if (qo.rank_before == 0)
            throw InternalError("true match missing from the full ranking");

        for (int n : config_.rerank_list) {
            if (n == 0) continue;
            const int n_eff = std::min(n, repo_size);
            ReRankOptions opt;
            opt.K_vocab = config_.K_vocab;
            opt.seed = config_.seed;
            opt.max_iters = config_.max_iters;
            opt.mean_score = config_.rerank_mean;
            opt.memo = &patch_memo_;
            const RankedList re = rerank(first, repo_map, q, config_.extractor,
                                         n_eff, opt);
            int rank = qo.rank_before;  // tail is untouched by re-ranking
            for (std::size_t i = 0; i < re.items.size(); ++i)
                if (re.items[i].image_id == base.id) {
                    rank = static_cast<int>(i) + 1;
                    break;
                }
            qo.rank_after[n] = rank;
        }
        out.queries.push_back(std::move(qo));
    }
    return out;
}

EvalReport BenchRunner::run_matrix(const std::vector<std::string>& spaces) {
    if (spaces.empty()) throw std::invalid_argument("run_matrix: no spaces");
    EvalReport report;
    report.config = config_;
    for (const std::string& rs : spaces)
        for (const std::string& qs : spaces)
            for (const bool transformed : {false, true})
                for (const bool patch : {false, true}) {
                    CellSpec spec;
                    spec.repo_space = rs;
                    spec.query_space = qs;
                    spec.query_transformed = transformed;
                    spec.query_is_patch = patch;
                    report.cells.push_back(run_cell(spec));
                }
    return report;
}

EquivSummary equivariance_report(const std::vector<EquivInput>& inputs) {
    if (inputs.empty()) throw std::invalid_argument("no equivariance pairs");
    EquivSummary s;
    s.rows.reserve(inputs.size());
    double sum = 0;
    for (const EquivInput& in : inputs) {
        if (!in.a || !in.b) throw std::invalid_argument("null raster in pair");
        const double r = overlap_correlation(*in.a, *in.b, in.t);
        s.rows.push_back({in.pair_id, r});
        sum += r;
    }
    s.mean = sum / static_cast<double>(s.rows.size());
    s.min_r = s.rows.front().r;
    s.max_r = s.rows.front().r;
    for (const EquivRow& row : s.rows) {
        s.min_r = std::min(s.min_r, row.r);
        s.max_r = std::max(s.max_r, row.r);
    }
    return s;
}

namespace {

void append_cell_key(std::string& out, const CellSpec& spec) {
    out += spec.repo_space;
    out += ',';
    out += spec.query_space;
    out += ',';
    out += spec.query_transformed ? '1' : '0';
    out += ',';
    out += spec.query_is_patch ? '1' : '0';
    out += ',';
}

}  // namespace

std::string report_to_csv(const EvalReport& report) {
    std::string out = "repo_space,query_space,transformed,patch,rerank,K,success,queries\n";
    char buf[64];
    for (const CellOutcome& cell : report.cells)
        for (const int n : report.config.rerank_list)
            for (const int K : report.config.K_list) {
                append_cell_key(out, cell.spec);
                std::snprintf(buf, sizeof buf, "%d,%d,%.1f,%zu\n", n, K,
                              cell_topk(cell, K, n), cell.queries.size());
                out += buf;
            }
    return out;
}

std::string rank_dump_to_csv(const EvalReport& report) {
    std::string out = "repo_space,query_space,transformed,patch,rerank,query_id,rank\n";
    char buf[48];
    for (const CellOutcome& cell : report.cells)
        for (const int n : report.config.rerank_list)
            for (const QueryOutcome& q : cell.queries) {
                append_cell_key(out, cell.spec);
                const int rank = n == 0 ? q.rank_before : q.rank_after.at(n);
                std::snprintf(buf, sizeof buf, "%d,", n);
                out += buf;
                out += q.query_id;
                std::snprintf(buf, sizeof buf, ",%d\n", rank);
                out += buf;
            }
    return out;
}

std::string rank_histogram_to_csv(const EvalReport& report) {
    std::string out = "repo_space,query_space,transformed,patch,rerank,rank,count\n";
    char buf[64];
    for (const CellOutcome& cell : report.cells)
        for (const int n : report.config.rerank_list) {
            const std::vector<int> counts = cell_rank_histogram(cell, n);
            for (std::size_t r = 0; r < counts.size(); ++r) {
                if (counts[r] == 0) continue;
                append_cell_key(out, cell.spec);
                std::snprintf(buf, sizeof buf, "%d,%zu,%d\n", n, r + 1, counts[r]);
                out += buf;
            }
        }
    return out;
}

std::string equivariance_to_csv(const EquivSummary& summary) {
    std::string out = "pair_id,r\n";
    char buf[48];
    for (const EquivRow& row : summary.rows) {
        out += row.pair_id;
        std::snprintf(buf, sizeof buf, ",%.9g\n", row.r);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "mean,%.9g\n", summary.mean);
    out += buf;
    std::snprintf(buf, sizeof buf, "min,%.9g\n", summary.min_r);
    out += buf;
    std::snprintf(buf, sizeof buf, "max,%.9g\n", summary.max_r);
    out += buf;
    return out;
}

}  // namespace simret
