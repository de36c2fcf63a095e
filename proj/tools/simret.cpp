// Command-line front end: vocabulary/index building, querying with optional
// re-ranking, the benchmark matrix, the equivariance probe, and inspection
// of the binary artifacts.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simret/bench.hpp"
#include "simret/binio.hpp"
#include "simret/bow.hpp"
#include "simret/error.hpp"
#include "simret/features.hpp"
#include "simret/image_io.hpp"
#include "simret/index.hpp"
#include "simret/ingest.hpp"
#include "simret/parallel.hpp"
#include "simret/rerank.hpp"

namespace fs = std::filesystem;
using namespace simret;

namespace {

struct CommonOpts {
    int grid_spacing = 8;
    std::vector<int> scales{32, 64, 96, 128};
    bool oriented = false;
    double fraction = 0.8;
    unsigned threads = 0;
    bool no_cache = false;
    std::string cache_dir;

    ExtractorConfig extractor() const {
        ExtractorConfig cfg;
        cfg.grid_spacing = grid_spacing;
        cfg.scales = scales;
        cfg.upright = !oriented;
        cfg.strongest_fraction = fraction;
        cfg.validate();
        return cfg;
    }

    FeatureCache cache() const { return FeatureCache(cache_dir, !no_cache); }
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--grid-spacing", c.grid_spacing, "Feature grid spacing in px")
        ->capture_default_str();
    cmd->add_option("--scales", c.scales, "Patch sizes in px")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_flag("--oriented", c.oriented,
                  "Orientation-normalized descriptors (default upright)");
    cmd->add_option("--fraction", c.fraction, "Strongest-feature fraction")
        ->capture_default_str();
    cmd->add_option("--threads", c.threads, "Worker thread cap (0 = auto)")
        ->capture_default_str();
    cmd->add_flag("--no-cache", c.no_cache, "Recompute features, bypass the cache");
    cmd->add_option("--cache-dir", c.cache_dir,
                    "Feature cache root (default $SIMRET_CACHE_DIR or .simret-cache)");
}

std::vector<GrayRaster> load_dir(const std::string& dir,
                                 const std::vector<std::string>& preprocessing) {
    SpaceDescriptor sd;
    sd.name = fs::path(dir).filename().string();
    if (sd.name.empty()) sd.name = dir;
    sd.root = dir;
    sd.preprocessing = preprocessing;
    return scan_space(sd);
}

int cmd_build_vocab(const std::string& dir,
                    const std::vector<std::string>& preprocessing, int K,
                    std::uint64_t seed, int max_iters, const std::string& out,
                    const std::string& tag, const CommonOpts& common) {
    const ExtractorConfig cfg = common.extractor();
    FeatureCache cache = common.cache();
    const std::vector<GrayRaster> rasters = load_dir(dir, preprocessing);
    std::vector<FeatureSet> selected;
    selected.reserve(rasters.size());
    for (const GrayRaster& r : rasters)
        selected.push_back(
            select_strongest(cache.get(tag, r, cfg), cfg.strongest_fraction));
    KMeansStats stats;
    const Vocabulary vocab =
        build_vocabulary(selected, K, seed, max_iters, tag, &stats);
    binio::write_file_atomic(out, serialize_vocabulary(vocab));
    std::printf("vocabulary: K=%d (requested %d) iterations=%d inertia=%.9g -> %s\n",
                vocab.K, K, stats.iterations,
                stats.inertia_per_iter.empty() ? 0.0 : stats.inertia_per_iter.back(),
                out.c_str());
    return 0;
}

int cmd_build_index(const std::string& dir,
                    const std::vector<std::string>& preprocessing,
                    const std::string& vocab_path, const std::string& out,
                    const std::string& tag, bool allow_mismatch,
                    const CommonOpts& common) {
    const ExtractorConfig cfg = common.extractor();
    FeatureCache cache = common.cache();
    const Vocabulary vocab = deserialize_vocabulary(binio::read_file(vocab_path));
    const std::vector<GrayRaster> rasters = load_dir(dir, preprocessing);
    std::vector<FeatureSet> sets;
    sets.reserve(rasters.size());
    for (const GrayRaster& r : rasters) sets.push_back(cache.get(tag, r, cfg));
    const RetrievalIndex idx =
        build_index_from_features(sets, cfg, vocab, tag, allow_mismatch);
    // Rewrites the vocabulary byte-identically alongside the new table.
    save_index(idx, vocab_path, out);
    std::printf("index: %zu entries, K=%d -> %s\n", idx.entries.size(),
                idx.vocabulary.K, out.c_str());
    return 0;
}

int cmd_query(const std::string& vocab_path, const std::string& table_path,
              const std::string& image, int top_n, int rerank_n,
              const std::string& repo_dir,
              const std::vector<std::string>& preprocessing,
              std::uint64_t seed, int max_iters, const std::string& out,
              const CommonOpts& common) {
    const ExtractorConfig cfg = common.extractor();
    const RetrievalIndex idx = load_index(vocab_path, table_path);
    const GrayRaster q = load_raster(image);

    if (top_n > static_cast<int>(idx.entries.size())) {
        std::fprintf(stderr, "warning: top_n %d clamped to repository size %zu\n",
                     top_n, idx.entries.size());
        top_n = static_cast<int>(idx.entries.size());
    }
    RankedList ranked = query(idx, q, cfg, top_n);

    if (rerank_n > 0) {
        if (repo_dir.empty())
            throw std::invalid_argument("--rerank requires --dir with the repository rasters");
        const std::vector<GrayRaster> rasters = load_dir(repo_dir, preprocessing);
        std::unordered_map<std::string, const GrayRaster*> repo_map;
        for (const GrayRaster& r : rasters) repo_map[r.id] = &r;
        ReRankOptions opt;
        opt.K_vocab = idx.vocabulary.K;
        opt.seed = seed;
        opt.max_iters = max_iters;
        const int n_eff = std::min<int>(rerank_n, static_cast<int>(ranked.items.size()));
        // The output becomes the second-stage list itself; splicing its
        // scores over the first-stage tail would mix incomparable scales.
        ranked = rerank(ranked, repo_map, q, cfg, n_eff, opt);
    }

    const std::string csv = ranked_to_csv(ranked);
    if (out.empty())
        std::fputs(csv.c_str(), stdout);
    else
        binio::write_file_atomic(out, csv);
    return 0;
}

int cmd_evaluate(const std::string& manifest_path, const std::string& out_dir,
                 const std::vector<std::string>& spaces, int K_vocab,
                 std::uint64_t seed, int max_iters, const std::vector<int>& topk,
                 const std::vector<int>& rerank_list, double max_rot,
                 double max_trans, std::optional<int> patch_size,
                 bool rerank_mean, const CommonOpts& common) {
    DatasetManifest manifest = load_manifest(manifest_path);
    if (patch_size) {
        if (*patch_size < 1)
            throw std::invalid_argument("--patch-size must be >= 1");
        manifest.patch_size = *patch_size;
    }

    BenchConfig bc;
    bc.extractor = common.extractor();
    bc.K_vocab = K_vocab;
    bc.seed = seed;
    bc.max_iters = max_iters;
    bc.K_list = topk;
    bc.rerank_list = rerank_list;
    bc.max_rot = max_rot;
    bc.max_trans = max_trans;
    bc.rerank_mean = rerank_mean;

    std::vector<std::string> use_spaces = spaces;
    if (use_spaces.empty())
        for (const SpaceDescriptor& sd : manifest.spaces)
            use_spaces.push_back(sd.name);

    FeatureCache cache = common.cache();
    BenchRunner runner(manifest, bc, &cache);
    const EvalReport report = runner.run_matrix(use_spaces);

    fs::create_directories(out_dir);
    const std::string report_path = (fs::path(out_dir) / "report.csv").string();
    binio::write_file_atomic(report_path, report_to_csv(report));
    binio::write_file_atomic((fs::path(out_dir) / "ranks.csv").string(),
                             rank_dump_to_csv(report));
    binio::write_file_atomic((fs::path(out_dir) / "rank_histogram.csv").string(),
                             rank_histogram_to_csv(report));

    std::ostringstream meta;
    meta << "rng " << report.rng_name << "\nseed " << seed << "\nK_vocab "
         << K_vocab << "\nextractor " << bc.extractor.cache_key_material()
         << "\n";
    binio::write_file_atomic((fs::path(out_dir) / "run_meta.txt").string(),
                             meta.str());
    std::printf("evaluate: %zu cells -> %s\n", report.cells.size(),
                report_path.c_str());
    return 0;
}

int cmd_equivariance(const std::string& manifest_path, const std::string& space_a,
                     const std::string& space_b, std::uint64_t seed,
                     double max_rot, double max_trans, bool identity,
                     const std::string& out, const CommonOpts& common) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    BenchConfig bc;
    bc.extractor = common.extractor();
    bc.seed = seed;
    bc.max_rot = max_rot;
    bc.max_trans = max_trans;
    BenchRunner runner(manifest, bc, nullptr);

    const std::vector<GrayRaster>& as = runner.space_rasters(space_a);
    const std::vector<GrayRaster>& bs =
        runner.space_rasters(space_b.empty() ? space_a : space_b);
    std::map<std::string, const GrayRaster*> b_by_id;
    for (const GrayRaster& r : bs) b_by_id[r.id] = &r;

    std::vector<std::string> ids;
    for (const GrayRaster& r : as) ids.push_back(r.id);
    const auto transforms =
        identity ? std::map<std::string, RigidTransform>{}
                 : make_transforms(ids, seed, max_rot, max_trans);

    // Pairs: raster A against raster B resampled under the pair's transform;
    // with identity and A==B this probes exact self-correlation.
    std::vector<GrayRaster> resampled;
    resampled.reserve(as.size());
    std::vector<EquivInput> inputs;
    for (const GrayRaster& a : as) {
        const auto it = b_by_id.find(a.id);
        if (it == b_by_id.end())
            throw DataError("pair '" + a.id + "' missing from space '" +
                            (space_b.empty() ? space_a : space_b) + "'");
        EquivInput in;
        in.pair_id = a.id;
        in.a = &a;
        in.t = identity ? RigidTransform::identity() : transforms.at(a.id);
        if (identity) {
            in.b = it->second;
        } else {
            resampled.push_back(apply_transform(*it->second, in.t));
            in.b = &resampled.back();
        }
        inputs.push_back(in);
    }

    const EquivSummary summary = equivariance_report(inputs);
    const std::string csv = equivariance_to_csv(summary);
    if (out.empty())
        std::fputs(csv.c_str(), stdout);
    else
        binio::write_file_atomic(out, csv);
    return 0;
}

int cmd_inspect(const std::string& vocab_path, const std::string& table_path,
                const std::string& features_path) {
    if (!vocab_path.empty()) {
        const Vocabulary v = deserialize_vocabulary(binio::read_file(vocab_path));
        double min_n = 0, max_n = 0, sum_n = 0;
        for (std::size_t k = 0; k < v.centroids.size(); ++k) {
            const double n = std::sqrt(dot64(v.centroids[k].data(), v.centroids[k].data()));
            if (k == 0) min_n = max_n = n;
            min_n = std::min(min_n, n);
            max_n = std::max(max_n, n);
            sum_n += n;
        }
        std::printf("vocabulary %s: K=%d dim=%d seed=%llu tag='%s' "
                    "centroid norms min=%.6g mean=%.6g max=%.6g\n",
                    vocab_path.c_str(), v.K, kDescriptorDim,
                    static_cast<unsigned long long>(v.seed), v.source_tag.c_str(),
                    min_n, sum_n / static_cast<double>(v.K), max_n);
    }
    if (!table_path.empty()) {
        if (vocab_path.empty())
            throw std::invalid_argument("--index requires --vocab to decode the table");
        const RetrievalIndex idx = load_index(vocab_path, table_path);
        std::printf("index %s: %zu entries, tag='%s'\n", table_path.c_str(),
                    idx.entries.size(), idx.repo_tag.c_str());
        for (const BowHistogram& h : idx.entries) {
            double mass = 0, norm2 = 0;
            for (double c : h.counts) {
                mass += c;
                norm2 += c * c;
            }
            std::printf("  %s mass=%.9g norm=%.9g\n", h.image_id.c_str(), mass,
                        std::sqrt(norm2));
        }
    }
    if (!features_path.empty()) {
        const FeatureSet fs_in =
            deserialize_features(binio::read_file(features_path));
        std::size_t zero = 0;
        for (const Descriptor& d : fs_in.descriptors)
            if (d.strength == 0) ++zero;
        std::printf("features %s: image_id='%s' count=%zu zero=%zu\n",
                    features_path.c_str(), fs_in.image_id.c_str(),
                    fs_in.descriptors.size(), zero);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sub-image retrieval: bag-of-visual-words build, query, "
                 "re-rank, benchmark"};
    app.require_subcommand(1);

    // build-vocab
    auto* bv = app.add_subcommand("build-vocab", "Cluster a visual vocabulary");
    std::string bv_dir, bv_out = "vocab.srvc", bv_tag;
    std::vector<std::string> bv_pre;
    int bv_K = 20000, bv_iters = 100;
    std::uint64_t bv_seed = 1;
    CommonOpts bv_common;
    bv->add_option("--dir", bv_dir, "Directory of rasters")->required();
    bv->add_option("--preprocess", bv_pre, "Preprocessing steps (none, log_transform)")
        ->delimiter(',');
    bv->add_option("-K,--vocab-size", bv_K, "Requested word count")
        ->capture_default_str();
    bv->add_option("--seed", bv_seed, "Clustering seed")->capture_default_str();
    bv->add_option("--max-iters", bv_iters, "Lloyd iteration cap")
        ->capture_default_str();
    bv->add_option("-o,--out", bv_out, "Output vocabulary file")
        ->capture_default_str();
    bv->add_option("--tag", bv_tag, "Representation-space tag");
    add_common(bv, bv_common);

    // build-index
    auto* bi = app.add_subcommand("build-index", "Index a repository of rasters");
    std::string bi_dir, bi_vocab, bi_out = "index.srht", bi_tag;
    std::vector<std::string> bi_pre;
    bool bi_force = false;
    CommonOpts bi_common;
    bi->add_option("--dir", bi_dir, "Directory of rasters")->required();
    bi->add_option("--vocab", bi_vocab, "Vocabulary file")->required();
    bi->add_option("--preprocess", bi_pre, "Preprocessing steps")->delimiter(',');
    bi->add_option("-o,--out", bi_out, "Output histogram table")
        ->capture_default_str();
    bi->add_option("--tag", bi_tag, "Repository tag");
    bi->add_flag("--allow-tag-mismatch", bi_force,
                 "Index even when tags disagree");
    add_common(bi, bi_common);

    // query
    auto* qc = app.add_subcommand("query", "Rank repository images for a query");
    std::string q_vocab, q_table, q_image, q_dir, q_out;
    std::vector<std::string> q_pre;
    int q_top = 10, q_rerank = 0, q_iters = 100;
    std::uint64_t q_seed = 1;
    CommonOpts q_common;
    qc->add_option("--vocab", q_vocab, "Vocabulary file")->required();
    qc->add_option("--index", q_table, "Histogram table file")->required();
    qc->add_option("--image", q_image, "Query raster")->required();
    qc->add_option("--top-n", q_top, "Results to keep")->capture_default_str();
    qc->add_option("--rerank", q_rerank, "Re-rank the top N (0 = off)")
        ->capture_default_str();
    qc->add_option("--dir", q_dir, "Repository rasters (needed for --rerank)");
    qc->add_option("--preprocess", q_pre, "Preprocessing for --dir rasters")
        ->delimiter(',');
    qc->add_option("--seed", q_seed, "Re-rank clustering seed")
        ->capture_default_str();
    qc->add_option("--max-iters", q_iters, "Re-rank Lloyd iteration cap")
        ->capture_default_str();
    qc->add_option("-o,--out", q_out, "Write CSV here instead of stdout");
    add_common(qc, q_common);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Run the benchmark matrix");
    std::string ev_manifest, ev_out = "eval-out";
    std::vector<std::string> ev_spaces;
    int ev_K = 20000, ev_iters = 100;
    std::uint64_t ev_seed = 1;
    std::vector<int> ev_topk{1, 5, 10, 15};
    std::vector<int> ev_rerank{0, 15, 30};
    double ev_rot = 30.0, ev_trans = 100.0;
    int ev_patch = -1;
    bool ev_mean = false;
    CommonOpts ev_common;
    ev->add_option("--manifest", ev_manifest, "Dataset manifest JSON")->required();
    ev->add_option("--out-dir", ev_out, "Report directory")->capture_default_str();
    ev->add_option("--spaces", ev_spaces, "Spaces to evaluate (default: all)")
        ->delimiter(',');
    ev->add_option("-K,--vocab-size", ev_K, "Vocabulary size")
        ->capture_default_str();
    ev->add_option("--seed", ev_seed, "Run seed")->capture_default_str();
    ev->add_option("--max-iters", ev_iters, "Lloyd iteration cap")
        ->capture_default_str();
    ev->add_option("--topk", ev_topk, "Success cutoffs")->delimiter(',')
        ->capture_default_str();
    ev->add_option("--rerank", ev_rerank, "Re-rank depths (0 = first stage)")
        ->delimiter(',')->capture_default_str();
    ev->add_option("--max-rot", ev_rot, "Max |rotation| in degrees")
        ->capture_default_str();
    ev->add_option("--max-trans", ev_trans, "Max |translation| in px")
        ->capture_default_str();
    ev->add_option("--patch-size", ev_patch,
                   "Query crop size (default: manifest value)");
    ev->add_flag("--rerank-mean", ev_mean,
                 "Score re-rank candidates by mean patch similarity");
    add_common(ev, ev_common);

    // equivariance
    auto* eq = app.add_subcommand("equivariance",
                                  "Overlap-correlation probe over pairs");
    std::string eq_manifest, eq_a, eq_b, eq_out;
    std::uint64_t eq_seed = 1;
    double eq_rot = 30.0, eq_trans = 100.0;
    bool eq_identity = false;
    CommonOpts eq_common;
    eq->add_option("--manifest", eq_manifest, "Dataset manifest JSON")->required();
    eq->add_option("--space-a", eq_a, "First space")->required();
    eq->add_option("--space-b", eq_b, "Second space (default: same as A)");
    eq->add_option("--seed", eq_seed, "Transform seed")->capture_default_str();
    eq->add_option("--max-rot", eq_rot, "Max |rotation| in degrees")
        ->capture_default_str();
    eq->add_option("--max-trans", eq_trans, "Max |translation| in px")
        ->capture_default_str();
    eq->add_flag("--identity", eq_identity, "Probe with the identity transform");
    eq->add_option("-o,--out", eq_out, "Write CSV here instead of stdout");
    add_common(eq, eq_common);

    // inspect
    auto* in = app.add_subcommand("inspect", "Describe binary artifacts");
    std::string in_vocab, in_table, in_features;
    in->add_option("--vocab", in_vocab, "Vocabulary file");
    in->add_option("--index", in_table, "Histogram table (requires --vocab)");
    in->add_option("--features", in_features, "Feature set file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (bv->parsed()) {
            set_thread_count(bv_common.threads);
            return cmd_build_vocab(bv_dir, bv_pre, bv_K, bv_seed, bv_iters, bv_out,
                                   bv_tag, bv_common);
        }
        if (bi->parsed()) {
            set_thread_count(bi_common.threads);
            return cmd_build_index(bi_dir, bi_pre, bi_vocab, bi_out, bi_tag,
                                   bi_force, bi_common);
        }
        if (qc->parsed()) {
            set_thread_count(q_common.threads);
            return cmd_query(q_vocab, q_table, q_image, q_top, q_rerank, q_dir,
                             q_pre, q_seed, q_iters, q_out, q_common);
        }
        if (ev->parsed()) {
            set_thread_count(ev_common.threads);
            return cmd_evaluate(ev_manifest, ev_out, ev_spaces, ev_K, ev_seed,
                                ev_iters, ev_topk, ev_rerank, ev_rot, ev_trans,
                                ev_patch >= 0 ? std::optional<int>(ev_patch)
                                              : std::nullopt,
                                ev_mean, ev_common);
        }
        if (eq->parsed()) {
            set_thread_count(eq_common.threads);
            return cmd_equivariance(eq_manifest, eq_a, eq_b, eq_seed, eq_rot,
                                    eq_trans, eq_identity, eq_out, eq_common);
        }
        if (in->parsed()) return cmd_inspect(in_vocab, in_table, in_features);
        std::fprintf(stderr, "error: no subcommand\n");
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const InternalError& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
