#include "simret/index.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <set>
#include <sstream>

#include "simret/binio.hpp"
#include "simret/error.hpp"
#include "simret/hash.hpp"
#include "simret/parallel.hpp"

namespace simret {

namespace {

void check_tags(const std::string& source_tag, const std::string& repo_tag,
                bool allow_mismatch) {
    if (allow_mismatch || source_tag.empty() || repo_tag.empty()) return;
    if (source_tag != repo_tag)
        throw DataError("vocabulary source_tag '" + source_tag +
                        "' does not match repo_tag '" + repo_tag + "'");
}

void check_unique_ids(const std::vector<BowHistogram>& entries) {
    std::set<std::string> seen;
    for (const BowHistogram& h : entries)
        if (!seen.insert(h.image_id).second)
            throw DataError("duplicate image_id '" + h.image_id + "' in index");
}

}  // namespace

RetrievalIndex build_index_from_features(const std::vector<FeatureSet>& sets,
                                         const ExtractorConfig& cfg,
                                         const Vocabulary& vocab,
                                         const std::string& repo_tag,
                                         bool allow_tag_mismatch) {
    if (sets.empty()) throw DataError("build_index: empty repository");
    check_tags(vocab.source_tag, repo_tag, allow_tag_mismatch);
    RetrievalIndex idx;
    idx.vocabulary = vocab;
    idx.repo_tag = repo_tag;
    idx.entries.reserve(sets.size());
    for (const FeatureSet& fs : sets)
        idx.entries.push_back(
            quantize(select_strongest(fs, cfg.strongest_fraction), vocab));
    check_unique_ids(idx.entries);
    return idx;
}

RetrievalIndex build_index(const std::vector<GrayRaster>& rasters,
                           const ExtractorConfig& cfg, const Vocabulary& vocab,
                           const std::string& repo_tag, bool allow_tag_mismatch) {
    if (rasters.empty()) throw DataError("build_index: empty repository");
    std::vector<FeatureSet> sets(rasters.size());
    for (std::size_t i = 0; i < rasters.size(); ++i) {
        sets[i] = extract_grid(rasters[i], cfg);
        // The whole retrieval pipeline works on f32-rounded descriptors so
        // cached and fresh feature sets behave identically.
        canonicalize_f32(sets[i]);
    }
    return build_index_from_features(sets, cfg, vocab, repo_tag,
                                     allow_tag_mismatch);
}

RankedList rank_histogram(const RetrievalIndex& idx, const BowHistogram& qh,
                          int top_n) {
    if (top_n < 1) throw std::invalid_argument("top_n must be >= 1");
    const std::size_t n = idx.entries.size();
    std::vector<double> sims(n);
    parallel_for(n, [&](std::size_t i) { sims[i] = cosine(qh, idx.entries[i]); });

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return idx.entries[a].image_id < idx.entries[b].image_id;
    });

    RankedList out;
    out.query_id = qh.image_id;
    const std::size_t keep = std::min<std::size_t>(top_n, n);
    out.items.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i)
        out.items.push_back({idx.entries[order[i]].image_id, sims[order[i]]});
    return out;
}

RankedList query(const RetrievalIndex& idx, const GrayRaster& q,
                 const ExtractorConfig& cfg, int top_n) {
    FeatureSet fs = extract_grid(q, cfg);
    canonicalize_f32(fs);
    const BowHistogram qh =
        quantize(select_strongest(fs, cfg.strongest_fraction), idx.vocabulary);
    bool any = false;
    for (double c : qh.counts)
        if (c != 0) {
            any = true;
            break;
        }
    if (!any)
        std::fprintf(stderr, "warning: query '%s' produced an all-zero histogram\n",
                     q.id.c_str());
    return rank_histogram(idx, qh, top_n);
}

double topk_success(const std::vector<RankedList>& ranked,
                    const std::map<std::string, std::string>& truth, int K) {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (ranked.empty()) throw std::invalid_argument("no ranked lists");
    std::size_t hits = 0;
    for (const RankedList& r : ranked) {
        const auto it = truth.find(r.query_id);
        if (it == truth.end())
            throw DataError("no truth entry for query '" + r.query_id + "'");
        const std::size_t upto = std::min<std::size_t>(K, r.items.size());
        for (std::size_t i = 0; i < upto; ++i)
            if (r.items[i].image_id == it->second) {
                ++hits;
                break;
            }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(ranked.size());
}

namespace {
constexpr char kTableMagic[4] = {'S', 'R', 'H', 'T'};
constexpr std::uint32_t kTableVersion = 1;
}  // namespace

void save_index(const RetrievalIndex& idx, const std::string& vocab_path,
                const std::string& table_path) {
    binio::write_file_atomic(vocab_path, serialize_vocabulary(idx.vocabulary));

    std::string out;
    out.append(kTableMagic, 4);
    binio::put<std::uint32_t>(out, kTableVersion);
    binio::put_string(out, idx.repo_tag);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(idx.vocabulary.K));
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(idx.entries.size()));
    for (const BowHistogram& h : idx.entries) {
        binio::put_string(out, h.image_id);
        std::uint32_t nnz = 0;
        for (double c : h.counts)
            if (c != 0.0) ++nnz;
        binio::put<std::uint32_t>(out, nnz);
        for (std::size_t j = 0; j < h.counts.size(); ++j)
            if (h.counts[j] != 0.0) {
                binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(j));
                binio::put<float>(out, static_cast<float>(h.counts[j]));
            }
    }
    binio::put<std::uint64_t>(out, fnv1a64(out.data(), out.size()));
    binio::write_file_atomic(table_path, out);
}

RetrievalIndex load_index(const std::string& vocab_path,
                          const std::string& table_path) {
    RetrievalIndex idx;
    idx.vocabulary = deserialize_vocabulary(binio::read_file(vocab_path));

    const std::string bytes = binio::read_file(table_path);
    if (bytes.size() < 8 + sizeof(std::uint64_t))
        throw DataError("index table truncated");
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    binio::Reader tail(bytes.data() + body, sizeof(std::uint64_t));
    if (tail.get<std::uint64_t>() != fnv1a64(bytes.data(), body))
        throw DataError("index table checksum mismatch");

    binio::Reader rd(bytes.data(), body);
    char magic[4];
    for (char& c : magic) c = rd.get<char>();
    if (std::memcmp(magic, kTableMagic, 4) != 0)
        throw DataError("not an index table file");
    if (rd.get<std::uint32_t>() != kTableVersion)
        throw DataError("unsupported index table version");
    idx.repo_tag = rd.get_string();
    const auto K = rd.get<std::uint32_t>();
    if (static_cast<int>(K) != idx.vocabulary.K)
        throw DataError("index table K does not match vocabulary");
    const auto count = rd.get<std::uint32_t>();
    idx.entries.resize(count);
    for (BowHistogram& h : idx.entries) {
        h.image_id = rd.get_string();
        h.counts.assign(K, 0.0);
        const auto nnz = rd.get<std::uint32_t>();
        for (std::uint32_t i = 0; i < nnz; ++i) {
            const auto j = rd.get<std::uint32_t>();
            if (j >= K) throw DataError("index table word id out of range");
            h.counts[j] = rd.get<float>();
        }
    }
    if (rd.remaining() != 0) throw DataError("index table has trailing bytes");
    check_unique_ids(idx.entries);
    return idx;
}

std::string ranked_to_csv(const RankedList& r) {
    std::ostringstream ss;
    ss << "rank,image_id,similarity\n";
    char buf[48];
    for (std::size_t i = 0; i < r.items.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,", i + 1);
        ss << buf << r.items[i].image_id;
        std::snprintf(buf, sizeof buf, ",%.9g\n", r.items[i].similarity);
        ss << buf;
    }
    return ss.str();
}

RankedList ranked_from_csv(const std::string& text) {
    RankedList out;
    std::istringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) || line != "rank,image_id,similarity")
        throw DataError("ranked CSV: bad header");
    std::size_t expect = 1;
    while (std::getline(ss, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        if (c1 == std::string::npos || c2 == c1)
            throw DataError("ranked CSV: bad row '" + line + "'");
        const std::size_t rank = std::stoull(line.substr(0, c1));
        if (rank != expect) throw DataError("ranked CSV: ranks not consecutive");
        ++expect;
        RankedItem item;
        item.image_id = line.substr(c1 + 1, c2 - c1 - 1);
        item.similarity = std::stod(line.substr(c2 + 1));
        out.items.push_back(std::move(item));
    }
    for (std::size_t i = 1; i < out.items.size(); ++i)
        if (out.items[i].similarity > out.items[i - 1].similarity)
            throw DataError("ranked CSV: similarities not non-increasing");
    return out;
}

}  // namespace simret
