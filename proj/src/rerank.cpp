#include "simret/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "simret/bow.hpp"
#include "simret/error.hpp"

namespace simret {

namespace {

std::vector<int> axis_origins(int L, int patch) {
    const int n = static_cast<int>((L + patch - 1) / patch);  // ceil(L/patch)
    std::vector<int> out;
    out.reserve(n);
    if (n == 1) {
        out.push_back(0);
        return out;
    }
    const double step = static_cast<double>(L - patch) / (n - 1);
    for (int i = 0; i < n; ++i)
        out.push_back(static_cast<int>(std::llround(i * step)));
    return out;
}

}  // namespace

PatchGrid patch_grid(int width, int height, int patch) {
    if (patch < 1) throw std::invalid_argument("patch must be >= 1");
    if (patch > width || patch > height)
        throw std::invalid_argument("patch larger than image");
    PatchGrid g;
    g.patch = patch;
    g.cover_w = width;
    g.cover_h = height;
    const std::vector<int> xs = axis_origins(width, patch);
    const std::vector<int> ys = axis_origins(height, patch);
    g.origins.reserve(xs.size() * ys.size());
    for (int y : ys)
        for (int x : xs) g.origins.emplace_back(x, y);
    return g;
}

RankedList rerank(const RankedList& first,
                  const std::unordered_map<std::string, const GrayRaster*>& repo,
                  const GrayRaster& q, const ExtractorConfig& cfg, int N,
                  const ReRankOptions& opt) {
    if (N < 1) throw std::invalid_argument("rerank: N must be >= 1");
    if (static_cast<std::size_t>(N) > first.items.size())
        throw std::invalid_argument("rerank: N exceeds the ranked list");

    int patch = std::min(q.width, q.height);
    if (!opt.full_image_mode && q.width != q.height)
        std::fprintf(stderr,
                     "warning: non-square query '%s'; using patch side %d\n",
                     q.id.c_str(), patch);

    struct Candidate {
        std::string id;
        std::vector<FeatureSet> patches;  // feature set per covering patch
    };
    std::vector<Candidate> cands(N);
    std::vector<FeatureSet> all_sets;

    for (int i = 0; i < N; ++i) {
        const std::string& id = first.items[i].image_id;
        const auto it = repo.find(id);
        if (it == repo.end() || it->second == nullptr)
            throw DataError("rerank: no raster for candidate '" + id + "'");
        const GrayRaster& img = *it->second;
        cands[i].id = id;

        std::vector<std::pair<int, int>> origins;
        int side;
        if (opt.full_image_mode || patch > std::min(img.width, img.height)) {
            if (!opt.full_image_mode)
                std::fprintf(stderr,
                             "warning: candidate '%s' smaller than the query; "
                             "using its full frame\n",
                             id.c_str());
            origins.emplace_back(0, 0);
            side = 0;  // whole image marker
        } else {
            const PatchGrid g = patch_grid(img.width, img.height, patch);
            origins = g.origins;
            side = patch;
        }

        for (const auto& [ox, oy] : origins) {
            FeatureSet fs;
            const auto key = std::make_tuple(id, side, ox, oy);
            if (opt.memo) {
                const auto mit = opt.memo->by_origin.find(key);
                if (mit != opt.memo->by_origin.end()) {
                    cands[i].patches.push_back(mit->second);
                    continue;
                }
            }
            if (side == 0) {
                fs = extract_grid(img, cfg);
            } else {
                char tag[64];
                std::snprintf(tag, sizeof tag, "#%d_%d", ox, oy);
                fs = extract_grid(crop(img, ox, oy, side, id + tag), cfg);
            }
            canonicalize_f32(fs);
            if (opt.memo) opt.memo->by_origin.emplace(key, fs);
            cands[i].patches.push_back(std::move(fs));
        }
    }

    for (const Candidate& c : cands)
        for (const FeatureSet& fs : c.patches)
            all_sets.push_back(select_strongest(fs, cfg.strongest_fraction));

    // Degenerate candidate set with no usable descriptors: every score is 0.
    bool any_nonzero = false;
    for (const FeatureSet& fs : all_sets)
        for (const Descriptor& d : fs.descriptors)
            if (d.strength > 0) {
                any_nonzero = true;
                break;
            }

    std::vector<double> scores(N, 0.0);
    if (any_nonzero) {
        const Vocabulary vocab =
            build_vocabulary(all_sets, opt.K_vocab, opt.seed, opt.max_iters,
                             "rerank");
        FeatureSet qfs = extract_grid(q, cfg);
        canonicalize_f32(qfs);
        const BowHistogram qh =
            quantize(select_strongest(qfs, cfg.strongest_fraction), vocab);
        std::size_t pos = 0;
        for (int i = 0; i < N; ++i) {
            double best = 0.0, sum = 0.0;
            for (std::size_t p = 0; p < cands[i].patches.size(); ++p) {
                const double s = cosine(qh, quantize(all_sets[pos++], vocab));
                best = std::max(best, s);
                sum += s;
            }
            scores[i] = opt.mean_score
                            ? sum / static_cast<double>(cands[i].patches.size())
                            : best;
        }
    }

    std::vector<int> order(N);
    for (int i = 0; i < N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return cands[a].id < cands[b].id;
    });

    RankedList out;
    out.query_id = first.query_id;
    out.items.reserve(N);
    for (int i : order) out.items.push_back({cands[i].id, scores[i]});
    return out;
}

}  // namespace simret
