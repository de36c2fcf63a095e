#include "simret/bow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "simret/binio.hpp"
#include "simret/error.hpp"
#include "simret/hash.hpp"
#include "simret/parallel.hpp"

namespace simret {

double dot64(const double* a, const double* b) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    for (int i = 0; i < kDescriptorDim; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    return (s0 + s1) + (s2 + s3);
}

double dist2_64(const double* a, const double* b) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    for (int i = 0; i < kDescriptorDim; i += 4) {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        const double d3 = a[i + 3] - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    return (s0 + s1) + (s2 + s3);
}

namespace {

double dotn(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double tail = 0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

// Uniform double in [0,1) with 53 random bits. Part of the pinned
// "mt19937_64-u53/v1" generator contract shared with the benchmark.
double u53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool is_zero_descriptor(const Descriptor& d) {
    for (double x : d.v)
        if (x != 0.0) return false;
    return true;
}

// Nearest centroid by Euclidean distance, ties to the lowest index. Uses the
// |c|^2 - 2 x.c expansion so the scan is one dot product per centroid.
int nearest_centroid(const double* x,
                     const std::vector<std::array<double, kDescriptorDim>>& cents,
                     const std::vector<double>& cnorm2) {
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cents.size(); ++k) {
        const double val = cnorm2[k] - 2.0 * dot64(x, cents[k].data());
        if (val < best_val) {
            best_val = val;
            best = static_cast<int>(k);
        }
    }
    return best;
}

}  // namespace

Vocabulary build_vocabulary(const std::vector<FeatureSet>& sets, int K,
                            std::uint64_t seed, int max_iters,
                            const std::string& source_tag, KMeansStats* stats) {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");

    std::vector<const double*> pts;
    std::size_t total = 0;
    for (const FeatureSet& fs : sets) {
        total += fs.descriptors.size();
        for (const Descriptor& d : fs.descriptors)
            if (!is_zero_descriptor(d)) pts.push_back(d.v.data());
    }
    if (total == 0) throw DataError("build_vocabulary: no descriptors");
    if (pts.empty()) throw DataError("build_vocabulary: only zero descriptors");
    const std::size_t n = pts.size();

    // Clamp K to the number of distinct points.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto less_pt = [&](std::size_t a, std::size_t b) {
        const double* pa = pts[a];
        const double* pb = pts[b];
        for (int i = 0; i < kDescriptorDim; ++i) {
            if (pa[i] < pb[i]) return true;
            if (pa[i] > pb[i]) return false;
        }
        return false;
    };
    auto eq_pt = [](const double* pa, const double* pb) {
        for (int i = 0; i < kDescriptorDim; ++i)
            if (pa[i] != pb[i]) return false;
        return true;
    };
    std::sort(order.begin(), order.end(), less_pt);
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < n; ++i)
        if (!eq_pt(pts[order[i - 1]], pts[order[i]])) ++distinct;
    const int K_eff = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(K), distinct));

    Vocabulary vocab;
    vocab.K = K_eff;
    vocab.seed = seed;
    vocab.source_tag = source_tag;
    vocab.centroids.resize(K_eff);

    // k-means++ seeding: first pick uniform, then D^2-weighted sequential
    // prefix scans so the choice is independent of thread count.
    std::mt19937_64 rng(seed);
    std::vector<double> d2(n);
    {
        const auto first = std::min<std::size_t>(
            n - 1, static_cast<std::size_t>(u53(rng) * static_cast<double>(n)));
        std::copy(pts[first], pts[first] + kDescriptorDim,
                  vocab.centroids[0].begin());
        parallel_for(n, [&](std::size_t i) {
            d2[i] = dist2_64(pts[i], vocab.centroids[0].data());
        });
        for (int c = 1; c < K_eff; ++c) {
            double total_w = 0;
            for (std::size_t i = 0; i < n; ++i) total_w += d2[i];
            if (total_w <= 0.0)
                throw InternalError("k-means++ ran out of distinct points");
            const double r = u53(rng) * total_w;
            std::size_t picked = n;
            double cum = 0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > r && d2[i] > 0) {
                    picked = i;
                    break;
                }
            }
            if (picked == n) {  // numerical edge: take the last positive weight
                for (std::size_t i = n; i-- > 0;)
                    if (d2[i] > 0) {
                        picked = i;
                        break;
                    }
            }
            std::copy(pts[picked], pts[picked] + kDescriptorDim,
                      vocab.centroids[c].begin());
            parallel_for(n, [&](std::size_t i) {
                const double nd = dist2_64(pts[i], vocab.centroids[c].data());
                if (nd < d2[i]) d2[i] = nd;
            });
        }
    }

    if (stats) {
        *stats = KMeansStats{};
        stats->requested_K = K;
        stats->effective_K = K_eff;
    }

    // Lloyd iterations to an exact assignment fixpoint.
    std::vector<int> assign(n, -1), prev_assign;
    std::vector<double> cnorm2(K_eff);
    std::vector<std::array<double, kDescriptorDim>> acc(K_eff);
    std::vector<std::size_t> counts(K_eff);
    double prev_inertia = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iters; ++iter) {
        for (int k = 0; k < K_eff; ++k)
            cnorm2[k] = dot64(vocab.centroids[k].data(), vocab.centroids[k].data());
        parallel_for(n, [&](std::size_t i) {
            const int k = nearest_centroid(pts[i], vocab.centroids, cnorm2);
            assign[i] = k;
            d2[i] = dist2_64(pts[i], vocab.centroids[k].data());
        });
        double inertia = 0;
        for (std::size_t i = 0; i < n; ++i) inertia += d2[i];
        if (inertia > prev_inertia * (1.0 + 1e-12) + 1e-12)
            throw InternalError("k-means inertia increased");
        prev_inertia = inertia;
        if (stats) {
            stats->inertia_per_iter.push_back(inertia);
            stats->iterations = iter + 1;
        }
        if (assign == prev_assign) {
            if (stats) stats->converged = true;
            break;
        }
        prev_assign = assign;

        for (auto& a : acc) a.fill(0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* p = pts[i];
            auto& a = acc[assign[i]];
            for (int j = 0; j < kDescriptorDim; ++j) a[j] += p[j];
            ++counts[assign[i]];
        }
        for (int k = 0; k < K_eff; ++k) {
            if (counts[k] == 0) continue;
            const double inv = 1.0 / static_cast<double>(counts[k]);
            for (int j = 0; j < kDescriptorDim; ++j)
                vocab.centroids[k][j] = acc[k][j] * inv;
        }
        for (int k = 0; k < K_eff; ++k) {
            if (counts[k] != 0) continue;
            // Reseed at the point farthest from its centroid.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i)
                if (d2[i] > far_d) {
                    far_d = d2[i];
                    far = i;
                }
            std::copy(pts[far], pts[far] + kDescriptorDim,
                      vocab.centroids[k].begin());
            d2[far] = 0.0;
            if (stats) ++stats->empty_repairs;
        }
    }
    return vocab;
}

BowHistogram quantize(const FeatureSet& fs, const Vocabulary& vocab) {
    if (vocab.K < 1 || vocab.centroids.empty())
        throw std::invalid_argument("quantize: empty vocabulary");
    BowHistogram h;
    h.image_id = fs.image_id;
    h.counts.assign(vocab.K, 0.0);

    const std::size_t n = fs.descriptors.size();
    std::vector<int> word(n, -1);
    std::vector<double> cnorm2(vocab.K);
    for (int k = 0; k < vocab.K; ++k)
        cnorm2[k] = dot64(vocab.centroids[k].data(), vocab.centroids[k].data());
    parallel_for(n, [&](std::size_t i) {
        const Descriptor& d = fs.descriptors[i];
        if (!is_zero_descriptor(d))
            word[i] = nearest_centroid(d.v.data(), vocab.centroids, cnorm2);
    });
    for (std::size_t i = 0; i < n; ++i)
        if (word[i] >= 0) h.counts[word[i]] += 1.0;
    return h;
}

double cosine(const BowHistogram& a, const BowHistogram& b) {
    if (a.counts.size() != b.counts.size())
        throw std::invalid_argument("cosine: histogram lengths differ");
    const std::size_t n = a.counts.size();
    if (n == 0) return 0.0;
    const double na2 = dotn(a.counts.data(), a.counts.data(), n);
    const double nb2 = dotn(b.counts.data(), b.counts.data(), n);
    if (na2 == 0.0 || nb2 == 0.0) return 0.0;
    const double s = dotn(a.counts.data(), b.counts.data(), n);
    const double r = s / std::sqrt(na2 * nb2);
    return std::clamp(r, 0.0, 1.0);
}

std::vector<double> idf_weights(const std::vector<BowHistogram>& corpus) {
    if (corpus.empty()) return {};
    const std::size_t K = corpus.front().counts.size();
    std::vector<double> df(K, 0.0);
    for (const BowHistogram& h : corpus) {
        if (h.counts.size() != K)
            throw std::invalid_argument("idf_weights: histogram lengths differ");
        for (std::size_t j = 0; j < K; ++j)
            if (h.counts[j] > 0) df[j] += 1.0;
    }
    std::vector<double> w(K);
    const double N = static_cast<double>(corpus.size());
    for (std::size_t j = 0; j < K; ++j) w[j] = std::log((1.0 + N) / (1.0 + df[j]));
    return w;
}

BowHistogram apply_weights(const BowHistogram& h, const std::vector<double>& w) {
    if (h.counts.size() != w.size())
        throw std::invalid_argument("apply_weights: length mismatch");
    BowHistogram out = h;
    for (std::size_t j = 0; j < w.size(); ++j) out.counts[j] *= w[j];
    return out;
}

namespace {
constexpr char kVocabMagic[4] = {'S', 'R', 'V', 'C'};
constexpr std::uint32_t kVocabVersion = 1;
}  // namespace

std::string serialize_vocabulary(const Vocabulary& v) {
    std::string out;
    out.append(kVocabMagic, 4);
    binio::put<std::uint32_t>(out, kVocabVersion);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(v.K));
    binio::put<std::uint32_t>(out, kDescriptorDim);
    binio::put<std::uint64_t>(out, v.seed);
    binio::put_string(out, v.source_tag);
    for (const auto& c : v.centroids)
        for (double x : c) binio::put<float>(out, static_cast<float>(x));
    binio::put<std::uint64_t>(out, fnv1a64(out.data(), out.size()));
    return out;
}

Vocabulary deserialize_vocabulary(const std::string& bytes) {
    if (bytes.size() < 8 + sizeof(std::uint64_t))
        throw DataError("vocabulary file truncated");
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    binio::Reader tail(bytes.data() + body, sizeof(std::uint64_t));
    if (tail.get<std::uint64_t>() != fnv1a64(bytes.data(), body))
        throw DataError("vocabulary file checksum mismatch");

    binio::Reader rd(bytes.data(), body);
    char magic[4];
    for (char& c : magic) c = rd.get<char>();
    if (std::memcmp(magic, kVocabMagic, 4) != 0)
        throw DataError("not a vocabulary file");
    if (rd.get<std::uint32_t>() != kVocabVersion)
        throw DataError("unsupported vocabulary file version");

    Vocabulary v;
    v.K = static_cast<int>(rd.get<std::uint32_t>());
    if (rd.get<std::uint32_t>() != kDescriptorDim)
        throw DataError("vocabulary dimension mismatch");
    v.seed = rd.get<std::uint64_t>();
    v.source_tag = rd.get_string();
    if (v.K < 1) throw DataError("vocabulary has no words");
    v.centroids.resize(v.K);
    for (auto& c : v.centroids)
        for (double& x : c) x = rd.get<float>();
    if (rd.remaining() != 0) throw DataError("vocabulary file has trailing bytes");
    return v;
}

std::string histogram_to_sparse_text(const BowHistogram& h) {
    std::ostringstream ss;
    ss << "# image_id " << h.image_id << " K " << h.counts.size() << "\n";
    char buf[40];
    for (std::size_t j = 0; j < h.counts.size(); ++j) {
        if (h.counts[j] == 0.0) continue;
        std::snprintf(buf, sizeof buf, "%zu:%.9g\n", j, h.counts[j]);
        ss << buf;
    }
    return ss.str();
}

}  // namespace simret
