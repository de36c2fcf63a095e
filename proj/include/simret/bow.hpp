#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "simret/features.hpp"

namespace simret {

struct Vocabulary {
    int K = 0;
    std::uint64_t seed = 0;
    std::string source_tag;
    std::vector<std::array<double, kDescriptorDim>> centroids;
};

struct BowHistogram {
    std::string image_id;
    std::vector<double> counts;
};

struct KMeansStats {
    int requested_K = 0;
    int effective_K = 0;
    int iterations = 0;
    int empty_repairs = 0;
    std::vector<double> inertia_per_iter;
    bool converged = false;
};

// Lloyd's k-means with k-means++ seeding over all non-zero descriptors.
// K is clamped to the number of distinct descriptors; empty clusters are
// reseeded at the point currently farthest from its centroid; iteration
// stops at an exact assignment fixpoint or after max_iters rounds.
// Bit-reproducible for fixed inputs regardless of thread count.
Vocabulary build_vocabulary(const std::vector<FeatureSet>& sets, int K,
                            std::uint64_t seed, int max_iters = 100,
                            const std::string& source_tag = {},
                            KMeansStats* stats = nullptr);

// Counts each non-zero descriptor into its nearest centroid (Euclidean,
// ties to the lowest index). Empty inputs yield the all-zero histogram.
BowHistogram quantize(const FeatureSet& fs, const Vocabulary& vocab);

// dot(a,b)/(|a||b|), 0 if either norm is 0; clamped to [0,1] for the
// nonnegative histograms used here.
double cosine(const BowHistogram& a, const BowHistogram& b);

// Optional idf weighting: log((1+N)/(1+df)) per word over a corpus. Off by
// default everywhere; multiply into histogram counts to enable.
std::vector<double> idf_weights(const std::vector<BowHistogram>& corpus);
BowHistogram apply_weights(const BowHistogram& h, const std::vector<double>& w);

std::string serialize_vocabulary(const Vocabulary& v);
Vocabulary deserialize_vocabulary(const std::string& bytes);
std::string histogram_to_sparse_text(const BowHistogram& h);

// Fixed-order dot product helpers shared by the modules; deterministic
// independent of optimization since the accumulation tree is explicit.
double dot64(const double* a, const double* b);
double dist2_64(const double* a, const double* b);

}  // namespace simret
