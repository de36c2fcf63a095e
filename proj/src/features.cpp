#include "simret/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "simret/binio.hpp"
#include "simret/error.hpp"
#include "simret/hash.hpp"
#include "simret/parallel.hpp"

namespace simret {

namespace {

constexpr int kSamplesPerSide = 20;  // 5x5 samples per 4x4 subregion

struct HaarPoint {
    double dx = 0;
    double dy = 0;
};

// Box-filter Haar responses at an integer point. The window has side 2*half;
// responses are normalized to mean-intensity differences. dx grows with
// intensity increasing rightward, dy with intensity increasing downward.
// Samples whose window exits the raster are skipped entirely (returns false):
// clamped partial boxes would make the responses depend on absolute intensity.
bool haar(const IntegralImage& ii, int px, int py, int half, HaarPoint& h) {
    if (px - half < 0 || py - half < 0 || px + half - 1 >= ii.width() ||
        py + half - 1 >= ii.height())
        return false;
    const double area = static_cast<double>(half) * (2 * half);
    h.dx = (ii.rect_sum(px, py - half, px + half - 1, py + half - 1) -
            ii.rect_sum(px - half, py - half, px - 1, py + half - 1)) /
           area;
    h.dy = (ii.rect_sum(px - half, py, px + half - 1, py + half - 1) -
            ii.rect_sum(px - half, py - half, px + half - 1, py - 1)) /
           area;
    return true;
}

int haar_half(int scale) {
    return std::max(1, static_cast<int>(std::llround(scale / 16.0)));
}

}  // namespace

void ExtractorConfig::validate() const {
    if (grid_spacing < 1)
        throw std::invalid_argument("grid_spacing must be >= 1");
    if (scales.empty())
        throw std::invalid_argument("at least one scale is required");
    int prev = 0;
    for (int s : scales) {
        if (s < 8 || s % 4 != 0)
            throw std::invalid_argument("every scale must be >= 8 and divisible by 4");
        if (s <= prev)
            throw std::invalid_argument("scales must be strictly increasing");
        prev = s;
    }
    if (!(strongest_fraction > 0.0 && strongest_fraction <= 1.0))
        throw std::invalid_argument("strongest_fraction must lie in (0,1]");
}

std::string ExtractorConfig::cache_key_material() const {
    std::ostringstream ss;
    ss << "spacing=" << grid_spacing << ";scales=";
    for (std::size_t i = 0; i < scales.size(); ++i)
        ss << (i ? "," : "") << scales[i];
    char frac[40];
    std::snprintf(frac, sizeof frac, "%.17g", strongest_fraction);
    ss << ";upright=" << (upright ? 1 : 0) << ";fraction=" << frac
       << ";algo=" << kDescriptorAlgoVersion;
    return ss.str();
}

Descriptor compute_descriptor(const IntegralImage& ii, double cx, double cy,
                              int scale, double orientation_deg) {
    Descriptor d;
    d.x = cx;
    d.y = cy;
    d.scale = scale;
    d.orientation_deg = orientation_deg;

    const double rad = orientation_deg * std::numbers::pi / 180.0;
    const double co = std::cos(rad);
    const double si = std::sin(rad);
    const int half = haar_half(scale);
    const double sigma = scale / 4.0;
    const double step = static_cast<double>(scale) / kSamplesPerSide;

    for (int j = 0; j < kSamplesPerSide; ++j) {
        const double v = (j + 0.5) * step - scale / 2.0;
        for (int i = 0; i < kSamplesPerSide; ++i) {
            const double u = (i + 0.5) * step - scale / 2.0;
            // Rotate the sampling lattice counter-clockwise as displayed
            // (raster y grows downward, hence the sign split).
            const double offx = co * u + si * v;
            const double offy = -si * u + co * v;
            const int px = static_cast<int>(std::llround(cx + offx));
            const int py = static_cast<int>(std::llround(cy + offy));
            HaarPoint h;
            if (!haar(ii, px, py, half, h)) continue;
            // Rotate responses back into the patch frame.
            const double dx = co * h.dx - si * h.dy;
            const double dy = si * h.dx + co * h.dy;
            const double w = std::exp(-(u * u + v * v) / (2.0 * sigma * sigma));
            const double wdx = w * dx;
            const double wdy = w * dy;
            const int base = ((j / 5) * 4 + (i / 5)) * 4;
            d.v[base + 0] += wdx;
            d.v[base + 1] += wdy;
            d.v[base + 2] += std::abs(wdx);
            d.v[base + 3] += std::abs(wdy);
        }
    }

    double norm2 = 0;
    for (double x : d.v) norm2 += x * x;
    const double norm = std::sqrt(norm2);
    d.strength = norm;
    if (norm > 0)
        for (double& x : d.v) x /= norm;
    return d;
}

double assign_orientation(const IntegralImage& ii, double x, double y, int scale) {
    const int step = std::max(1, static_cast<int>(std::llround(scale / 16.0)));
    const double radius = 6.0 * (scale / 16.0);
    if (x - radius < 0 || y - radius < 0 || x + radius > ii.width() - 1 ||
        y + radius > ii.height() - 1)
        throw std::invalid_argument("orientation neighborhood outside image");

    const int half = 2 * step;  // Haar window side 4*step
    struct Sample {
        double gx, gy, angle;
    };
    std::vector<Sample> samples;
    samples.reserve(113);
    for (int iy = -6; iy <= 6; ++iy) {
        for (int ix = -6; ix <= 6; ++ix) {
            if (ix * ix + iy * iy > 36) continue;
            const int px = static_cast<int>(std::llround(x)) + ix * step;
            const int py = static_cast<int>(std::llround(y)) + iy * step;
            HaarPoint h;
            if (!haar(ii, px, py, half, h)) continue;
            // Gaussian weight (sigma 2.5) on the lattice radius.
            const double w = std::exp(-(ix * ix + iy * iy) / (2.0 * 2.5 * 2.5));
            const double gx = w * h.dx;
            const double gy = -w * h.dy;  // angles counter-clockwise as displayed
            if (gx == 0 && gy == 0) continue;
            samples.push_back({gx, gy, std::atan2(gy, gx)});
        }
    }
    if (samples.empty()) return 0.0;

    // Sliding 60 degree window over candidate start angles; the window with
    // the largest summed response magnitude wins (lowest start on ties).
    constexpr int kWindows = 120;
    constexpr double kWindowRad = std::numbers::pi / 3.0;
    double best_mag2 = -1.0, best_angle = 0.0;
    for (int k = 0; k < kWindows; ++k) {
        const double start = -std::numbers::pi + k * (2.0 * std::numbers::pi / kWindows);
        double sx = 0, sy = 0;
        for (const Sample& s : samples) {
            double rel = s.angle - start;
            rel -= 2.0 * std::numbers::pi * std::floor(rel / (2.0 * std::numbers::pi));
            if (rel < kWindowRad) {
                sx += s.gx;
                sy += s.gy;
            }
        }
        const double mag2 = sx * sx + sy * sy;
        if (mag2 > best_mag2) {
            best_mag2 = mag2;
            best_angle = std::atan2(sy, sx);
        }
    }
    if (best_mag2 <= 0.0) return 0.0;
    return best_angle * 180.0 / std::numbers::pi;
}

FeatureSet extract_grid(const GrayRaster& r, const ExtractorConfig& cfg) {
    cfg.validate();
    r.validate();

    FeatureSet fs;
    fs.image_id = r.id;

    struct Job {
        int gx, gy, scale;
    };
    std::vector<Job> jobs;
    for (int gy = 0; gy < r.height; gy += cfg.grid_spacing)
        for (int gx = 0; gx < r.width; gx += cfg.grid_spacing)
            for (int s : cfg.scales) {
                const int h = s / 2;
                if (gx - h >= 0 && gx + h <= r.width && gy - h >= 0 &&
                    gy + h <= r.height)
                    jobs.push_back({gx, gy, s});
            }

    if (jobs.empty()) {
        if (r.width < cfg.scales.front() || r.height < cfg.scales.front())
            std::cerr << "warning: image '" << r.id
                      << "' is smaller than the smallest scale; no features\n";
        return fs;
    }

    const IntegralImage ii(r);
    fs.descriptors.resize(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const Job& j = jobs[i];
        double orient = 0.0;
        if (!cfg.upright) orient = assign_orientation(ii, j.gx, j.gy, j.scale);
        fs.descriptors[i] = compute_descriptor(ii, j.gx, j.gy, j.scale, orient);
    });
    return fs;
}

FeatureSet select_strongest(const FeatureSet& fs, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("fraction must lie in (0,1]");
    FeatureSet out;
    out.image_id = fs.image_id;
    const std::size_t n = fs.descriptors.size();
    if (n == 0) return out;

    const auto keep = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fs.descriptors[a].strength > fs.descriptors[b].strength;
    });
    order.resize(std::min(keep, n));
    std::sort(order.begin(), order.end());
    out.descriptors.reserve(order.size());
    for (std::size_t i : order) out.descriptors.push_back(fs.descriptors[i]);
    return out;
}

void canonicalize_f32(FeatureSet& fs) {
    auto f32 = [](double x) { return static_cast<double>(static_cast<float>(x)); };
    for (Descriptor& d : fs.descriptors) {
        d.x = f32(d.x);
        d.y = f32(d.y);
        d.scale = f32(d.scale);
        d.orientation_deg = f32(d.orientation_deg);
        d.strength = f32(d.strength);
        for (double& x : d.v) x = f32(x);
    }
}

namespace {
constexpr char kFeatureMagic[4] = {'S', 'R', 'F', 'S'};
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

std::string serialize_features(const FeatureSet& fs) {
    std::string out;
    out.append(kFeatureMagic, 4);
    binio::put<std::uint32_t>(out, kFeatureVersion);
    binio::put_string(out, fs.image_id);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(fs.descriptors.size()));
    for (const Descriptor& d : fs.descriptors) {
        binio::put<float>(out, static_cast<float>(d.x));
        binio::put<float>(out, static_cast<float>(d.y));
        binio::put<float>(out, static_cast<float>(d.scale));
        binio::put<float>(out, static_cast<float>(d.orientation_deg));
        binio::put<float>(out, static_cast<float>(d.strength));
        for (double x : d.v) binio::put<float>(out, static_cast<float>(x));
    }
    binio::put<std::uint64_t>(out, fnv1a64(out.data(), out.size()));
    return out;
}

FeatureSet deserialize_features(const std::string& bytes) {
    if (bytes.size() < 8 + sizeof(std::uint64_t))
        throw DataError("feature file truncated");
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    binio::Reader tail(bytes.data() + body, sizeof(std::uint64_t));
    if (tail.get<std::uint64_t>() != fnv1a64(bytes.data(), body))
        throw DataError("feature file checksum mismatch");

    binio::Reader rd(bytes.data(), body);
    char magic[4];
    for (char& c : magic) c = rd.get<char>();
    if (std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw DataError("not a feature file");
    if (rd.get<std::uint32_t>() != kFeatureVersion)
        throw DataError("unsupported feature file version");

    FeatureSet fs;
    fs.image_id = rd.get_string();
    const auto count = rd.get<std::uint32_t>();
    fs.descriptors.resize(count);
    for (Descriptor& d : fs.descriptors) {
        d.x = rd.get<float>();
        d.y = rd.get<float>();
        d.scale = rd.get<float>();
        d.orientation_deg = rd.get<float>();
        d.strength = rd.get<float>();
        for (double& x : d.v) x = rd.get<float>();
    }
    if (rd.remaining() != 0) throw DataError("feature file has trailing bytes");
    return fs;
}

std::string features_to_text(const FeatureSet& fs) {
    std::ostringstream ss;
    ss << "# image_id " << fs.image_id << "\n";
    ss << "# x y scale orientation strength v0..v63\n";
    char buf[32];
    for (const Descriptor& d : fs.descriptors) {
        const double head[5] = {d.x, d.y, d.scale, d.orientation_deg, d.strength};
        for (double x : head) {
            std::snprintf(buf, sizeof buf, "%.9g ", x);
            ss << buf;
        }
        for (int i = 0; i < kDescriptorDim; ++i) {
            std::snprintf(buf, sizeof buf, "%.9g", d.v[i]);
            ss << buf << (i + 1 == kDescriptorDim ? "\n" : " ");
        }
    }
    return ss.str();
}

}  // namespace simret
