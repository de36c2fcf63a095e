#include "simret/raster.hpp"

#include <cmath>
#include <cstddef>

#include "simret/error.hpp"

namespace simret {

namespace {
std::size_t checked_area(int w, int h) {
    if (w <= 0 || h <= 0) throw DataError("raster dimensions must be positive");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
}
}  // namespace

GrayRaster::GrayRaster(int w, int h, std::string id_)
    : width(w), height(h), pixels(checked_area(w, h), 0.0f), id(std::move(id_)) {}

void GrayRaster::validate() const {
    if (width <= 0 || height <= 0)
        throw InternalError("raster has zero dimension");
    if (pixels.size() != static_cast<std::size_t>(width) * height)
        throw InternalError("raster pixel count does not match dimensions");
    for (float v : pixels)
        if (!(v >= 0.0f && v <= 1.0f))
            throw InternalError("raster intensity outside [0,1]");
}

// Rotation convention: positive angles turn the content counter-clockwise
// as displayed (raster y grows downward), i.e. offsets map through
// [cos  sin; -sin  cos].
void RigidTransform::forward(double x, double y, int width, int height,
                             double& ox, double& oy) const {
    const double cx = (width - 1) / 2.0;
    const double cy = (height - 1) / 2.0;
    const double rad = rotation_deg * M_PI / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double dx = x - cx;
    const double dy = y - cy;
    ox = cx + c * dx + s * dy + tx;
    oy = cy - s * dx + c * dy + ty;
}

RigidTransform RigidTransform::inverse() const {
    const double rad = rotation_deg * M_PI / 180.0;
    const double c = std::cos(-rad);
    const double s = std::sin(-rad);
    RigidTransform inv;
    inv.rotation_deg = -rotation_deg;
    inv.tx = -(c * tx + s * ty);
    inv.ty = -(-s * tx + c * ty);
    return inv;
}

IntegralImage::IntegralImage(const GrayRaster& r)
    : width_(r.width), height_(r.height),
      sums_(static_cast<std::size_t>(r.width + 1) * (r.height + 1), 0.0) {
    const std::size_t stride = width_ + 1;
    for (int y = 0; y < height_; ++y) {
        double row = 0.0;
        const std::size_t src = static_cast<std::size_t>(y) * width_;
        const std::size_t dst = static_cast<std::size_t>(y + 1) * stride;
        for (int x = 0; x < width_; ++x) {
            row += r.pixels[src + x];
            sums_[dst + x + 1] = sums_[dst - stride + x + 1] + row;
        }
    }
}

double IntegralImage::rect_sum(int x0, int y0, int x1, int y1) const {
    if (x0 < 0) x0 = 0;
    if (y0 < 0) y0 = 0;
    if (x1 >= width_) x1 = width_ - 1;
    if (y1 >= height_) y1 = height_ - 1;
    if (x0 > x1 || y0 > y1) return 0.0;
    const std::size_t stride = width_ + 1;
    const double* s = sums_.data();
    return s[(y1 + 1) * stride + (x1 + 1)] - s[y0 * stride + (x1 + 1)] -
           s[(y1 + 1) * stride + x0] + s[y0 * stride + x0];
}

GrayRaster log_transform(const GrayRaster& r) {
    static const double denom = std::log1p(255.0);
    GrayRaster out(r.width, r.height, r.id);
    for (std::size_t i = 0; i < r.pixels.size(); ++i)
        out.pixels[i] = static_cast<float>(std::log1p(255.0 * r.pixels[i]) / denom);
    return out;
}

namespace {

// Bilinear sample; caller guarantees sx,sy within [0,w-1]x[0,h-1].
inline float sample_bilinear(const GrayRaster& r, double sx, double sy) {
    int x0 = static_cast<int>(std::floor(sx));
    int y0 = static_cast<int>(std::floor(sy));
    const double fx = sx - x0;
    const double fy = sy - y0;
    const int x1 = (x0 + 1 < r.width) ? x0 + 1 : x0;
    const int y1 = (y0 + 1 < r.height) ? y0 + 1 : y0;
    const double v00 = r.at(x0, y0);
    const double v10 = r.at(x1, y0);
    const double v01 = r.at(x0, y1);
    const double v11 = r.at(x1, y1);
    const double top = v00 + fx * (v10 - v00);
    const double bot = v01 + fx * (v11 - v01);
    return static_cast<float>(top + fy * (bot - top));
}

}  // namespace

GrayRaster apply_transform(const GrayRaster& r, const RigidTransform& t) {
    GrayRaster out(r.width, r.height, r.id);
    const RigidTransform inv = t.inverse();
    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            double sx, sy;
            inv.forward(x, y, r.width, r.height, sx, sy);
            if (sx >= 0.0 && sx <= r.width - 1 && sy >= 0.0 && sy <= r.height - 1)
                out.at(x, y) = sample_bilinear(r, sx, sy);
        }
    }
    return out;
}

GrayRaster crop(const GrayRaster& r, int x0, int y0, int size,
                const std::string& id) {
    if (size <= 0 || x0 < 0 || y0 < 0 || x0 + size > r.width ||
        y0 + size > r.height)
        throw DataError("crop window outside image bounds");
    GrayRaster out(size, size, id.empty() ? r.id : id);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            out.at(x, y) = r.at(x0 + x, y0 + y);
    return out;
}

GrayRaster center_crop(const GrayRaster& r, int size) {
    if (size > r.width || size > r.height)
        throw DataError("center_crop size exceeds image dimension");
    return crop(r, (r.width - size) / 2, (r.height - size) / 2, size);
}

double overlap_correlation(const GrayRaster& a, const GrayRaster& b,
                           const RigidTransform& t) {
    if (a.width != b.width || a.height != b.height)
        throw DataError("overlap_correlation requires equal dimensions");
    std::vector<double> va, vb;
    va.reserve(a.size());
    vb.reserve(a.size());
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            double bx, by;
            t.forward(x, y, a.width, a.height, bx, by);
            if (bx >= 0.0 && bx <= b.width - 1 && by >= 0.0 && by <= b.height - 1) {
                va.push_back(a.at(x, y));
                vb.push_back(sample_bilinear(b, bx, by));
            }
        }
    }
    if (va.empty())
        throw DataError("overlap_correlation: empty overlap mask");
    const double n = static_cast<double>(va.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        ma += va[i];
        mb += vb[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double da = va[i] - ma;
        const double db = vb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw DataError("overlap_correlation: zero variance on overlap mask");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace simret
