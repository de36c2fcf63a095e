#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace simret {

/// A 2D grayscale intensity field with values in [0,1], stored row-major.
/// The universal currency for originals and representation rasters.
struct GrayRaster {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;  // size width*height, row-major
    std::string id;

    GrayRaster() = default;
    GrayRaster(int w, int h, std::string id_ = {});

    float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return pixels.size(); }

    // Throws InternalError if dimensions/pixel-count/range are inconsistent.
    void validate() const;
};

/// Rigid motion: rotation (degrees, positive = counter-clockwise) about the
/// geometric image center ((w-1)/2, (h-1)/2), followed by translation in px.
struct RigidTransform {
    double rotation_deg = 0.0;
    double tx = 0.0;
    double ty = 0.0;

    static RigidTransform identity() { return {}; }
    bool is_identity() const {
        return rotation_deg == 0.0 && tx == 0.0 && ty == 0.0;
    }

    // Maps a source point to its destination, for an image of the given size.
    void forward(double x, double y, int width, int height,
                 double& ox, double& oy) const;

    // The transform s with s(forward(p)) == p about the same pivot.
    RigidTransform inverse() const;
};

/// Summed-area table; sums(x,y) = sum of pixels with coords <= (x,y).
/// Rectangle sums treat everything outside the image as zero.
class IntegralImage {
public:
    explicit IntegralImage(const GrayRaster& r);

    int width() const { return width_; }
    int height() const { return height_; }

    // Inclusive rectangle [x0,x1] x [y0,y1]; coordinates are clamped, so
    // callers may pass ranges that extend past the borders.
    double rect_sum(int x0, int y0, int x1, int y1) const;

    double at(int x, int y) const {
        return sums_[static_cast<std::size_t>(y + 1) * (width_ + 1) + (x + 1)];
    }

private:
    int width_;
    int height_;
    std::vector<double> sums_;  // (w+1)x(h+1), zero border row/column
};

/// v -> log(1 + c*v)/log(1 + c) with c = 255. Monotone, fixes 0 and 1.
GrayRaster log_transform(const GrayRaster& r);

/// Resamples r under t with bilinear interpolation; same output size, the
/// out-of-domain region fills with 0.
GrayRaster apply_transform(const GrayRaster& r, const RigidTransform& t);

/// size x size sub-image with origin (x0,y0). Throws if out of bounds.
GrayRaster crop(const GrayRaster& r, int x0, int y0, int size,
                const std::string& id = {});

/// Central size x size crop; origin (floor((w-size)/2), floor((h-size)/2)).
GrayRaster center_crop(const GrayRaster& r, int size);

/// Pearson correlation of a against b realigned by the inverse of t, over
/// the overlap mask (pixels of a whose forward-mapped location lies inside
/// b's domain). Throws DataError on empty overlap or zero variance.
double overlap_correlation(const GrayRaster& a, const GrayRaster& b,
                           const RigidTransform& t);

}  // namespace simret
