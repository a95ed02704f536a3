#pragma once

#include <cstdint>
#include <vector>

#include "logmosaic/geometry.hpp"

namespace logmosaic {

// Single-channel luminance image. Samples are stored as doubles (nominally
// 0..255) in row-major order; integer pixel (x, y) lives at samples[y*w + x].
class Raster {
  public:
    Raster(int width, int height, double fill = 0.0);
    // Takes ownership of `samples`; throws std::invalid_argument if the size
    // does not match or any sample is non-finite.
    Raster(int width, int height, std::vector<double> samples);

    static Raster from_u8(int width, int height, const std::uint8_t* data);

    int width() const { return width_; }
    int height() const { return height_; }

    bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    double at(int x, int y) const { return samples_[std::size_t(y) * width_ + x]; }
    double& at(int x, int y) { return samples_[std::size_t(y) * width_ + x]; }

    const double* row(int y) const { return samples_.data() + std::size_t(y) * width_; }
    const std::vector<double>& samples() const { return samples_; }

  private:
    int width_;
    int height_;
    std::vector<double> samples_;
};

// Boolean validity grid paired with a Raster of the same dimensions
// (true = usable scene pixel, e.g. inside the endoscope's circular view).
class RegionMask {
  public:
    RegionMask(int width, int height, bool fill);
    RegionMask(int width, int height, std::vector<std::uint8_t> valid);

    static RegionMask full(int width, int height) { return RegionMask(width, height, true); }

    int width() const { return width_; }
    int height() const { return height_; }

    // Out-of-bounds positions count as invalid.
    bool valid(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_ &&
               valid_[std::size_t(y) * width_ + x] != 0;
    }

    // True when a bilinear read at real coordinates (x, y) touches only
    // valid pixels (all four surrounding grid cells valid and in bounds).
    bool valid_bilinear(double x, double y) const;

    int valid_count() const;

    RegionMask intersect(const RegionMask& other) const;

    const std::uint8_t* row(int y) const { return valid_.data() + std::size_t(y) * width_; }

  private:
    int width_;
    int height_;
    std::vector<std::uint8_t> valid_;
};

// Per-position result of eroding a RegionMask by a template footprint:
// valid(x, y) means the full square of the given half-extent centered at
// (x, y) is in bounds and mask-valid.
class ValidityMap {
  public:
    ValidityMap(int width, int height, std::vector<std::uint8_t> valid);

    int width() const { return width_; }
    int height() const { return height_; }

    bool valid(int x, int y) const {
        return x >= 0 && y >= 0 && x < width_ && y < height_ &&
               valid_[std::size_t(y) * width_ + x] != 0;
    }

    int valid_count() const;

  private:
    int width_;
    int height_;
    std::vector<std::uint8_t> valid_;
};

// Bilinear interpolation of the four surrounding samples; exact at integer
// coordinates. Throws std::domain_error outside [0, w-1] x [0, h-1].
double sample_bilinear(const Raster& img, double x, double y);

struct Gradient {
    double ix = 0.0;
    double iy = 0.0;
};

// Central differences; throws std::domain_error on border pixels.
Gradient gradient_central(const Raster& img, int x, int y);

// Chebyshev (square structuring element) erosion sized for a template of the
// given half-extent. half_extent = 0 reproduces the in-bounds mask.
ValidityMap erode_for_template(const RegionMask& mask, int half_extent);

}  // namespace logmosaic
