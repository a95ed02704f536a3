#include "logmosaic/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace logmosaic {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("raster dimensions must be at least 1x1, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
}

}  // namespace

Raster::Raster(int width, int height, double fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    if (!std::isfinite(fill)) throw std::invalid_argument("raster fill value must be finite");
    samples_.assign(std::size_t(width) * height, fill);
}

Raster::Raster(int width, int height, std::vector<double> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
    check_dims(width, height);
    if (samples_.size() != std::size_t(width) * height) {
        throw std::invalid_argument("raster sample count does not match dimensions");
    }
    for (double s : samples_) {
        if (!std::isfinite(s)) throw std::invalid_argument("raster samples must be finite");
    }
}

Raster Raster::from_u8(int width, int height, const std::uint8_t* data) {
    check_dims(width, height);
    std::vector<double> samples(std::size_t(width) * height);
    for (std::size_t i = 0; i < samples.size(); ++i) samples[i] = double(data[i]);
    return Raster(width, height, std::move(samples));
}

RegionMask::RegionMask(int width, int height, bool fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    valid_.assign(std::size_t(width) * height, fill ? 1 : 0);
}

RegionMask::RegionMask(int width, int height, std::vector<std::uint8_t> valid)
    : width_(width), height_(height), valid_(std::move(valid)) {
    check_dims(width, height);
    if (valid_.size() != std::size_t(width) * height) {
        throw std::invalid_argument("mask cell count does not match dimensions");
    }
    for (auto& v : valid_) v = v ? 1 : 0;
}

bool RegionMask::valid_bilinear(double x, double y) const {
    if (!(x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1)) return false;
    int x0 = int(x);
    int y0 = int(y);
    int x1 = std::min(x0 + 1, width_ - 1);
    int y1 = std::min(y0 + 1, height_ - 1);
    return valid(x0, y0) && valid(x1, y0) && valid(x0, y1) && valid(x1, y1);
}

int RegionMask::valid_count() const {
    return int(std::count(valid_.begin(), valid_.end(), std::uint8_t(1)));
}

RegionMask RegionMask::intersect(const RegionMask& other) const {
    if (other.width_ != width_ || other.height_ != height_) {
        throw std::invalid_argument("mask dimensions differ in intersect");
    }
    std::vector<std::uint8_t> out(valid_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = valid_[i] & other.valid_[i];
    return RegionMask(width_, height_, std::move(out));
}

ValidityMap::ValidityMap(int width, int height, std::vector<std::uint8_t> valid)
    : width_(width), height_(height), valid_(std::move(valid)) {
    check_dims(width, height);
    if (valid_.size() != std::size_t(width) * height) {
        throw std::invalid_argument("validity cell count does not match dimensions");
    }
}

int ValidityMap::valid_count() const {
    return int(std::count(valid_.begin(), valid_.end(), std::uint8_t(1)));
}

double sample_bilinear(const Raster& img, double x, double y) {
    if (!(x >= 0.0 && y >= 0.0 && x <= img.width() - 1 && y <= img.height() - 1)) {
        throw std::domain_error("bilinear sample outside image domain");
    }
    int x0 = int(x);
    int y0 = int(y);
    int x1 = std::min(x0 + 1, img.width() - 1);
    int y1 = std::min(y0 + 1, img.height() - 1);
    double fx = x - x0;
    double fy = y - y0;
    double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
    double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
    return (1.0 - fy) * top + fy * bottom;
}

Gradient gradient_central(const Raster& img, int x, int y) {
    if (x < 1 || y < 1 || x > img.width() - 2 || y > img.height() - 2) {
        throw std::domain_error("central gradient needs an interior pixel");
    }
    return {(img.at(x + 1, y) - img.at(x - 1, y)) / 2.0,
            (img.at(x, y + 1) - img.at(x, y - 1)) / 2.0};
}

ValidityMap erode_for_template(const RegionMask& mask, int half_extent) {
    if (half_extent < 0) throw std::invalid_argument("half_extent must be non-negative");
    const int w = mask.width();
    const int h = mask.height();

    // Summed-area table of the valid grid; a center is valid iff its full
    // square footprint is in bounds and sums to the footprint area.
    std::vector<std::int64_t> sat(std::size_t(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = mask.row(y);
        std::int64_t acc = 0;
        for (int x = 0; x < w; ++x) {
            acc += row[x] ? 1 : 0;
            sat[std::size_t(y + 1) * (w + 1) + (x + 1)] =
                sat[std::size_t(y) * (w + 1) + (x + 1)] + acc;
        }
    }
    auto box_sum = [&](int x0, int y0, int x1, int y1) {
        return sat[std::size_t(y1 + 1) * (w + 1) + (x1 + 1)] -
               sat[std::size_t(y0) * (w + 1) + (x1 + 1)] -
               sat[std::size_t(y1 + 1) * (w + 1) + x0] +
               sat[std::size_t(y0) * (w + 1) + x0];
    };

    const std::int64_t footprint = std::int64_t(2 * half_extent + 1) * (2 * half_extent + 1);
    std::vector<std::uint8_t> out(std::size_t(w) * h, 0);
    for (int y = half_extent; y < h - half_extent; ++y) {
        for (int x = half_extent; x < w - half_extent; ++x) {
            if (box_sum(x - half_extent, y - half_extent,
                        x + half_extent, y + half_extent) == footprint) {
                out[std::size_t(y) * w + x] = 1;
            }
        }
    }
    return ValidityMap(w, h, std::move(out));
}

}  // namespace logmosaic
