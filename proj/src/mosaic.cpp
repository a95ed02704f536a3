#include "logmosaic/mosaic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "logmosaic/error.hpp"

namespace logmosaic {

namespace {

// Keeps a runaway (near-singular) chain from allocating an absurd canvas.
constexpr std::int64_t kMaxCanvasPixels = std::int64_t(1) << 26;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - since)
        .count();
}

}  // namespace

Raster MosaicCanvas::to_raster() const {
    if (empty()) throw std::logic_error("empty canvas has no raster");
    std::vector<double> out(value_.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (count_[i] > 0) out[i] = value_[i];
    }
    return Raster(width_, height_, std::move(out));
}

RegionMask MosaicCanvas::coverage() const {
    if (empty()) throw std::logic_error("empty canvas has no coverage");
    std::vector<std::uint8_t> out(count_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = count_[i] > 0 ? 1 : 0;
    return RegionMask(width_, height_, std::move(out));
}

void MosaicCanvas::ensure_contains(int x0, int y0, int x1, int y1) {
    if (x1 < x0 || y1 < y0) throw std::invalid_argument("empty rect in ensure_contains");

    int nx0 = x0, ny0 = y0, nx1 = x1, ny1 = y1;
    if (!empty()) {
        nx0 = std::min(nx0, origin_.x);
        ny0 = std::min(ny0, origin_.y);
        nx1 = std::max(nx1, origin_.x + width_ - 1);
        ny1 = std::max(ny1, origin_.y + height_ - 1);
    }
    const std::int64_t nw = std::int64_t(nx1) - nx0 + 1;
    const std::int64_t nh = std::int64_t(ny1) - ny0 + 1;
    if (nw * nh > kMaxCanvasPixels) {
        throw std::length_error("mosaic canvas would exceed the pixel limit");
    }
    if (!empty() && nx0 == origin_.x && ny0 == origin_.y && nw == width_ && nh == height_) {
        return;
    }

    std::vector<double> value(std::size_t(nw * nh), 0.0);
    std::vector<double> sum(std::size_t(nw * nh), 0.0);
    std::vector<int> count(std::size_t(nw * nh), 0);
    if (!empty()) {
        const int dx = origin_.x - nx0;
        const int dy = origin_.y - ny0;
        for (int y = 0; y < height_; ++y) {
            const std::size_t src = std::size_t(y) * width_;
            const std::size_t dst = std::size_t(y + dy) * nw + dx;
            std::copy_n(value_.begin() + src, width_, value.begin() + dst);
            std::copy_n(sum_.begin() + src, width_, sum.begin() + dst);
            std::copy_n(count_.begin() + src, width_, count.begin() + dst);
        }
    }
    width_ = int(nw);
    height_ = int(nh);
    origin_ = {nx0, ny0};
    value_ = std::move(value);
    sum_ = std::move(sum);
    count_ = std::move(count);
}

void MosaicCanvas::composite(int cx, int cy, double sample, CompositePolicy policy) {
    if (cx < 0 || cy < 0 || cx >= width_ || cy >= height_) {
        throw std::out_of_range("composite position outside the canvas");
    }
    const std::size_t i = idx(cx, cy);
    sum_[i] += sample;
    switch (policy) {
        case CompositePolicy::last_wins:
            value_[i] = sample;
            break;
        case CompositePolicy::first_wins:
            if (count_[i] == 0) value_[i] = sample;
            break;
        case CompositePolicy::mean:
            value_[i] = (sum_[i]) / double(count_[i] + 1);
            break;
    }
    ++count_[i];
}

void warp_into(MosaicCanvas& canvas, const Raster& frame, const RegionMask& mask,
               const AffineMotion& motion_first_to_frame, CompositePolicy policy) {
    if (mask.width() != frame.width() || mask.height() != frame.height()) {
        throw std::invalid_argument("frame and mask dimensions differ");
    }
    const AffineMotion to_first = invert(motion_first_to_frame);

    // Frame footprint in first-frame coordinates.
    const double xs[2] = {0.0, double(frame.width() - 1)};
    const double ys[2] = {0.0, double(frame.height() - 1)};
    double minx = 0.0, miny = 0.0, maxx = 0.0, maxy = 0.0;
    bool first = true;
    for (double fx : xs) {
        for (double fy : ys) {
            const Vec2 p = to_first.position_at(fx, fy);
            if (first) {
                minx = maxx = p.x;
                miny = maxy = p.y;
                first = false;
            } else {
                minx = std::min(minx, p.x);
                maxx = std::max(maxx, p.x);
                miny = std::min(miny, p.y);
                maxy = std::max(maxy, p.y);
            }
        }
    }
    const int x0 = int(std::floor(minx));
    const int y0 = int(std::floor(miny));
    const int x1 = int(std::ceil(maxx));
    const int y1 = int(std::ceil(maxy));
    canvas.ensure_contains(x0, y0, x1, y1);

    const PixelPos origin = canvas.origin();
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const Vec2 p = motion_first_to_frame.position_at(x, y);
            if (!mask.valid_bilinear(p.x, p.y)) continue;
            canvas.composite(x - origin.x, y - origin.y,
                             sample_bilinear(frame, p.x, p.y), policy);
        }
    }
}

const char* to_string(FrameStatus status) {
    switch (status) {
        case FrameStatus::ok: return "ok";
        case FrameStatus::failed: return "failed";
        case FrameStatus::skipped: return "skipped";
    }
    return "unknown";
}

const char* to_string(InitMode mode) {
    switch (mode) {
        case InitMode::zero: return "zero";
        case InitMode::previous: return "previous";
        case InitMode::kourogi: return "kourogi";
    }
    return "unknown";
}

MosaicResult build_mosaic(const std::vector<Frame>& frames,
                          const RegistrationConfig& config, CompositePolicy policy) {
    config.validate();
    if (frames.empty()) {
        throw Error(ErrorCode::insufficient_data, "no frames to mosaic");
    }
    for (const Frame& f : frames) {
        if (f.image.width() != frames[0].image.width() ||
            f.image.height() != frames[0].image.height() ||
            f.mask.width() != f.image.width() || f.mask.height() != f.image.height()) {
            throw std::invalid_argument("all frames must share dimensions");
        }
    }

    MosaicResult result;
    result.reports.reserve(frames.size());

    {
        FrameReport first;
        first.frame_index = 0;
        first.init_mode = config.init_mode;
        const auto t = std::chrono::steady_clock::now();
        warp_into(result.canvas, frames[0].image, frames[0].mask, {}, policy);
        first.warp_ms = elapsed_ms(t);
        first.total_ms = first.warp_ms;
        result.reports.push_back(std::move(first));
    }

    AffineMotion chain;  // first-frame -> latest frame
    result.canvas.set_chained_motion(chain);
    RegistrationResult prev_result;
    bool have_prev = false;

    for (std::size_t k = 1; k < frames.size(); ++k) {
        FrameReport report;
        report.frame_index = int(k);
        report.init_mode = config.init_mode;

        const RegionMask pair_mask = frames[k - 1].mask.intersect(frames[k].mask);
        try {
            RegistrationResult rr =
                register_pair(frames[k - 1].image, frames[k].image, pair_mask, config,
                              have_prev ? &prev_result : nullptr);
            chain = compose(chain, rr.motion);

            report.init_fallback = rr.diagnostics.init_fallback;
            report.init_iterations = rr.diagnostics.init_iterations;
            report.init_motion = rr.init_motion;
            report.step_motion = rr.motion;
            report.chained_motion = chain;
            report.landmarks = rr.diagnostics.landmarks_placed;
            report.stage1_survivors = rr.diagnostics.stage1_survivors;
            report.stage2_survivors = rr.diagnostics.stage2_survivors;
            report.probes = rr.diagnostics.probes_total;
            report.shifts = rr.diagnostics.shifts_total;
            report.lsq_fits = rr.diagnostics.lsq_fits;
            report.init_ms = rr.diagnostics.init_ms;
            report.search_ms = rr.diagnostics.search_ms;
            report.fit_ms = rr.diagnostics.fit_ms;
            report.matches = std::move(rr.matches);

            const auto t = std::chrono::steady_clock::now();
            warp_into(result.canvas, frames[k].image, frames[k].mask, chain, policy);
            report.warp_ms = elapsed_ms(t);
            report.total_ms = rr.diagnostics.total_ms + report.warp_ms;

            prev_result.motion = rr.motion;
            have_prev = true;
        } catch (const Error& e) {
            report.status = FrameStatus::failed;
            report.step_motion = {};
            report.chained_motion = chain;
            report.message = e.what();
        }

        result.canvas.set_chained_motion(chain);
        result.reports.push_back(std::move(report));
    }

    return result;
}

}  // namespace logmosaic
