#pragma once

#include <string>
#include <vector>

#include "logmosaic/affine.hpp"
#include "logmosaic/raster.hpp"
#include "logmosaic/registration.hpp"

namespace logmosaic {

enum class CompositePolicy { last_wins, first_wins, mean };

// Growing canvas in first-frame coordinates. Canvas pixel (cx, cy)
// corresponds to first-frame coordinate (cx + origin.x, cy + origin.y);
// growth re-origins by integer offsets only, so composited pixels are never
// resampled.
class MosaicCanvas {
  public:
    MosaicCanvas() = default;

    int width() const { return width_; }
    int height() const { return height_; }
    PixelPos origin() const { return origin_; }
    bool empty() const { return width_ == 0 || height_ == 0; }

    double value(int cx, int cy) const { return value_[idx(cx, cy)]; }
    int count(int cx, int cy) const { return count_[idx(cx, cy)]; }
    bool defined(int cx, int cy) const { return count_[idx(cx, cy)] > 0; }

    const AffineMotion& chained_motion() const { return chain_; }
    void set_chained_motion(const AffineMotion& m) { chain_ = m; }

    // Undefined pixels export as 0.
    Raster to_raster() const;
    RegionMask coverage() const;

    // Grows the canvas so that first-frame rect [x0, x1] x [y0, y1] fits.
    void ensure_contains(int x0, int y0, int x1, int y1);

    void composite(int cx, int cy, double sample, CompositePolicy policy);

  private:
    std::size_t idx(int cx, int cy) const { return std::size_t(cy) * width_ + cx; }

    int width_ = 0;
    int height_ = 0;
    PixelPos origin_{};
    std::vector<double> value_;
    std::vector<double> sum_;  // running sums for the mean policy
    std::vector<int> count_;
    AffineMotion chain_{};
};

// Backward-warps `frame` into the canvas: every canvas pixel inside the
// frame's warped footprint samples the frame bilinearly at its mapped
// position, honoring the frame mask. `motion_first_to_frame` maps
// first-frame coordinates to frame coordinates and must be invertible.
void warp_into(MosaicCanvas& canvas, const Raster& frame, const RegionMask& mask,
               const AffineMotion& motion_first_to_frame, CompositePolicy policy);

struct Frame {
    Raster image;
    RegionMask mask;
};

enum class FrameStatus { ok, failed, skipped };

const char* to_string(FrameStatus status);
const char* to_string(InitMode mode);

// Per-frame registration and compositing diagnostics.
struct FrameReport {
    int frame_index = 0;
    FrameStatus status = FrameStatus::ok;
    InitMode init_mode = InitMode::zero;
    bool init_fallback = false;
    int init_iterations = 0;
    AffineMotion init_motion;
    AffineMotion step_motion;     // frame-to-previous
    AffineMotion chained_motion;  // first-frame-to-this
    std::vector<MatchRecord> matches;
    int landmarks = 0;
    int stage1_survivors = 0;
    int stage2_survivors = 0;
    long long probes = 0;
    long long shifts = 0;
    int lsq_fits = 0;
    double init_ms = 0.0;
    double search_ms = 0.0;
    double fit_ms = 0.0;
    double warp_ms = 0.0;
    double total_ms = 0.0;
    std::string message;
};

struct MosaicResult {
    MosaicCanvas canvas;
    std::vector<FrameReport> reports;
};

// Registers each frame against its predecessor, chains the step motions
// into first-frame coordinates, and composites every successfully
// registered frame. A failed registration skips that frame's compositing
// and carries the chain forward with an identity step.
MosaicResult build_mosaic(const std::vector<Frame>& frames,
                          const RegistrationConfig& config, CompositePolicy policy);

}  // namespace logmosaic
