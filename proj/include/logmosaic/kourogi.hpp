#pragma once

#include <vector>

#include "logmosaic/affine.hpp"
#include "logmosaic/raster.hpp"

namespace logmosaic {

enum class KourogiModel {
    translation_only,  // fit only (u0, v0) as the mean accepted motion
    full_affine,
};

struct KourogiConfig {
    double gray_threshold = 5.0;  // T: max luminance residual at the moved-to position
    int max_iters = 10;
    double min_delta = 0.1;  // convergence: max corner displacement change, px
    KourogiModel model = KourogiModel::translation_only;
    // Minimum accepted fraction of candidate pixels per iteration. Healthy
    // convergence accepts most textured pixels; when nearly all pixels fail
    // the gray-level test the surviving handful are accidental matches and
    // the fit wanders, so that counts as an initialization failure too.
    double min_accept_fraction = 0.2;

    void validate() const;
};

// Gradient magnitudes at or below this count as zero for the acceptance
// test; smaller values admit numerically useless divisions.
inline constexpr double kGradientEpsilon = 1e-3;

// Per-pixel pseudo-motion estimate. `up`/`vp` hold the per-component
// estimates -It/Ix + uc and -It/Iy + vc; a component whose gradient is
// (numerically) zero is NaN. `accepted` reflects the full acceptance test.
struct PseudoMotion {
    double it = 0.0;  // compensated frame difference at (x, y)
    double up = 0.0;
    double vp = 0.0;
    bool accepted = false;
};

// Evaluates the pseudo motion at one interior pixel given the current global
// motion estimate. Throws std::domain_error for border/out-of-bounds pixels.
PseudoMotion pseudo_motion_at(const Raster& prev, const Raster& curr,
                              const RegionMask& mask, int x, int y,
                              const AffineMotion& motion, double gray_threshold);

// The acceptance test on an already-computed pseudo motion: (a) both
// gradient components of `prev` at (x, y) are nonzero, (b) (x+up, y+vp)
// lies inside the mask and image, (c) the luminance residual there is
// strictly below the threshold.
bool acceptance_test(const Raster& prev, const Raster& curr, const RegionMask& mask,
                     int x, int y, double up, double vp, double gray_threshold);

struct KourogiResult {
    AffineMotion motion;
    int iterations = 0;
    int candidates = 0;  // interior mask pixels with usable gradients
    std::vector<int> accepted_per_iter;
    bool converged = false;  // stopped on min_delta rather than max_iters
};

// Iterative global-motion estimation: compute pseudo motion at every
// interior mask pixel, filter by the acceptance test, fit the configured
// model, repeat with the new compensated motion. Throws
// Error{initialization_failed} when an iteration accepts fewer pixels than
// min_accept_fraction allows (or the full-affine fit degenerates).
KourogiResult run_kourogi(const Raster& prev, const Raster& curr,
                          const RegionMask& mask, const KourogiConfig& config,
                          const AffineMotion& initial);

}  // namespace logmosaic
