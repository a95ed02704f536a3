#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "logmosaic/affine.hpp"
#include "logmosaic/kourogi.hpp"
#include "logmosaic/matching.hpp"
#include "logmosaic/raster.hpp"

namespace logmosaic {

enum class InitMode { zero, previous, kourogi };

enum class LandmarkLayout { grid, grid_jittered };

struct RegistrationConfig {
    int landmark_count = 16;          // N
    double min_correlation = 0.7;     // c_min
    double min_acceptance_rate = 0.5; // a_min, fraction of N each stage must keep
    double max_residual = 2.0;        // e_max, px
    InitMode init_mode = InitMode::kourogi;
    TemplateSpec template_spec{};
    SearchConfig search{};
    LandmarkLayout layout = LandmarkLayout::grid;
    std::uint64_t seed = 1;           // jitter seed for grid_jittered
    KourogiConfig kourogi{};          // initializer settings (translation model)
    int threads = 1;                  // per-landmark search parallelism; 0 = hardware

    void validate() const;

    // ceil(a_min * N): the minimum both filter stages keep when possible.
    int min_keep() const;
};

// One row of the match set: a landmark, its matched displacement
// (object position minus landmark), the correlation, and the filter flags.
struct MatchRecord {
    PixelPos landmark{};
    double u = 0.0;
    double v = 0.0;
    double score = -1.0;
    double residual = 0.0;     // distance to the model prediction; valid iff has_residual
    bool has_residual = false;
    bool searched = false;     // log_search completed for this landmark
    bool stage1_pass = false;
    bool stage2_pass = false;
    int probes = 0;
    int shifts = 0;
};

struct RegistrationDiagnostics {
    int landmarks_placed = 0;
    int landmarks_dropped = 0;  // no textured valid position in the tile
    int searches_failed = 0;
    int stage1_survivors = 0;
    int stage2_survivors = 0;
    long long probes_total = 0;
    long long shifts_total = 0;
    int lsq_fits = 0;       // least-squares fits performed by this call (always 2)
    bool init_fallback = false;  // initializer failed, zero motion used
    int init_iterations = 0;     // iterations spent by the Kourogi initializer
    double init_ms = 0.0;
    double search_ms = 0.0;
    double fit_ms = 0.0;
    double total_ms = 0.0;
};

struct RegistrationResult {
    AffineMotion motion;       // final fit over the stage-2 survivors
    AffineMotion init_motion;  // compensated-motion estimate the searches started from
    std::vector<MatchRecord> matches;
    RegistrationDiagnostics diagnostics;
};

// Distributes `count` distinct landmarks over the valid region: tile its
// bounding box into an approximately square grid, take tile centers
// (plus a seeded jitter for grid_jittered), and snap each to the nearest
// valid position whose reference template has nonzero variance. Landmarks
// with no such position in their tile are dropped (counted in *dropped).
// Throws Error{insufficient_area} when fewer than `count` positions are valid.
std::vector<PixelPos> place_landmarks(const ValidityMap& valid, const Raster& reference,
                                      TemplateSpec template_spec, int count,
                                      LandmarkLayout layout, std::uint64_t seed,
                                      int* dropped = nullptr);

// Initial compensated-motion estimate per the configured mode. `previous`
// without a previous result and a failed Kourogi run both fall back to zero
// motion (flagged via *fell_back) instead of aborting.
AffineMotion initialize_motion(const RegistrationResult* prev, const Raster& reference,
                               const Raster& object, const RegionMask& mask,
                               const RegistrationConfig& config,
                               bool* fell_back = nullptr, int* iterations = nullptr);

// Stage-1 survivor indices: records that sort (stable, by descending score)
// into the first `keep_at_least` places, plus all with score >= min_score.
// Only records with searched = true participate. Indices ascend.
std::vector<std::size_t> stage1_survivors(std::span<const MatchRecord> records,
                                          int keep_at_least, double min_score);

// Stage-2 survivor indices among records with computed residuals: the first
// `keep_at_least` by ascending residual (stable), plus all with
// residual < max_residual. Indices ascend.
std::vector<std::size_t> stage2_survivors(std::span<const MatchRecord> records,
                                          int keep_at_least, double max_residual);

// Registers `object` against `reference`: places landmarks, relocates each
// by logarithmic search seeded from the initial motion, applies the
// two-stage filter, and fits the final motion over the survivors. Exactly
// two least-squares fits per call. Throws Error{registration_failed} when
// fewer than 3 usable matches survive or the geometry degenerates.
RegistrationResult register_pair(const Raster& reference, const Raster& object,
                                 const RegionMask& mask, const RegistrationConfig& config,
                                 const RegistrationResult* prev = nullptr);

}  // namespace logmosaic
