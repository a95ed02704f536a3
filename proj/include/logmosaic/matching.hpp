#pragma once

#include <optional>
#include <span>
#include <vector>

#include "logmosaic/geometry.hpp"
#include "logmosaic/raster.hpp"

namespace logmosaic {

// Square template footprint: (2*half_extent + 1)^2 pixels around a center.
struct TemplateSpec {
    int half_extent = 7;

    int side() const { return 2 * half_extent + 1; }
    int area() const { return side() * side(); }
    void validate() const;  // half_extent >= 1
};

enum class Neighborhood {
    cross5,   // center + four arm tips
    square9,  // center + all eight neighbors at arm distance
};

struct SearchConfig {
    int w_init = 16;  // initial cross-bar length, power of two
    Neighborhood neighborhood = Neighborhood::cross5;
    int max_probes = 1024;  // safety bound on distinct correlation evaluations

    void validate() const;
};

struct MatchResult {
    int u = 0;           // matched center position in the object image
    int v = 0;
    double score = -1.0; // correlation at (u, v), clamped to [-1, 1]
    int probes = 0;      // distinct correlation evaluations
    int shifts = 0;      // cross relocations (S)
};

// Normalized cross-correlation of two equally shaped patches. Exactly
// symmetric in its arguments. Returns nullopt when either patch has
// (numerically) zero variance; callers treat that as "never the maximum".
// Throws std::invalid_argument on shape mismatch or fewer than 2 samples.
std::optional<double> ncc(std::span<const double> a, std::span<const double> b);

// Correlation scorer for one fixed reference template. Both the logarithmic
// search and the exhaustive oracle score through this class, so their
// surfaces are bit-identical and argmax comparisons are meaningful.
class PatchScorer {
  public:
    // Throws std::domain_error when the footprint leaves the reference image.
    PatchScorer(const Raster& reference, PixelPos center, TemplateSpec spec);

    // False when the reference patch is flat (every correlation undefined).
    bool reference_usable() const { return usable_; }

    int half_extent() const { return half_; }

    // Correlation of the object patch centered at (u, v) against the
    // reference template; -inf when undefined or out of bounds.
    double score(const Raster& object, int u, int v) const;

  private:
    std::vector<double> centered_;  // reference patch minus its mean
    double ref_energy_ = 0.0;       // sum of squared deviations
    int half_ = 0;
    bool usable_ = false;
};

// Logarithmic template search: probe a cross of arm length w around the
// current center, move to the best probe or halve w, down through w = 1.
// `start_displacement` is rounded to the integer grid. Probe positions not
// covered by `object_valid` are skipped, never read.
//
// Throws Error{no_valid_start} when no initial probe position is valid and
// Error{search_diverged} when max_probes is exhausted. `probe_log`, when
// given, receives every evaluated position (test hook).
MatchResult log_search(const Raster& reference, const Raster& object,
                       PixelPos landmark, Vec2 start_displacement,
                       TemplateSpec template_spec, const SearchConfig& config,
                       const ValidityMap& object_valid,
                       std::vector<PixelPos>* probe_log = nullptr);

}  // namespace logmosaic
