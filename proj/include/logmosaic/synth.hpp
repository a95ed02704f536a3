#pragma once

#include <cstdint>
#include <vector>

#include "logmosaic/affine.hpp"
#include "logmosaic/matching.hpp"
#include "logmosaic/raster.hpp"

namespace logmosaic {

enum class SynthTexture { smoothed_noise, checker_blurred, blob_field };
enum class SynthMaskShape { full, circular };
enum class RampAxis { x, y };

// Ground-truth synthetic sequence description: frame k+1 is frame k
// resampled through `step_motion` (bilinear), then relit as
// I' = gain*I + offset + ramp. Deterministic for a fixed seed.
struct SynthSpec {
    int width = 192;
    int height = 192;
    SynthTexture texture = SynthTexture::smoothed_noise;
    std::uint64_t seed = 1;
    AffineMotion step_motion{};
    double gain = 1.0;
    double offset = 0.0;
    double ramp_amplitude = 0.0;  // peak-to-center amplitude as a fraction of the mean
    RampAxis ramp_axis = RampAxis::x;
    int frame_count = 2;
    SynthMaskShape mask_shape = SynthMaskShape::full;

    void validate() const;
};

struct SynthFrame {
    Raster image;
    RegionMask mask;
    AffineMotion chained_truth;  // first frame -> this frame
};

std::vector<SynthFrame> generate_sequence(const SynthSpec& spec);

// Correlation scores over the full integer window of Chebyshev radius
// `radius` around a center position; undefined/invalid positions are -inf.
struct ScoreSurface {
    PixelPos center{};
    int radius = 0;
    std::vector<double> scores;  // (2r+1)^2 row-major, top-left first
    int evaluated = 0;           // positions actually scored

    double at(int du, int dv) const {
        int side = 2 * radius + 1;
        return scores[std::size_t(dv + radius) * side + (du + radius)];
    }
};

ScoreSurface score_window(const Raster& reference, const Raster& object,
                          PixelPos landmark, Vec2 start_displacement,
                          TemplateSpec template_spec, int window_radius,
                          const ValidityMap& object_valid);

// Exactly one strict local maximum over the finite scores under
// 4-connectivity (and at least one finite score).
bool is_unimodal(const ScoreSurface& surface);

// Brute-force argmax over every valid integer position within the window;
// the oracle the logarithmic search is compared against. Probe count equals
// the number of valid window positions. Throws Error{no_valid_start} when
// the window contains no valid position.
MatchResult exhaustive_match(const Raster& reference, const Raster& object,
                             PixelPos landmark, Vec2 start_displacement,
                             TemplateSpec template_spec, int window_radius,
                             const ValidityMap& object_valid);

// Max Euclidean distance between the two mapped positions over the four
// image corners; the registration accuracy metric.
double corner_error(const AffineMotion& estimated, const AffineMotion& truth,
                    int width, int height);

}  // namespace logmosaic
