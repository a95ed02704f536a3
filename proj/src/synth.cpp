#include "logmosaic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "logmosaic/error.hpp"
#include "rng.hpp"

namespace logmosaic {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Separable box blur (2*radius + 1 taps, clamp-to-edge).
void box_blur(std::vector<double>& img, int w, int h, int radius) {
    std::vector<double> tmp(img.size());
    const double norm = 1.0 / (2 * radius + 1);
    for (int y = 0; y < h; ++y) {
        const double* row = img.data() + std::size_t(y) * w;
        double* out = tmp.data() + std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += row[std::clamp(x + k, 0, w - 1)];
            }
            out[x] = acc * norm;
        }
    }
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += tmp[std::size_t(std::clamp(y + k, 0, h - 1)) * w + x];
            }
            img[std::size_t(y) * w + x] = acc * norm;
        }
    }
}

std::vector<double> texture_smoothed_noise(int w, int h, std::mt19937_64& gen) {
    std::vector<double> img(std::size_t(w) * h);
    for (double& v : img) v = rng::uniform(gen, 0.0, 255.0);
    box_blur(img, w, h, 2);
    box_blur(img, w, h, 2);
    return img;
}

std::vector<double> texture_checker_blurred(int w, int h, std::mt19937_64& gen) {
    constexpr int cell = 12;
    std::vector<double> img(std::size_t(w) * h);
    // A small per-cell perturbation breaks the exact periodicity so distant
    // cells do not correlate perfectly.
    const int cols = (w + cell - 1) / cell;
    const int rows = (h + cell - 1) / cell;
    std::vector<double> wobble(std::size_t(cols) * rows);
    for (double& v : wobble) v = rng::uniform(gen, -25.0, 25.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int cx = x / cell;
            const int cy = y / cell;
            const bool high = ((cx + cy) & 1) == 0;
            img[std::size_t(y) * w + x] =
                (high ? 200.0 : 60.0) + wobble[std::size_t(cy) * cols + cx];
        }
    }
    box_blur(img, w, h, 2);
    box_blur(img, w, h, 2);
    return img;
}

std::vector<double> texture_blob_field(int w, int h, std::mt19937_64& gen) {
    std::vector<double> img(std::size_t(w) * h, 40.0);
    const int blobs = std::max(6, w * h / 2000);
    for (int i = 0; i < blobs; ++i) {
        const double bx = rng::uniform(gen, 0.0, double(w));
        const double by = rng::uniform(gen, 0.0, double(h));
        const double sigma = rng::uniform(gen, 4.0, 12.0);
        const double amp = rng::uniform(gen, 30.0, 120.0);
        const int reach = int(std::ceil(3.0 * sigma));
        const int x0 = std::max(0, int(std::floor(bx)) - reach);
        const int x1 = std::min(w - 1, int(std::ceil(bx)) + reach);
        const int y0 = std::max(0, int(std::floor(by)) - reach);
        const int y1 = std::min(h - 1, int(std::ceil(by)) + reach);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double d2 = (x - bx) * (x - bx) + (y - by) * (y - by);
                img[std::size_t(y) * w + x] += amp * std::exp(-d2 * inv2s2);
            }
        }
    }
    for (double& v : img) v = std::clamp(v, 0.0, 255.0);
    return img;
}

std::vector<double> make_texture(SynthTexture texture, int w, int h,
                                 std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    switch (texture) {
        case SynthTexture::smoothed_noise: return texture_smoothed_noise(w, h, gen);
        case SynthTexture::checker_blurred: return texture_checker_blurred(w, h, gen);
        case SynthTexture::blob_field: return texture_blob_field(w, h, gen);
    }
    throw Error(ErrorCode::bad_config, "unknown texture");
}

RegionMask make_mask(const SynthSpec& spec) {
    if (spec.mask_shape == SynthMaskShape::full) {
        return RegionMask::full(spec.width, spec.height);
    }
    const double cx = (spec.width - 1) / 2.0;
    const double cy = (spec.height - 1) / 2.0;
    const double radius = 0.45 * std::min(spec.width, spec.height);
    std::vector<std::uint8_t> valid(std::size_t(spec.width) * spec.height);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            valid[std::size_t(y) * spec.width + x] = d2 <= radius * radius ? 1 : 0;
        }
    }
    return RegionMask(spec.width, spec.height, std::move(valid));
}

// Padding that keeps the visible window inside the resampled world for the
// whole sequence: the window's preimage under every chained motion, plus a
// margin for the per-step bilinear shrink.
int compute_padding(const SynthSpec& spec) {
    double need = 0.0;
    AffineMotion chain;
    const double xs[2] = {0.0, double(spec.width - 1)};
    const double ys[2] = {0.0, double(spec.height - 1)};
    for (int k = 1; k < spec.frame_count; ++k) {
        chain = compose(chain, spec.step_motion);
        const AffineMotion inv = invert(chain);
        for (double x : xs) {
            for (double y : ys) {
                const Vec2 p = inv.position_at(x, y);
                need = std::max({need, -p.x, p.x - (spec.width - 1),
                                 -p.y, p.y - (spec.height - 1)});
            }
        }
    }
    const int pad = int(std::ceil(need)) + spec.frame_count + 4;
    if (pad > 4 * std::max(spec.width, spec.height)) {
        throw Error(ErrorCode::bad_config,
                    "step motion drifts too far for the sequence length");
    }
    return pad;
}

double ramp_at(const SynthSpec& spec, double mean, double x, double y) {
    if (spec.ramp_amplitude == 0.0) return 0.0;
    const double t = spec.ramp_axis == RampAxis::x ? 2.0 * x / (spec.width - 1) - 1.0
                                                   : 2.0 * y / (spec.height - 1) - 1.0;
    return spec.ramp_amplitude * mean * t;
}

}  // namespace

void SynthSpec::validate() const {
    if (width < 16 || height < 16) {
        throw Error(ErrorCode::bad_config, "synthetic frames must be at least 16x16");
    }
    if (frame_count < 1) throw Error(ErrorCode::bad_config, "frame_count must be >= 1");
    if (!(gain > 0.0)) throw Error(ErrorCode::bad_config, "gain must be > 0");
    if (!(std::fabs(ramp_amplitude) < 1.0)) {
        throw Error(ErrorCode::bad_config, "|ramp_amplitude| must be < 1");
    }
    if (std::fabs(step_motion.linear_det()) <= 1e-8) {
        throw Error(ErrorCode::bad_config, "step motion must be invertible");
    }
}

std::vector<SynthFrame> generate_sequence(const SynthSpec& spec) {
    spec.validate();

    const int pad = compute_padding(spec);
    const int W = spec.width + 2 * pad;
    const int H = spec.height + 2 * pad;

    Raster world(W, H, make_texture(spec.texture, W, H, spec.seed));
    std::vector<std::uint8_t> world_valid(std::size_t(W) * H, 1);

    double ramp_mean = 0.0;
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) ramp_mean += world.at(x + pad, y + pad);
    }
    ramp_mean /= double(spec.width) * spec.height;

    const RegionMask mask = make_mask(spec);
    const AffineMotion inv_step = invert(spec.step_motion);

    std::vector<SynthFrame> out;
    out.reserve(std::size_t(spec.frame_count));
    AffineMotion chain;

    for (int k = 0; k < spec.frame_count; ++k) {
        if (k > 0) {
            RegionMask prev_valid(W, H, world_valid);
            std::vector<double> next(std::size_t(W) * H, 0.0);
            std::vector<std::uint8_t> next_valid(std::size_t(W) * H, 0);
            for (int iy = 0; iy < H; ++iy) {
                for (int ix = 0; ix < W; ++ix) {
                    const double wx = ix - pad;
                    const double wy = iy - pad;
                    const Vec2 src = inv_step.position_at(wx, wy);
                    const double sx = src.x + pad;
                    const double sy = src.y + pad;
                    if (!prev_valid.valid_bilinear(sx, sy)) continue;
                    const double v = sample_bilinear(world, sx, sy);
                    next[std::size_t(iy) * W + ix] =
                        spec.gain * v + spec.offset + ramp_at(spec, ramp_mean, wx, wy);
                    next_valid[std::size_t(iy) * W + ix] = 1;
                }
            }
            world = Raster(W, H, std::move(next));
            world_valid = std::move(next_valid);
            chain = compose(chain, spec.step_motion);
        }

        std::vector<double> crop(std::size_t(spec.width) * spec.height);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                if (!world_valid[std::size_t(y + pad) * W + (x + pad)]) {
                    throw std::logic_error("padding did not cover the visible window");
                }
                crop[std::size_t(y) * spec.width + x] = world.at(x + pad, y + pad);
            }
        }
        out.push_back({Raster(spec.width, spec.height, std::move(crop)), mask, chain});
    }

    return out;
}

ScoreSurface score_window(const Raster& reference, const Raster& object,
                          PixelPos landmark, Vec2 start_displacement,
                          TemplateSpec template_spec, int window_radius,
                          const ValidityMap& object_valid) {
    template_spec.validate();
    if (window_radius < 0) throw std::invalid_argument("window_radius must be >= 0");

    const PatchScorer scorer(reference, landmark, template_spec);
    ScoreSurface surface;
    surface.center = {landmark.x + int(std::llround(start_displacement.x)),
                      landmark.y + int(std::llround(start_displacement.y))};
    surface.radius = window_radius;
    const int side = 2 * window_radius + 1;
    surface.scores.assign(std::size_t(side) * side, kNegInf);

    for (int dv = -window_radius; dv <= window_radius; ++dv) {
        for (int du = -window_radius; du <= window_radius; ++du) {
            const int x = surface.center.x + du;
            const int y = surface.center.y + dv;
            if (!object_valid.valid(x, y)) continue;
            surface.scores[std::size_t(dv + window_radius) * side + (du + window_radius)] =
                scorer.score(object, x, y);
            ++surface.evaluated;
        }
    }
    return surface;
}

bool is_unimodal(const ScoreSurface& surface) {
    const int r = surface.radius;
    auto at = [&](int du, int dv) { return surface.at(du, dv); };

    int finite = 0;
    int maxima = 0;
    for (int dv = -r; dv <= r; ++dv) {
        for (int du = -r; du <= r; ++du) {
            const double s = at(du, dv);
            if (!std::isfinite(s)) continue;
            ++finite;
            bool is_max = true;
            const int nbr[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (const auto& n : nbr) {
                const int nu = du + n[0];
                const int nv = dv + n[1];
                if (nu < -r || nu > r || nv < -r || nv > r) continue;
                if (!(s > at(nu, nv))) {
                    is_max = false;
                    break;
                }
            }
            if (is_max) ++maxima;
        }
    }
    return finite >= 1 && maxima == 1;
}

MatchResult exhaustive_match(const Raster& reference, const Raster& object,
                             PixelPos landmark, Vec2 start_displacement,
                             TemplateSpec template_spec, int window_radius,
                             const ValidityMap& object_valid) {
    template_spec.validate();
    if (window_radius < 0) throw std::invalid_argument("window_radius must be >= 0");

    const PatchScorer scorer(reference, landmark, template_spec);
    const int cx = landmark.x + int(std::llround(start_displacement.x));
    const int cy = landmark.y + int(std::llround(start_displacement.y));

    MatchResult best;
    best.score = kNegInf;
    bool any = false;
    for (int dv = -window_radius; dv <= window_radius; ++dv) {
        for (int du = -window_radius; du <= window_radius; ++du) {
            const int x = cx + du;
            const int y = cy + dv;
            if (!object_valid.valid(x, y)) continue;
            const double s = scorer.score(object, x, y);
            ++best.probes;
            if (!any || s > best.score) {
                best.u = x;
                best.v = y;
                best.score = s;
                any = true;
            }
        }
    }
    if (!any) {
        throw Error(ErrorCode::no_valid_start, "no valid position in the search window");
    }
    return best;
}

double corner_error(const AffineMotion& estimated, const AffineMotion& truth,
                    int width, int height) {
    const double xs[2] = {0.0, double(width - 1)};
    const double ys[2] = {0.0, double(height - 1)};
    double worst = 0.0;
    for (double x : xs) {
        for (double y : ys) {
            const Vec2 a = estimated.position_at(x, y);
            const Vec2 b = truth.position_at(x, y);
            worst = std::max(worst, std::hypot(a.x - b.x, a.y - b.y));
        }
    }
    return worst;
}

}  // namespace logmosaic
