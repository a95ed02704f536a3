#include "logmosaic/kourogi.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "logmosaic/error.hpp"

namespace logmosaic {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double image_diagonal(const Raster& img) {
    return std::hypot(double(img.width()), double(img.height()));
}

// Max Euclidean change of the displacement field over the four image
// corners; concretizes "change in the global motion field".
double corner_delta(const AffineMotion& a, const AffineMotion& b, int w, int h) {
    const double xs[2] = {0.0, double(w - 1)};
    const double ys[2] = {0.0, double(h - 1)};
    double worst = 0.0;
    for (double x : xs) {
        for (double y : ys) {
            const Vec2 da = a.displacement_at(x, y);
            const Vec2 db = b.displacement_at(x, y);
            worst = std::max(worst, std::hypot(da.x - db.x, da.y - db.y));
        }
    }
    return worst;
}

// Interior mask pixel whose gradients admit the per-component division.
// Gradients of the reference frame do not change across iterations, so they
// are gathered once per run.
struct Candidate {
    int x;
    int y;
    double gx;
    double gy;
    double prev_val;
};

struct SampledFrame {
    const double* data;
    const std::uint8_t* mask;
    int w;
    int h;
    bool mask_full;
};

// Mask-guarded bilinear read; mirrors sample_bilinear()/valid_bilinear()
// exactly so the fast loop and the per-pixel reference path agree bit for bit.
inline bool masked_bilinear(const SampledFrame& f, double x, double y, double& out) {
    if (!(x >= 0.0 && y >= 0.0 && x <= f.w - 1 && y <= f.h - 1)) return false;
    const int x0 = int(x);
    const int y0 = int(y);
    const int x1 = x0 + 1 < f.w ? x0 + 1 : f.w - 1;
    const int y1 = y0 + 1 < f.h ? y0 + 1 : f.h - 1;
    if (!f.mask_full) {
        const std::uint8_t* m0 = f.mask + std::size_t(y0) * f.w;
        const std::uint8_t* m1 = f.mask + std::size_t(y1) * f.w;
        if (!(m0[x0] && m0[x1] && m1[x0] && m1[x1])) return false;
    }
    const double fx = x - x0;
    const double fy = y - y0;
    const double* r0 = f.data + std::size_t(y0) * f.w;
    const double* r1 = f.data + std::size_t(y1) * f.w;
    const double top = (1.0 - fx) * r0[x0] + fx * r0[x1];
    const double bottom = (1.0 - fx) * r1[x0] + fx * r1[x1];
    out = (1.0 - fy) * top + fy * bottom;
    return true;
}

std::vector<Candidate> gather_candidates(const Raster& prev, const RegionMask& mask) {
    std::vector<Candidate> out;
    const int w = prev.width();
    const int h = prev.height();
    out.reserve(std::size_t(w) * h / 2);
    for (int y = 1; y < h - 1; ++y) {
        const std::uint8_t* mrow = mask.row(y);
        const double* up_row = prev.row(y - 1);
        const double* row = prev.row(y);
        const double* down_row = prev.row(y + 1);
        for (int x = 1; x < w - 1; ++x) {
            if (!mrow[x]) continue;
            const double gx = (row[x + 1] - row[x - 1]) / 2.0;
            const double gy = (down_row[x] - up_row[x]) / 2.0;
            if (std::fabs(gx) > kGradientEpsilon && std::fabs(gy) > kGradientEpsilon) {
                out.push_back({x, y, gx, gy, row[x]});
            }
        }
    }
    return out;
}

void collect_accepted(const std::vector<Candidate>& candidates, const SampledFrame& curr,
                      const AffineMotion& motion, double gray_threshold, double diag,
                      std::vector<DisplacementSample>& accepted) {
    accepted.clear();
    for (const Candidate& c : candidates) {
        const double uc = motion.ux * c.x + motion.uy * c.y + motion.u0;
        const double vc = motion.vx * c.x + motion.vy * c.y + motion.v0;
        double compensated;
        if (!masked_bilinear(curr, c.x + uc, c.y + vc, compensated)) continue;
        const double it = compensated - c.prev_val;
        const double up = -it / c.gx + uc;
        const double vp = -it / c.gy + vc;
        if (std::fabs(up - uc) > diag || std::fabs(vp - vc) > diag) continue;
        double moved;
        if (!masked_bilinear(curr, c.x + up, c.y + vp, moved)) continue;
        if (!(std::fabs(moved - c.prev_val) < gray_threshold)) continue;
        accepted.push_back({double(c.x), double(c.y), up, vp});
    }
}

}  // namespace

void KourogiConfig::validate() const {
    if (gray_threshold <= 0.0) throw Error(ErrorCode::bad_config, "gray threshold must be > 0");
    if (max_iters < 1) throw Error(ErrorCode::bad_config, "max_iters must be >= 1");
    if (min_delta < 0.0) throw Error(ErrorCode::bad_config, "min_delta must be >= 0");
    if (!(min_accept_fraction >= 0.0 && min_accept_fraction <= 1.0)) {
        throw Error(ErrorCode::bad_config, "min_accept_fraction must be in [0, 1]");
    }
}

PseudoMotion pseudo_motion_at(const Raster& prev, const Raster& curr,
                              const RegionMask& mask, int x, int y,
                              const AffineMotion& motion, double gray_threshold) {
    if (x < 1 || y < 1 || x > prev.width() - 2 || y > prev.height() - 2) {
        throw std::domain_error("pseudo motion needs an interior pixel");
    }

    PseudoMotion pm;
    pm.up = kNaN;
    pm.vp = kNaN;
    const Vec2 comp = motion.displacement_at(x, y);
    const double cx = x + comp.x;
    const double cy = y + comp.y;
    // The compensated sample has to be a guarded in-mask read.
    if (!mask.valid_bilinear(cx, cy)) return pm;
    pm.it = sample_bilinear(curr, cx, cy) - prev.at(x, y);

    const Gradient g = gradient_central(prev, x, y);
    const bool gx_ok = std::fabs(g.ix) > kGradientEpsilon;
    const bool gy_ok = std::fabs(g.iy) > kGradientEpsilon;
    if (gx_ok) pm.up = -pm.it / g.ix + comp.x;
    if (gy_ok) pm.vp = -pm.it / g.iy + comp.y;
    if (!gx_ok || !gy_ok) return pm;

    // Divisions by small gradients explode; the threshold test alone does
    // not bound them, so cap the step at the image diagonal.
    const double diag = image_diagonal(prev);
    if (std::fabs(pm.up - comp.x) > diag || std::fabs(pm.vp - comp.y) > diag) return pm;

    pm.accepted = acceptance_test(prev, curr, mask, x, y, pm.up, pm.vp, gray_threshold);
    return pm;
}

bool acceptance_test(const Raster& prev, const Raster& curr, const RegionMask& mask,
                     int x, int y, double up, double vp, double gray_threshold) {
    if (x < 1 || y < 1 || x > prev.width() - 2 || y > prev.height() - 2) return false;
    const Gradient g = gradient_central(prev, x, y);
    if (std::fabs(g.ix) <= kGradientEpsilon || std::fabs(g.iy) <= kGradientEpsilon) {
        return false;  // (a)
    }
    if (!std::isfinite(up) || !std::isfinite(vp)) return false;
    const double tx = x + up;
    const double ty = y + vp;
    if (!mask.valid_bilinear(tx, ty)) return false;  // (b)
    return std::fabs(sample_bilinear(curr, tx, ty) - prev.at(x, y)) < gray_threshold;  // (c)
}

KourogiResult run_kourogi(const Raster& prev, const Raster& curr,
                          const RegionMask& mask, const KourogiConfig& config,
                          const AffineMotion& initial) {
    config.validate();
    if (prev.width() != curr.width() || prev.height() != curr.height() ||
        mask.width() != prev.width() || mask.height() != prev.height()) {
        throw std::invalid_argument("frames and mask must share dimensions");
    }

    const int w = prev.width();
    const int h = prev.height();
    const double diag = image_diagonal(prev);

    const std::vector<Candidate> candidates = gather_candidates(prev, mask);
    const SampledFrame curr_frame{curr.row(0), mask.row(0), w, h,
                                  mask.valid_count() == w * h};

    KourogiResult result;
    result.motion = initial;
    result.candidates = int(candidates.size());
    const std::size_t min_accepted = std::size_t(std::max<long long>(
        1, std::llround(config.min_accept_fraction * double(candidates.size()))));
    std::vector<DisplacementSample> accepted;

    for (int iter = 0; iter < config.max_iters; ++iter) {
        collect_accepted(candidates, curr_frame, result.motion, config.gray_threshold,
                         diag, accepted);

        ++result.iterations;
        result.accepted_per_iter.push_back(int(accepted.size()));
        if (accepted.size() < min_accepted) {
            throw Error(ErrorCode::initialization_failed,
                        "only " + std::to_string(accepted.size()) + " of " +
                            std::to_string(candidates.size()) +
                            " candidate pixels passed the acceptance test in iteration " +
                            std::to_string(result.iterations));
        }

        AffineMotion fit;
        if (config.model == KourogiModel::translation_only) {
            double sum_u = 0.0, sum_v = 0.0;
            for (const auto& s : accepted) {
                sum_u += s.u;
                sum_v += s.v;
            }
            fit.u0 = sum_u / double(accepted.size());
            fit.v0 = sum_v / double(accepted.size());
        } else {
            try {
                fit = fit_affine_lsq(accepted);
            } catch (const Error& e) {
                throw Error(ErrorCode::initialization_failed,
                            std::string("affine fit failed: ") + e.what());
            }
        }

        const double delta = corner_delta(fit, result.motion, w, h);
        result.motion = fit;
        if (delta < config.min_delta) {
            result.converged = true;
            break;
        }
    }

    return result;
}

}  // namespace logmosaic
