#include "logmosaic/registration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <thread>

#include "logmosaic/error.hpp"
#include "rng.hpp"

namespace logmosaic {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - since)
        .count();
}

bool footprint_inside(const Raster& img, PixelPos p, int half) {
    return p.x >= half && p.y >= half && p.x + half < img.width() &&
           p.y + half < img.height();
}

struct SnapCandidate {
    double dist2 = 0.0;
    PixelPos pos{};

    bool better_than(const SnapCandidate& o) const {
        if (dist2 != o.dist2) return dist2 < o.dist2;
        if (pos.y != o.pos.y) return pos.y < o.pos.y;
        return pos.x < o.pos.x;
    }
};

// Nearest tile position (Euclidean to the real-valued center, ties to the
// smaller y then x) that is valid and has a textured reference template.
bool snap_to_valid(const ValidityMap& valid, const Raster& reference,
                   TemplateSpec spec, double cx, double cy, int tx0, int ty0,
                   int tx1, int ty1, PixelPos& out) {
    const int sx = std::clamp(int(std::llround(cx)), tx0, tx1);
    const int sy = std::clamp(int(std::llround(cy)), ty0, ty1);
    const int max_r = std::max(std::max(sx - tx0, tx1 - sx), std::max(sy - ty0, ty1 - sy));

    bool found = false;
    SnapCandidate best;
    auto consider = [&](int x, int y) {
        if (x < tx0 || x > tx1 || y < ty0 || y > ty1) return;
        if (!valid.valid(x, y)) return;
        SnapCandidate c{(x - cx) * (x - cx) + (y - cy) * (y - cy), {x, y}};
        if (found && !c.better_than(best)) return;
        if (!footprint_inside(reference, c.pos, spec.half_extent)) return;
        if (!PatchScorer(reference, c.pos, spec).reference_usable()) return;
        best = c;
        found = true;
    };

    for (int r = 0; r <= max_r; ++r) {
        // A later square ring can still hold a closer Euclidean point, but
        // only while r - 1 does not already exceed the best distance.
        if (found && double(r) - 1.0 > std::sqrt(best.dist2)) break;
        if (r == 0) {
            consider(sx, sy);
            continue;
        }
        for (int x = sx - r; x <= sx + r; ++x) {
            consider(x, sy - r);
            consider(x, sy + r);
        }
        for (int y = sy - r + 1; y <= sy + r - 1; ++y) {
            consider(sx - r, y);
            consider(sx + r, y);
        }
    }
    if (found) out = best.pos;
    return found;
}

}  // namespace

void RegistrationConfig::validate() const {
    if (landmark_count < 3) {
        throw Error(ErrorCode::bad_config, "landmark_count must be >= 3");
    }
    if (!(min_correlation >= -1.0 && min_correlation <= 1.0)) {
        throw Error(ErrorCode::bad_config, "min_correlation must be in [-1, 1]");
    }
    if (!(min_acceptance_rate > 0.0 && min_acceptance_rate <= 1.0)) {
        throw Error(ErrorCode::bad_config, "min_acceptance_rate must be in (0, 1]");
    }
    if (!(max_residual > 0.0)) {
        throw Error(ErrorCode::bad_config, "max_residual must be > 0");
    }
    if (threads < 0) throw Error(ErrorCode::bad_config, "threads must be >= 0");
    template_spec.validate();
    search.validate();
    kourogi.validate();
}

int RegistrationConfig::min_keep() const {
    return int(std::ceil(min_acceptance_rate * landmark_count));
}

std::vector<PixelPos> place_landmarks(const ValidityMap& valid, const Raster& reference,
                                      TemplateSpec template_spec, int count,
                                      LandmarkLayout layout, std::uint64_t seed,
                                      int* dropped) {
    template_spec.validate();
    if (count < 1) throw Error(ErrorCode::bad_config, "landmark count must be >= 1");
    if (valid.width() != reference.width() || valid.height() != reference.height()) {
        throw std::invalid_argument("validity map and reference dimensions differ");
    }
    if (dropped) *dropped = 0;

    if (valid.valid_count() < count) {
        throw Error(ErrorCode::insufficient_area,
                    "valid region smaller than the landmark count");
    }

    int minx = valid.width(), miny = valid.height(), maxx = -1, maxy = -1;
    for (int y = 0; y < valid.height(); ++y) {
        for (int x = 0; x < valid.width(); ++x) {
            if (!valid.valid(x, y)) continue;
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
        }
    }
    const int bw = maxx - minx + 1;
    const int bh = maxy - miny + 1;

    // Tile the bounding box into a near-square grid with one landmark per
    // tile; disjoint tiles keep the placements distinct.
    int cols = int(std::llround(std::sqrt(double(count) * bw / bh)));
    cols = std::clamp(cols, 1, count);
    const int rows = (count + cols - 1) / cols;

    std::mt19937_64 gen(seed);
    std::vector<PixelPos> placed;
    placed.reserve(std::size_t(count));
    int dropped_count = 0;

    for (int i = 0; i < count; ++i) {
        const int c = i % cols;
        const int r = i / cols;
        const double tile_w = double(bw) / cols;
        const double tile_h = double(bh) / rows;

        double cx = minx + (c + 0.5) * tile_w;
        double cy = miny + (r + 0.5) * tile_h;
        if (layout == LandmarkLayout::grid_jittered) {
            cx += (rng::canonical(gen) - 0.5) * 0.5 * tile_w;
            cy += (rng::canonical(gen) - 0.5) * 0.5 * tile_h;
        }

        const int tx0 = minx + int(std::int64_t(c) * bw / cols);
        const int tx1 = minx + int(std::int64_t(c + 1) * bw / cols) - 1;
        const int ty0 = miny + int(std::int64_t(r) * bh / rows);
        const int ty1 = miny + int(std::int64_t(r + 1) * bh / rows) - 1;
        PixelPos pos;
        if (tx1 < tx0 || ty1 < ty0 ||
            !snap_to_valid(valid, reference, template_spec, cx, cy, tx0, ty0, tx1, ty1,
                           pos)) {
            ++dropped_count;
            continue;
        }
        placed.push_back(pos);
    }

    if (dropped) *dropped = dropped_count;
    return placed;
}

AffineMotion initialize_motion(const RegistrationResult* prev, const Raster& reference,
                               const Raster& object, const RegionMask& mask,
                               const RegistrationConfig& config, bool* fell_back,
                               int* iterations) {
    if (fell_back) *fell_back = false;
    if (iterations) *iterations = 0;

    switch (config.init_mode) {
        case InitMode::zero:
            return {};
        case InitMode::previous:
            if (prev) return prev->motion;
            if (fell_back) *fell_back = true;
            return {};
        case InitMode::kourogi:
            try {
                const KourogiResult kr =
                    run_kourogi(reference, object, mask, config.kourogi, {});
                if (iterations) *iterations = kr.iterations;
                return kr.motion;
            } catch (const Error&) {
                if (fell_back) *fell_back = true;
                return {};
            }
    }
    return {};
}

std::vector<std::size_t> stage1_survivors(std::span<const MatchRecord> records,
                                          int keep_at_least, double min_score) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].searched) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].score > records[b].score;
    });

    const std::size_t keep =
        std::min(order.size(), std::size_t(std::max(keep_at_least, 0)));
    std::vector<std::size_t> out;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (rank < keep || records[order[rank]].score >= min_score) {
            out.push_back(order[rank]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> stage2_survivors(std::span<const MatchRecord> records,
                                          int keep_at_least, double max_residual) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].has_residual) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].residual < records[b].residual;
    });

    const std::size_t keep =
        std::min(order.size(), std::size_t(std::max(keep_at_least, 0)));
    std::vector<std::size_t> out;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (rank < keep || records[order[rank]].residual < max_residual) {
            out.push_back(order[rank]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

RegistrationResult register_pair(const Raster& reference, const Raster& object,
                                 const RegionMask& mask, const RegistrationConfig& config,
                                 const RegistrationResult* prev) {
    config.validate();
    if (reference.width() != object.width() || reference.height() != object.height() ||
        mask.width() != reference.width() || mask.height() != reference.height()) {
        throw std::invalid_argument("reference, object and mask dimensions differ");
    }

    const auto t_total = std::chrono::steady_clock::now();
    const std::uint64_t fits_before = lsq_fit_invocations();
    RegistrationResult result;

    auto t_init = std::chrono::steady_clock::now();
    result.init_motion =
        initialize_motion(prev, reference, object, mask, config,
                          &result.diagnostics.init_fallback,
                          &result.diagnostics.init_iterations);
    result.diagnostics.init_ms = elapsed_ms(t_init);

    const ValidityMap tmpl_valid = erode_for_template(mask, config.template_spec.half_extent);
    int dropped = 0;
    const std::vector<PixelPos> landmarks =
        place_landmarks(tmpl_valid, reference, config.template_spec,
                        config.landmark_count, config.layout, config.seed, &dropped);
    result.diagnostics.landmarks_placed = int(landmarks.size());
    result.diagnostics.landmarks_dropped = dropped;

    result.matches.resize(landmarks.size());
    const auto t_search = std::chrono::steady_clock::now();

    auto search_one = [&](std::size_t i) {
        MatchRecord& rec = result.matches[i];
        rec.landmark = landmarks[i];
        const Vec2 start =
            result.init_motion.displacement_at(landmarks[i].x, landmarks[i].y);
        try {
            const MatchResult m =
                log_search(reference, object, landmarks[i], start,
                           config.template_spec, config.search, tmpl_valid);
            rec.u = m.u - landmarks[i].x;
            rec.v = m.v - landmarks[i].y;
            rec.score = m.score;
            rec.probes = m.probes;
            rec.shifts = m.shifts;
            rec.searched = true;
        } catch (const Error&) {
            rec.searched = false;
        }
    };

    int workers = config.threads == 0 ? int(std::thread::hardware_concurrency())
                                      : config.threads;
    workers = std::clamp(workers, 1, std::max<int>(1, int(landmarks.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < landmarks.size(); ++i) search_one(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int k = 0; k < workers; ++k) {
            pool.emplace_back([&, k] {
                for (std::size_t i = std::size_t(k); i < landmarks.size();
                     i += std::size_t(workers)) {
                    search_one(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    result.diagnostics.search_ms = elapsed_ms(t_search);

    for (const MatchRecord& rec : result.matches) {
        if (!rec.searched) ++result.diagnostics.searches_failed;
        result.diagnostics.probes_total += rec.probes;
        result.diagnostics.shifts_total += rec.shifts;
    }

    const int keep_at_least =
        int(std::ceil(config.min_acceptance_rate * double(result.matches.size())));

    const auto t_fit = std::chrono::steady_clock::now();
    const auto fit_or_fail = [](std::span<const DisplacementSample> samples,
                                const char* which) {
        try {
            return fit_affine_lsq(samples);
        } catch (const Error& e) {
            throw Error(ErrorCode::registration_failed,
                        std::string(which) + " fit failed: " + e.what());
        }
    };

    const std::vector<std::size_t> stage1 =
        stage1_survivors(result.matches, keep_at_least, config.min_correlation);
    result.diagnostics.stage1_survivors = int(stage1.size());

    std::vector<DisplacementSample> samples;
    samples.reserve(stage1.size());
    for (std::size_t i : stage1) {
        result.matches[i].stage1_pass = true;
        const MatchRecord& rec = result.matches[i];
        samples.push_back({double(rec.landmark.x), double(rec.landmark.y), rec.u, rec.v});
    }
    const AffineMotion first_fit = fit_or_fail(samples, "stage-1");

    for (std::size_t i : stage1) {
        MatchRecord& rec = result.matches[i];
        const Vec2 predicted = first_fit.position_at(rec.landmark.x, rec.landmark.y);
        const double mx = rec.landmark.x + rec.u;
        const double my = rec.landmark.y + rec.v;
        rec.residual = std::hypot(predicted.x - mx, predicted.y - my);
        rec.has_residual = true;
    }

    const std::vector<std::size_t> stage2 =
        stage2_survivors(result.matches, keep_at_least, config.max_residual);
    result.diagnostics.stage2_survivors = int(stage2.size());

    samples.clear();
    for (std::size_t i : stage2) {
        result.matches[i].stage2_pass = true;
        const MatchRecord& rec = result.matches[i];
        samples.push_back({double(rec.landmark.x), double(rec.landmark.y), rec.u, rec.v});
    }
    result.motion = fit_or_fail(samples, "stage-2");

    result.diagnostics.fit_ms = elapsed_ms(t_fit);
    result.diagnostics.lsq_fits = int(lsq_fit_invocations() - fits_before);
    result.diagnostics.total_ms = elapsed_ms(t_total);
    return result;
}

}  // namespace logmosaic
