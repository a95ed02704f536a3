#include "logmosaic/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "logmosaic/error.hpp"

namespace logmosaic {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Variance below this relative floor counts as zero: flat 8-bit patches can
// leave ~1e-9 of cancellation noise under one-pass accumulation.
double variance_floor(double sum_sq) { return 1e-10 * std::max(sum_sq, 1.0); }

double clamp_unit(double c) { return std::clamp(c, -1.0, 1.0); }

}  // namespace

void TemplateSpec::validate() const {
    if (half_extent < 1) {
        throw Error(ErrorCode::bad_config, "template half_extent must be >= 1");
    }
}

void SearchConfig::validate() const {
    if (w_init < 2 || (w_init & (w_init - 1)) != 0) {
        throw Error(ErrorCode::bad_config, "w_init must be a power of two >= 2");
    }
    int points = neighborhood == Neighborhood::square9 ? 9 : 5;
    int rings = 1;
    for (int w = w_init; w > 1; w /= 2) ++rings;  // w_init .. 2, plus the w=1 ring
    if (max_probes < points * rings) {
        throw Error(ErrorCode::bad_config,
                    "max_probes must cover at least one full pass of rings");
    }
}

std::optional<double> ncc(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("ncc patches differ in shape");
    if (a.size() < 2) throw std::invalid_argument("ncc patches need at least 2 samples");

    const std::size_t n = a.size();
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_a += a[i];
        mean_b += b[i];
    }
    mean_a /= double(n);
    mean_b /= double(n);

    // Products commute and terms are summed in index order, so swapping the
    // arguments reproduces the identical floating-point result.
    double cross = 0.0, var_a = 0.0, var_b = 0.0, sq_a = 0.0, sq_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cross += da * db;
        var_a += da * da;
        var_b += db * db;
        sq_a += a[i] * a[i];
        sq_b += b[i] * b[i];
    }
    if (var_a <= variance_floor(sq_a) || var_b <= variance_floor(sq_b)) {
        return std::nullopt;
    }
    return clamp_unit(cross / std::sqrt(var_a * var_b));
}

PatchScorer::PatchScorer(const Raster& reference, PixelPos center, TemplateSpec spec)
    : half_(spec.half_extent) {
    spec.validate();
    if (center.x - half_ < 0 || center.y - half_ < 0 ||
        center.x + half_ >= reference.width() || center.y + half_ >= reference.height()) {
        throw std::domain_error("reference template footprint leaves the image");
    }

    const int side = spec.side();
    centered_.resize(std::size_t(side) * side);
    double mean = 0.0, sum_sq = 0.0;
    std::size_t k = 0;
    for (int dy = -half_; dy <= half_; ++dy) {
        const double* row = reference.row(center.y + dy) + (center.x - half_);
        for (int dx = 0; dx < side; ++dx, ++k) {
            centered_[k] = row[dx];
            mean += row[dx];
            sum_sq += row[dx] * row[dx];
        }
    }
    mean /= double(centered_.size());
    for (double& c : centered_) {
        c -= mean;
        ref_energy_ += c * c;
    }
    usable_ = ref_energy_ > variance_floor(sum_sq);
}

double PatchScorer::score(const Raster& object, int u, int v) const {
    if (!usable_) return kNegInf;
    if (u - half_ < 0 || v - half_ < 0 ||
        u + half_ >= object.width() || v + half_ >= object.height()) {
        return kNegInf;
    }

    const int side = 2 * half_ + 1;
    const std::size_t n = centered_.size();
    double cross = 0.0, sum = 0.0, sum_sq = 0.0;
    std::size_t k = 0;
    for (int dy = -half_; dy <= half_; ++dy) {
        const double* row = object.row(v + dy) + (u - half_);
        for (int dx = 0; dx < side; ++dx, ++k) {
            const double b = row[dx];
            cross += centered_[k] * b;  // sum of A' is zero, so no b-mean term
            sum += b;
            sum_sq += b * b;
        }
    }
    const double var_b = sum_sq - sum * sum / double(n);
    if (var_b <= variance_floor(sum_sq)) return kNegInf;
    return clamp_unit(cross / std::sqrt(ref_energy_ * var_b));
}

namespace {

struct ProbeSet {
    // Probe offsets in tie-break order; the center comes first so it wins
    // equal scores and forces w-halving (guarantees termination).
    static constexpr PixelPos cross[5] = {{0, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    static constexpr PixelPos square[9] = {{0, 0},  {1, 0},  {0, 1},  {-1, 0}, {0, -1},
                                           {1, 1},  {-1, 1}, {-1, -1}, {1, -1}};
};

std::int64_t key_of(int u, int v) {
    return (std::int64_t(u) << 32) ^ std::uint32_t(v);
}

}  // namespace

MatchResult log_search(const Raster& reference, const Raster& object,
                       PixelPos landmark, Vec2 start_displacement,
                       TemplateSpec template_spec, const SearchConfig& config,
                       const ValidityMap& object_valid,
                       std::vector<PixelPos>* probe_log) {
    config.validate();
    if (object_valid.width() != object.width() || object_valid.height() != object.height()) {
        throw std::invalid_argument("validity map does not match the object image");
    }

    const PatchScorer scorer(reference, landmark, template_spec);

    const std::span<const PixelPos> offsets =
        config.neighborhood == Neighborhood::square9
            ? std::span<const PixelPos>(ProbeSet::square)
            : std::span<const PixelPos>(ProbeSet::cross);

    int u = int(std::lround(landmark.x + start_displacement.x));
    int v = int(std::lround(landmark.y + start_displacement.y));

    std::unordered_map<std::int64_t, double> memo;
    MatchResult result;

    auto evaluate = [&](int pu, int pv) -> std::optional<double> {
        if (!object_valid.valid(pu, pv)) return std::nullopt;
        auto [it, fresh] = memo.try_emplace(key_of(pu, pv), 0.0);
        if (fresh) {
            if (result.probes >= config.max_probes) {
                throw Error(ErrorCode::search_diverged,
                            "logarithmic search exceeded max_probes");
            }
            it->second = scorer.score(object, pu, pv);
            ++result.probes;
            if (probe_log) probe_log->push_back({pu, pv});
        }
        return it->second;
    };

    int w = config.w_init;
    while (w >= 1) {
        // The center is probed first, so it keeps ties (forcing w-halving);
        // among equal arms the listed order decides.
        bool have_best = false;
        PixelPos best{};
        double best_score = kNegInf;
        for (const PixelPos& o : offsets) {
            const int pu = u + o.x * w;
            const int pv = v + o.y * w;
            auto s = evaluate(pu, pv);
            if (!s) continue;
            if (!have_best || *s > best_score) {
                have_best = true;
                best_score = *s;
                best = {pu, pv};
            }
        }
        if (!have_best) {
            // Only reachable on the first ring; afterwards the center has
            // already been evaluated as valid.
            throw Error(ErrorCode::no_valid_start,
                        "no valid probe position around the start");
        }
        if (best == PixelPos{u, v}) {
            w /= 2;  // integer halving also ends the loop after the w = 1 ring
        } else {
            u = best.x;
            v = best.y;
            ++result.shifts;
        }
    }

    result.u = u;
    result.v = v;
    auto final_score = memo.find(key_of(u, v));
    result.score = (final_score != memo.end() && std::isfinite(final_score->second))
                       ? final_score->second
                       : -1.0;
    return result;
}

}  // namespace logmosaic
