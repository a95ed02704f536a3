#include "logmosaic/affine.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>

#include "logmosaic/error.hpp"

namespace logmosaic {

namespace {

constexpr double kMinLinearDet = 1e-8;

std::atomic<std::uint64_t> g_fit_invocations{0};

// Solves the symmetric 3x3 system G x = b by Gaussian elimination with
// partial pivoting. Returns false when a pivot collapses relative to the
// matrix scale (degenerate geometry).
bool solve3(const double G[3][3], const double b[3], double x[3]) {
    double m[3][4];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m[r][c] = G[r][c];
        m[r][3] = b[r];
    }
    double scale = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) scale = std::max(scale, std::fabs(m[r][c]));
    if (scale == 0.0) return false;

    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        if (std::fabs(m[pivot][col]) < 1e-12 * scale) return false;
        if (pivot != col)
            for (int c = col; c < 4; ++c) std::swap(m[pivot][c], m[col][c]);
        for (int r = col + 1; r < 3; ++r) {
            double f = m[r][col] / m[col][col];
            for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double acc = m[r][3];
        for (int c = r + 1; c < 3; ++c) acc -= m[r][c] * x[c];
        x[r] = acc / m[r][r];
    }
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}

}  // namespace

bool AffineMotion::invertible() const {
    return std::fabs(linear_det()) > kMinLinearDet;
}

AffineMotion fit_affine_lsq(std::span<const DisplacementSample> samples) {
    g_fit_invocations.fetch_add(1, std::memory_order_relaxed);

    if (samples.size() < 3) {
        throw Error(ErrorCode::insufficient_data,
                    "affine fit needs at least 3 samples, got " +
                        std::to_string(samples.size()));
    }

    // Shared Gram matrix of the [x y 1] design rows and the two right-hand
    // sides for the decoupled u- and v-problems.
    double G[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double bu[3] = {0, 0, 0};
    double bv[3] = {0, 0, 0};
    for (const auto& s : samples) {
        const double row[3] = {s.x, s.y, 1.0};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) G[i][j] += row[i] * row[j];
            bu[i] += row[i] * s.u;
            bv[i] += row[i] * s.v;
        }
    }

    double au[3], av[3];
    if (!solve3(G, bu, au) || !solve3(G, bv, av)) {
        throw Error(ErrorCode::degenerate_geometry,
                    "affine fit design is collinear or otherwise degenerate");
    }

    // One step of iterative refinement on the normal equations keeps the
    // noiseless-recovery error well below 1e-9 at image-scale coordinates.
    auto refine = [&](const double b[3], double a[3]) {
        double r[3];
        for (int i = 0; i < 3; ++i) {
            r[i] = b[i] - (G[i][0] * a[0] + G[i][1] * a[1] + G[i][2] * a[2]);
        }
        double d[3];
        if (solve3(G, r, d)) {
            for (int i = 0; i < 3; ++i) a[i] += d[i];
        }
    };
    refine(bu, au);
    refine(bv, av);

    return {au[0], au[1], au[2], av[0], av[1], av[2]};
}

AffineMotion compose(const AffineMotion& first, const AffineMotion& second) {
    // Position maps P(x) = A x + t with A = I + J. The result's map is
    // P2(P1(x)) = (A2 A1) x + (A2 t1 + t2).
    const double a1[2][2] = {{1.0 + first.ux, first.uy}, {first.vx, 1.0 + first.vy}};
    const double a2[2][2] = {{1.0 + second.ux, second.uy}, {second.vx, 1.0 + second.vy}};

    double a[2][2];
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            a[i][j] = a2[i][0] * a1[0][j] + a2[i][1] * a1[1][j];

    const double tx = a2[0][0] * first.u0 + a2[0][1] * first.v0 + second.u0;
    const double ty = a2[1][0] * first.u0 + a2[1][1] * first.v0 + second.v0;

    return {a[0][0] - 1.0, a[0][1], tx, a[1][0], a[1][1] - 1.0, ty};
}

AffineMotion invert(const AffineMotion& motion) {
    const double det = motion.linear_det();
    if (!(std::fabs(det) > kMinLinearDet)) {
        throw Error(ErrorCode::singular_transform,
                    "motion linear part is numerically singular");
    }
    const double a00 = 1.0 + motion.ux, a01 = motion.uy;
    const double a10 = motion.vx, a11 = 1.0 + motion.vy;
    const double i00 = a11 / det, i01 = -a01 / det;
    const double i10 = -a10 / det, i11 = a00 / det;

    // P^-1(y) = A^-1 y - A^-1 t
    return {i00 - 1.0, i01, -(i00 * motion.u0 + i01 * motion.v0),
            i10, i11 - 1.0, -(i10 * motion.u0 + i11 * motion.v0)};
}

std::uint64_t lsq_fit_invocations() {
    return g_fit_invocations.load(std::memory_order_relaxed);
}

}  // namespace logmosaic
