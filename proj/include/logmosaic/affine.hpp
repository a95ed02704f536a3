#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "logmosaic/geometry.hpp"

namespace logmosaic {

// Six-parameter global displacement field
//
//     u(x, y) = ux*x + uy*y + u0
//     v(x, y) = vx*x + vy*y + v0
//
// (u, v) is always a displacement; the induced position map is
// P(x, y) = (x + u, y + v). Parameter order in arrays and JSON is
// [ux, uy, u0, vx, vy, v0].
struct AffineMotion {
    double ux = 0.0, uy = 0.0, u0 = 0.0;
    double vx = 0.0, vy = 0.0, v0 = 0.0;

    Vec2 displacement_at(double x, double y) const {
        return {ux * x + uy * y + u0, vx * x + vy * y + v0};
    }

    Vec2 position_at(double x, double y) const {
        return {x + ux * x + uy * y + u0, y + vx * x + vy * y + v0};
    }

    // Determinant of the linear part of the position map, (I + J).
    double linear_det() const { return (1.0 + ux) * (1.0 + vy) - uy * vx; }

    bool invertible() const;

    std::array<double, 6> params() const { return {ux, uy, u0, vx, vy, v0}; }
    static AffineMotion from_params(const std::array<double, 6>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5]};
    }

    friend bool operator==(const AffineMotion&, const AffineMotion&) = default;
};

// One displacement observation at a reference-frame position.
struct DisplacementSample {
    double x = 0.0;
    double y = 0.0;
    double u = 0.0;
    double v = 0.0;
};

// Least-squares fit of the displacement model to the samples. The u and v
// rows decouple into two 3-parameter problems sharing one design matrix;
// both are solved through the 3x3 normal equations with one step of
// iterative refinement. Throws Error{insufficient_data} for fewer than 3
// samples and Error{degenerate_geometry} for (near-)collinear positions.
AffineMotion fit_affine_lsq(std::span<const DisplacementSample> samples);

// Position map of the result applies `second` after `first`.
AffineMotion compose(const AffineMotion& first, const AffineMotion& second);

// Inverse under compose; throws Error{singular_transform} when the linear
// part of the position map is not invertible.
AffineMotion invert(const AffineMotion& motion);

// Process-wide count of fit_affine_lsq invocations. Lets callers verify how
// many fits a higher-level routine performed.
std::uint64_t lsq_fit_invocations();

}  // namespace logmosaic
