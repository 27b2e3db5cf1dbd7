#include "anisoflow/surface.hpp"

#include <cmath>

namespace anisoflow {

namespace {

// exp(-t) underflows to zero well before t reaches this; past it the
// polynomial factors in the derivatives would only produce inf * 0.
constexpr double kMaxBumpExponent = 700.0;

}  // namespace

BumpJet bump(double s) {
    if (!(s < 1.0)) return {};
    const double r = 1.0 - s;
    const double t = 1.0 / r;
    if (t > kMaxBumpExponent) return {};
    const double psi = std::exp(-t);
    // psi' = -psi / r^2, psi'' = psi (2s - 1) / r^4
    const double t2 = t * t;
    return {psi, -psi * t2, psi * (2.0 * s - 1.0) * t2 * t2};
}

MountainSurface::MountainSurface()
    : MountainSurface({Vec2(0.0, 0.0), Vec2(2.0, 0.0), Vec2(1.0, std::sqrt(3.0))}, {1.0, 3.0, 4.0}) {}

MountainSurface::MountainSurface(std::array<Vec2, 3> centers, std::array<double, 3> amplitudes)
    : centers_(centers), amplitudes_(amplitudes) {}

SurfaceJet MountainSurface::jet(const Vec2& z) const {
    SurfaceJet out;
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        const Vec2 w = z - centers_[i];
        const BumpJet b = bump(2.0 * w.squaredNorm());
        if (b.value == 0.0 && b.d1 == 0.0) continue;
        const double lambda = amplitudes_[i];
        // s = 2|w|^2, grad s = 4w, hess s = 4 Id
        out.value += lambda * b.value;
        out.grad += lambda * b.d1 * 4.0 * w;
        out.hess += lambda * (16.0 * b.d2 * (w * w.transpose()) + 4.0 * b.d1 * Mat2::Identity());
    }
    return out;
}

}  // namespace anisoflow
