#pragma once

#include <array>

#include "anisoflow/core.hpp"

namespace anisoflow {

/// Height, gradient and Hessian of a graph function at one point.
struct SurfaceJet {
    double value = 0.0;
    Vec2 grad = Vec2::Zero();
    Mat2 hess = Mat2::Zero();
};

/// A surface given as the graph z -> (z1, z2, phi(z)) over the plane.
/// Implementations must be C^3 and pure.
class GraphSurface {
public:
    virtual ~GraphSurface() = default;
    virtual SurfaceJet jet(const Vec2& z) const = 0;

    double height(const Vec2& z) const { return jet(z).value; }
};

class FlatSurface final : public GraphSurface {
public:
    SurfaceJet jet(const Vec2&) const override { return {}; }
};

/// Value and first two derivatives of the smooth bump psi(s) = exp(-1/(1-s)), s < 1, else 0.
struct BumpJet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

BumpJet bump(double s);

/// Three bumps phi(z) = sum_i lambda_i psi(2|z - mu_i|^2) centred on an equilateral triangle.
class MountainSurface final : public GraphSurface {
public:
    MountainSurface();
    MountainSurface(std::array<Vec2, 3> centers, std::array<double, 3> amplitudes);

    SurfaceJet jet(const Vec2& z) const override;

    const std::array<Vec2, 3>& centers() const { return centers_; }
    const std::array<double, 3>& amplitudes() const { return amplitudes_; }
    Vec2 centroid() const { return (centers_[0] + centers_[1] + centers_[2]) / 3.0; }

private:
    std::array<Vec2, 3> centers_;
    std::array<double, 3> amplitudes_;
};

}  // namespace anisoflow
