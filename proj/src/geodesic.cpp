#include "anisoflow/geodesic.hpp"

#include <cmath>

namespace anisoflow {

Metric metric(const GraphSurface& surface, const Vec2& z) {
    const Vec2 g = surface.jet(z).grad;
    return {Mat2::Identity() + g * g.transpose(), std::sqrt(1.0 + g.squaredNorm())};
}

SurfaceJet mountain_phi(const Vec2& z) {
    static const MountainSurface surface;
    return surface.jet(z);
}

DensityBundle geodesic_bundle(std::shared_ptr<const GraphSurface> surface, double c_phi) {
    if (!(c_phi >= 0.0)) throw ConfigError("geodesic bundle requires c_phi >= 0");
    return DensityBundle(AnisotropyDensity::metric_induced(std::move(surface)), GraphShiftSplit{c_phi});
}

std::vector<Eigen::Vector3d> lift(const PolygonalCurve& curve, const GraphSurface& surface) {
    std::vector<Eigen::Vector3d> out;
    out.reserve(curve.size());
    for (const Vec2& x : curve.nodes) out.emplace_back(x.x(), x.y(), surface.height(x));
    return out;
}

}  // namespace anisoflow
