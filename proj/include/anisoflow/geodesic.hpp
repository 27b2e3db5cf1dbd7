#pragma once

#include <memory>
#include <vector>

#include "anisoflow/curve.hpp"
#include "anisoflow/energy_density.hpp"
#include "anisoflow/surface.hpp"

namespace anisoflow {

/// First fundamental form of a graph, G = Id + grad phi (x) grad phi, and a = sqrt(det G).
struct Metric {
    Mat2 G = Mat2::Identity();
    double weight = 1.0;
};

Metric metric(const GraphSurface& surface, const Vec2& z);

/// Jet of the default three-mountain surface.
SurfaceJet mountain_phi(const Vec2& z);

/// Bundle for geodesic curvature flow on the graph: Phi(z,p) = 1/2 G(z) p.p,
/// split as Phi^+ = 1/2 (G + c_phi |z|^2 Id) p.p.
DensityBundle geodesic_bundle(std::shared_ptr<const GraphSurface> surface, double c_phi = 0.0);

/// Nodes mapped onto the surface, (X_j, phi(X_j)).
std::vector<Eigen::Vector3d> lift(const PolygonalCurve& curve, const GraphSurface& surface);

}  // namespace anisoflow
