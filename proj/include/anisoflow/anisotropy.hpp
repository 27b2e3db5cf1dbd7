#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <variant>

#include "anisoflow/core.hpp"
#include "anisoflow/surface.hpp"

namespace anisoflow {

// Anisotropy kinds. Every gamma is absolutely 1-homogeneous in p and
// positive away from p = 0.

struct Isotropic {};

/// gamma(p) = |p| (1 + delta cos(k theta(p))).
struct KFold {
    int k = 6;
    double delta = 0.028;
};

/// gamma(p) = sqrt(p1^2 + delta^2 p2^2).
struct Elliptic {
    double delta = 0.5;
};

/// gamma(z, q) = sqrt(G^{-1}(z) q . q) with G the first fundamental form of a graph.
struct MetricInduced {
    std::shared_ptr<const GraphSurface> surface;
};

using DensityKind = std::variant<Isotropic, KFold, Elliptic, MetricInduced>;

struct WeightValue {
    double value = 1.0;
    Vec2 grad = Vec2::Zero();
};

struct UnitWeight {};

/// a(z) = sqrt(det G(z)) = sqrt(1 + |grad phi(z)|^2).
struct MetricDeterminantWeight {
    std::shared_ptr<const GraphSurface> surface;
};

struct UserWeight {
    std::function<WeightValue(const Vec2&)> eval;
};

using WeightKind = std::variant<UnitWeight, MetricDeterminantWeight, UserWeight>;

/// The density frozen at one point z. Evaluating several directions at the
/// same point through this avoids recomputing surface data.
class LocalDensity {
public:
    double gamma(const Vec2& p) const;
    /// Throws DegenerateDirectionError at p = 0.
    Vec2 grad_p(const Vec2& p) const;
    /// Hessian in p; throws DegenerateDirectionError at p = 0.
    Mat2 hess_p(const Vec2& p) const;
    Vec2 grad_z(const Vec2& p) const;

    const WeightValue& weight() const { return weight_; }
    const Vec2& point() const { return z_; }

private:
    friend class AnisotropyDensity;

    const DensityKind* kind_ = nullptr;
    Vec2 z_ = Vec2::Zero();
    // Metric-induced data, only filled for MetricInduced.
    Vec2 slope_ = Vec2::Zero();
    Mat2 curvature_ = Mat2::Zero();
    Mat2 metric_inverse_ = Mat2::Identity();
    WeightValue weight_;
};

class AnisotropyDensity {
public:
    /// Validates the parameters; throws ConfigError when a kfold density
    /// violates |delta| (k^2 - 1) < 1 or an elliptic one has delta <= 0.
    explicit AnisotropyDensity(DensityKind kind, WeightKind weight = UnitWeight{});

    static AnisotropyDensity isotropic() { return AnisotropyDensity(Isotropic{}); }
    static AnisotropyDensity kfold(int k, double delta) { return AnisotropyDensity(KFold{k, delta}); }
    static AnisotropyDensity elliptic(double delta) { return AnisotropyDensity(Elliptic{delta}); }
    /// Riemannian length density of a graph: metric-induced gamma with weight sqrt(det G).
    static AnisotropyDensity metric_induced(std::shared_ptr<const GraphSurface> surface);

    LocalDensity at(const Vec2& z) const;

    double gamma(const Vec2& z, const Vec2& p) const { return at(z).gamma(p); }
    Vec2 grad_p(const Vec2& z, const Vec2& p) const { return at(z).grad_p(p); }
    Mat2 hess_p(const Vec2& z, const Vec2& p) const { return at(z).hess_p(p); }
    Vec2 grad_z(const Vec2& z, const Vec2& p) const { return at(z).grad_z(p); }
    WeightValue weight(const Vec2& z) const { return at(z).weight(); }

    /// True when neither gamma nor a depends on z.
    bool spatially_homogeneous() const;

    const DensityKind& kind() const { return kind_; }
    const WeightKind& weight_kind() const { return weight_kind_; }

private:
    DensityKind kind_;
    WeightKind weight_kind_;
};

AnisotropyDensity make_density(DensityKind kind, WeightKind weight = UnitWeight{});

}  // namespace anisoflow
