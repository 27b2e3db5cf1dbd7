#include "anisoflow/anisotropy.hpp"

#include <cmath>
#include <sstream>

namespace anisoflow {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_direction(const Vec2& p) {
    if (p.x() == 0.0 && p.y() == 0.0) {
        throw DegenerateDirectionError("anisotropy derivative requested at p = 0");
    }
}

void validate(const DensityKind& kind, const WeightKind& weight) {
    std::visit(Overloaded{
                   [](const Isotropic&) {},
                   [](const KFold& f) {
                       if (f.k < 1) {
                           throw ConfigError("kfold anisotropy requires k >= 1, got k = " + std::to_string(f.k));
                       }
                       const double bound = std::abs(f.delta) * (double(f.k) * f.k - 1.0);
                       if (!(bound < 1.0) || !(std::abs(f.delta) < 1.0)) {
                           std::ostringstream msg;
                           msg << "kfold anisotropy is not strictly convex: |delta| (k^2 - 1) = "
                               << std::abs(f.delta) << " * " << (f.k * f.k - 1) << " = " << bound
                               << " must be < 1 (and |delta| < 1)";
                           throw ConfigError(msg.str());
                       }
                   },
                   [](const Elliptic& e) {
                       if (!(e.delta > 0.0)) {
                           std::ostringstream msg;
                           msg << "elliptic anisotropy requires delta > 0, got " << e.delta;
                           throw ConfigError(msg.str());
                       }
                   },
                   [](const MetricInduced& m) {
                       if (!m.surface) throw ConfigError("metric-induced anisotropy needs a surface");
                   },
               },
               kind);
    std::visit(Overloaded{
                   [](const UnitWeight&) {},
                   [](const MetricDeterminantWeight& w) {
                       if (!w.surface) throw ConfigError("metric-determinant weight needs a surface");
                   },
                   [](const UserWeight& w) {
                       if (!w.eval) throw ConfigError("user weight needs an evaluator");
                   },
               },
               weight);
}

}  // namespace

double LocalDensity::gamma(const Vec2& p) const {
    return std::visit(Overloaded{
                          [&](const Isotropic&) { return p.norm(); },
                          [&](const KFold& f) {
                              const double r = p.norm();
                              if (r == 0.0) return 0.0;
                              const double theta = std::atan2(p.y(), p.x());
                              return r * (1.0 + f.delta * std::cos(f.k * theta));
                          },
                          [&](const Elliptic& e) { return std::hypot(p.x(), e.delta * p.y()); },
                          [&](const MetricInduced&) {
                              return std::sqrt(std::max(0.0, p.dot(metric_inverse_ * p)));
                          },
                      },
                      *kind_);
}

Vec2 LocalDensity::grad_p(const Vec2& p) const {
    require_direction(p);
    return std::visit(Overloaded{
                          [&](const Isotropic&) -> Vec2 { return p / p.norm(); },
                          [&](const KFold& f) -> Vec2 {
                              const double r = p.norm();
                              const double theta = std::atan2(p.y(), p.x());
                              const double kt = f.k * theta;
                              return ((1.0 + f.delta * std::cos(kt)) * p - f.k * f.delta * std::sin(kt) * perp(p)) / r;
                          },
                          [&](const Elliptic& e) -> Vec2 {
                              const double g = std::hypot(p.x(), e.delta * p.y());
                              return Vec2(p.x(), e.delta * e.delta * p.y()) / g;
                          },
                          [&](const MetricInduced&) -> Vec2 {
                              const Vec2 w = metric_inverse_ * p;
                              return w / std::sqrt(p.dot(w));
                          },
                      },
                      *kind_);
}

Mat2 LocalDensity::hess_p(const Vec2& p) const {
    require_direction(p);
    return std::visit(Overloaded{
                          [&](const Isotropic&) -> Mat2 {
                              const double r = p.norm();
                              const Vec2 n = p / r;
                              return (Mat2::Identity() - n * n.transpose()) / r;
                          },
                          [&](const KFold& f) -> Mat2 {
                              // 1-homogeneous in 2D: gamma_pp = (f + f'') / r * t t^T, t the unit tangent.
                              const double r = p.norm();
                              const double theta = std::atan2(p.y(), p.x());
                              const double stiffness = 1.0 + f.delta * (1.0 - double(f.k) * f.k) * std::cos(f.k * theta);
                              const Vec2 t = perp(p) / r;
                              return stiffness / r * (t * t.transpose());
                          },
                          [&](const Elliptic& e) -> Mat2 {
                              const double g = std::hypot(p.x(), e.delta * p.y());
                              const Vec2 gp = Vec2(p.x(), e.delta * e.delta * p.y()) / g;
                              Mat2 d = Mat2::Zero();
                              d(0, 0) = 1.0;
                              d(1, 1) = e.delta * e.delta;
                              return (d - gp * gp.transpose()) / g;
                          },
                          [&](const MetricInduced&) -> Mat2 {
                              const Vec2 w = metric_inverse_ * p;
                              const double g = std::sqrt(p.dot(w));
                              const Vec2 gp = w / g;
                              return (metric_inverse_ - gp * gp.transpose()) / g;
                          },
                      },
                      *kind_);
}

Vec2 LocalDensity::grad_z(const Vec2& p) const {
    if (!std::holds_alternative<MetricInduced>(*kind_)) return Vec2::Zero();
    // d/dz_k (G^{-1} q.q) = -(d_k G) w.w with w = G^{-1} q and
    // d_k G = (Hess e_k) g^T + g (Hess e_k)^T, so grad_z gamma^2 = -2 (g.w) Hess w.
    const Vec2 w = metric_inverse_ * p;
    const double g2 = p.dot(w);
    if (g2 <= 0.0) return Vec2::Zero();
    return -(slope_.dot(w)) * (curvature_ * w) / std::sqrt(g2);
}

AnisotropyDensity::AnisotropyDensity(DensityKind kind, WeightKind weight)
    : kind_(std::move(kind)), weight_kind_(std::move(weight)) {
    validate(kind_, weight_kind_);
}

AnisotropyDensity AnisotropyDensity::metric_induced(std::shared_ptr<const GraphSurface> surface) {
    return AnisotropyDensity(MetricInduced{surface}, MetricDeterminantWeight{surface});
}

AnisotropyDensity make_density(DensityKind kind, WeightKind weight) {
    return AnisotropyDensity(std::move(kind), std::move(weight));
}

bool AnisotropyDensity::spatially_homogeneous() const {
    return !std::holds_alternative<MetricInduced>(kind_) && std::holds_alternative<UnitWeight>(weight_kind_);
}

LocalDensity AnisotropyDensity::at(const Vec2& z) const {
    LocalDensity local;
    local.kind_ = &kind_;
    local.z_ = z;

    std::optional<SurfaceJet> kind_jet;
    const GraphSurface* kind_surface = nullptr;
    if (const auto* m = std::get_if<MetricInduced>(&kind_)) {
        kind_surface = m->surface.get();
        kind_jet = kind_surface->jet(z);
        const Vec2& g = kind_jet->grad;
        local.slope_ = g;
        local.curvature_ = kind_jet->hess;
        local.metric_inverse_ = Mat2::Identity() - (g * g.transpose()) / (1.0 + g.squaredNorm());
    }

    local.weight_ = std::visit(Overloaded{
                                   [](const UnitWeight&) { return WeightValue{}; },
                                   [&](const MetricDeterminantWeight& w) {
                                       const SurfaceJet jet = (kind_jet && w.surface.get() == kind_surface)
                                                                  ? *kind_jet
                                                                  : w.surface->jet(z);
                                       const double a = std::sqrt(1.0 + jet.grad.squaredNorm());
                                       return WeightValue{a, Vec2(jet.hess * jet.grad / a)};
                                   },
                                   [&](const UserWeight& w) { return w.eval(z); },
                               },
                               weight_kind_);
    if (!(local.weight_.value > 0.0) || !std::isfinite(local.weight_.value)) {
        std::ostringstream msg;
        msg << "weight a(z) must be positive, got " << local.weight_.value << " at z = (" << z.x() << ", " << z.y()
            << ")";
        throw Error(msg.str());
    }
    return local;
}

}  // namespace anisoflow
