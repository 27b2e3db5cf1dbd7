#include "anisoflow/energy_density.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace anisoflow {

namespace {

// R^T v for the perpendicular map R p = p^perp.
Vec2 rotate_back(const Vec2& v) { return {v.y(), -v.x()}; }

Mat2 perp_matrix() {
    Mat2 r;
    r << 0.0, -1.0, 1.0, 0.0;
    return r;
}

void check_user_split(const DensityBundle& bundle, const UserSplit& split) {
    if (!split.plus_value || !split.minus_value || !split.plus_grad_z || !split.minus_grad_z) {
        throw ConfigError("user split needs plus/minus values and z-gradients");
    }
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        const Vec2 z(coord(rng), coord(rng));
        const Vec2 p(0.5 * coord(rng), 0.5 * coord(rng));
        const Vec2 full = bundle.phi_grad_z(z, p, Part::full);
        const Vec2 sum = split.plus_grad_z(z, p) + split.minus_grad_z(z, p);
        if ((sum - full).norm() > 1e-10 * (1.0 + full.norm())) {
            std::ostringstream msg;
            msg << "user split violates Phi+_z + Phi-_z = Phi_z at z = (" << z.x() << ", " << z.y() << "), p = ("
                << p.x() << ", " << p.y() << "): mismatch " << (sum - full).norm();
            throw ConfigError(msg.str());
        }
    }
}

}  // namespace

double LocalBundle::phi(const Vec2& p) const {
    const double a = density_.weight().value;
    const double g = density_.gamma(perp(p));
    return 0.5 * a * a * g * g;
}

double LocalBundle::phi_part(const Vec2& p, Part part) const {
    const Vec2& z = point();
    const double full = phi(p);
    return std::visit(
        [&](const auto& split) -> double {
            using T = std::decay_t<decltype(split)>;
            if constexpr (std::is_same_v<T, HomogeneousSplit>) {
                return part == Part::minus ? 0.0 : full;
            } else if constexpr (std::is_same_v<T, GraphShiftSplit>) {
                const double shift = 0.5 * split.c_phi * z.squaredNorm() * p.squaredNorm();
                if (part == Part::full) return full;
                return part == Part::plus ? full + shift : -shift;
            } else {
                if (part == Part::full) return full;
                return part == Part::plus ? split.plus_value(z, p) : split.minus_value(z, p);
            }
        },
        bundle_->split_);
}

Vec2 LocalBundle::phi_grad_p(const Vec2& p) const {
    if (p.x() == 0.0 && p.y() == 0.0) return Vec2::Zero();
    const double a = density_.weight().value;
    const Vec2 q = perp(p);
    return a * a * density_.gamma(q) * rotate_back(density_.grad_p(q));
}

Mat2 LocalBundle::phi_hess_p(const Vec2& p) const {
    const double a = density_.weight().value;
    const Vec2 q = perp(p);
    const Vec2 gp = density_.grad_p(q);
    const Mat2 inner = gp * gp.transpose() + density_.gamma(q) * density_.hess_p(q);
    const Mat2 r = perp_matrix();
    return a * a * r.transpose() * inner * r;
}

Vec2 LocalBundle::phi_grad_z(const Vec2& p, Part part) const {
    const Vec2& z = point();
    const auto full = [&]() -> Vec2 {
        const WeightValue& w = density_.weight();
        const Vec2 q = perp(p);
        const double g = density_.gamma(q);
        return w.value * g * g * w.grad + w.value * w.value * g * density_.grad_z(q);
    };
    return std::visit(
        [&](const auto& split) -> Vec2 {
            using T = std::decay_t<decltype(split)>;
            if constexpr (std::is_same_v<T, HomogeneousSplit>) {
                return part == Part::minus ? Vec2(Vec2::Zero()) : full();
            } else if constexpr (std::is_same_v<T, GraphShiftSplit>) {
                const Vec2 shift = split.c_phi * p.squaredNorm() * z;
                if (part == Part::full) return full();
                return part == Part::plus ? Vec2(full() + shift) : Vec2(-shift);
            } else {
                if (part == Part::full) return full();
                return part == Part::plus ? split.plus_grad_z(z, p) : split.minus_grad_z(z, p);
            }
        },
        bundle_->split_);
}

MobilityMatrix LocalBundle::h_matrix(const Vec2& p) const {
    if (p.x() == 0.0 && p.y() == 0.0) {
        throw DegenerateDirectionError("mobility matrix requested at p = 0");
    }
    const double a = density_.weight().value;
    const Vec2 q = perp(p);
    const double g = density_.gamma(q);
    const Vec2 gp = density_.grad_p(q);
    const double s = gp.dot(p);
    const double scale = a * a * g / gp.squaredNorm();
    MobilityMatrix h;
    h.entries << scale * g, scale * s, -scale * s, scale * g;
    return h;
}

DensityBundle::DensityBundle(AnisotropyDensity base)
    : DensityBundle(base, base.spatially_homogeneous() ? SplitMode{HomogeneousSplit{}}
                                                       : SplitMode{GraphShiftSplit{0.0}}) {}

DensityBundle::DensityBundle(AnisotropyDensity base, SplitMode split)
    : base_(std::move(base)), split_(std::move(split)) {
    if (const auto* shift = std::get_if<GraphShiftSplit>(&split_)) {
        if (!(shift->c_phi >= 0.0)) throw ConfigError("graph-shift split requires c_phi >= 0");
    }
    if (const auto* user = std::get_if<UserSplit>(&split_)) check_user_split(*this, *user);
}

LocalBundle DensityBundle::at(const Vec2& z) const {
    LocalBundle local;
    local.density_ = base_.at(z);
    local.bundle_ = this;
    return local;
}

double DensityBundle::monotonicity_probe(const Vec2& z, const Vec2& p, const Vec2& q) const {
    const LocalBundle local = at(z);
    return (local.phi_grad_p(q) - local.phi_grad_p(p)).dot(q - p);
}

bool DensityBundle::depends_on_position() const {
    if (!base_.spatially_homogeneous()) return true;
    if (std::holds_alternative<HomogeneousSplit>(split_)) return false;
    if (const auto* shift = std::get_if<GraphShiftSplit>(&split_)) return shift->c_phi != 0.0;
    return true;
}

}  // namespace anisoflow
