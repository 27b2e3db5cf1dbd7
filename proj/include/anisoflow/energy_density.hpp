#pragma once

#include <functional>
#include <variant>

#include "anisoflow/anisotropy.hpp"

namespace anisoflow {

enum class Part { full, plus, minus };

/// Phi^- = 0: the whole z-derivative is treated implicitly.
struct HomogeneousSplit {};

/// Phi^+ = Phi + c/2 |z|^2 |p|^2, Phi^- = -c/2 |z|^2 |p|^2.
struct GraphShiftSplit {
    double c_phi = 0.0;
};

/// Caller-provided splitting. Checked against Phi_z on a sample cloud at construction.
struct UserSplit {
    std::function<double(const Vec2& z, const Vec2& p)> plus_value;
    std::function<double(const Vec2& z, const Vec2& p)> minus_value;
    std::function<Vec2(const Vec2& z, const Vec2& p)> plus_grad_z;
    std::function<Vec2(const Vec2& z, const Vec2& p)> minus_grad_z;
};

using SplitMode = std::variant<HomogeneousSplit, GraphShiftSplit, UserSplit>;

/// Mobility matrix H(z, p) = c [[g, s], [-s, g]]: scalar plus antisymmetric part.
struct MobilityMatrix {
    Mat2 entries = Mat2::Zero();

    Vec2 operator*(const Vec2& xi) const { return entries * xi; }
    double quadratic_form(const Vec2& xi) const { return xi.dot(entries * xi); }
};

class DensityBundle;

/// Bundle quantities at a fixed point z.
class LocalBundle {
public:
    double phi(const Vec2& p) const;
    double phi_part(const Vec2& p, Part part) const;
    Vec2 phi_grad_p(const Vec2& p) const;
    Mat2 phi_hess_p(const Vec2& p) const;
    Vec2 phi_grad_z(const Vec2& p, Part part) const;
    /// Throws DegenerateDirectionError at p = 0.
    MobilityMatrix h_matrix(const Vec2& p) const;

    const LocalDensity& density() const { return density_; }
    const Vec2& point() const { return density_.point(); }

private:
    friend class DensityBundle;
    LocalDensity density_;
    const DensityBundle* bundle_ = nullptr;
};

/// Phi(z, p) = 1/2 a(z)^2 gamma(z, p^perp)^2 and everything the scheme derives from it.
class DensityBundle {
public:
    /// Default split: HomogeneousSplit for spatially homogeneous densities,
    /// GraphShiftSplit{0} otherwise.
    explicit DensityBundle(AnisotropyDensity base);
    /// Throws ConfigError for c_phi < 0 or a user split whose parts do not sum to Phi_z.
    DensityBundle(AnisotropyDensity base, SplitMode split);

    LocalBundle at(const Vec2& z) const;

    double phi(const Vec2& z, const Vec2& p) const { return at(z).phi(p); }
    double phi_part(const Vec2& z, const Vec2& p, Part part) const { return at(z).phi_part(p, part); }
    Vec2 phi_grad_p(const Vec2& z, const Vec2& p) const { return at(z).phi_grad_p(p); }
    Mat2 phi_hess_p(const Vec2& z, const Vec2& p) const { return at(z).phi_hess_p(p); }
    Vec2 phi_grad_z(const Vec2& z, const Vec2& p, Part part = Part::full) const { return at(z).phi_grad_z(p, part); }
    MobilityMatrix h_matrix(const Vec2& z, const Vec2& p) const { return at(z).h_matrix(p); }

    /// (Phi_p(z,q) - Phi_p(z,p)) . (q - p); nonnegative for convex Phi.
    double monotonicity_probe(const Vec2& z, const Vec2& p, const Vec2& q) const;

    /// False when Phi^+_z and Phi^-_z vanish identically.
    bool depends_on_position() const;

    const AnisotropyDensity& base() const { return base_; }
    const SplitMode& split() const { return split_; }

private:
    friend class LocalBundle;
    AnisotropyDensity base_;
    SplitMode split_;
};

}  // namespace anisoflow
