#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "anisoflow/core.hpp"
#include "anisoflow/energy_density.hpp"

namespace anisoflow {

/// Partition of the periodic unit interval into J >= 3 elements.
/// Element e spans [q_e, q_{e+1}]; node J is identified with node 0.
class PeriodicGrid {
public:
    /// Uniform grid, h = 1/J.
    explicit PeriodicGrid(std::size_t elements);
    /// Non-uniform grid; lengths must be positive and sum to 1.
    explicit PeriodicGrid(std::vector<double> lengths);

    std::size_t size() const { return lengths_.size(); }
    double h(std::size_t element) const { return lengths_[element]; }
    /// Mesh size of a uniform grid (largest element otherwise).
    double max_h() const;
    double node_parameter(std::size_t node) const { return parameters_[node]; }

    std::size_t next(std::size_t i) const { return i + 1 == size() ? 0 : i + 1; }
    std::size_t prev(std::size_t i) const { return i == 0 ? size() - 1 : i - 1; }
    /// Element to the left of node i, i.e. [q_{i-1}, q_i].
    std::size_t left_element(std::size_t node) const { return prev(node); }
    /// Element to the right of node i, i.e. [q_i, q_{i+1}].
    std::size_t right_element(std::size_t node) const { return node; }

    bool operator==(const PeriodicGrid& other) const = default;

private:
    std::vector<double> lengths_;
    std::vector<double> parameters_;
};

/// Piecewise linear closed curve: node i sits at parameter q_i.
struct PolygonalCurve {
    PeriodicGrid grid;
    std::vector<Vec2> nodes;

    PolygonalCurve(PeriodicGrid g, std::vector<Vec2> x);

    std::size_t size() const { return nodes.size(); }
    Vec2 edge(std::size_t e) const { return nodes[grid.next(e)] - nodes[e]; }
    /// Element derivative x_rho on element e.
    Vec2 derivative(std::size_t e) const { return edge(e) / grid.h(e); }
    /// Throws DegenerateEdgeError when some element has zero or non-finite length.
    void require_nondegenerate() const;
};

/// One-sided values of a piecewise field on one element: left = value at q_e^+, right = at q_{e+1}^-.
template <class T>
struct ElementPair {
    T left;
    T right;
};

template <class T>
using PiecewiseField = std::vector<ElementPair<T>>;

/// Mass-lumped inner product 1/2 sum_e h_e [(u.v)(q_{e+1}^-) + (u.v)(q_e^+)].
double lumped_inner(const PiecewiseField<Vec2>& u, const PiecewiseField<Vec2>& v, const PeriodicGrid& grid);
double lumped_inner(const PiecewiseField<double>& u, const PiecewiseField<double>& v, const PeriodicGrid& grid);

/// Continuous piecewise linear field -> its one-sided element values.
PiecewiseField<Vec2> nodal_field(std::span<const Vec2> values, const PeriodicGrid& grid);

/// E^h = (gamma(x, x_rho^perp), a(x))^h.
double discrete_energy(const PolygonalCurve& curve, const AnisotropyDensity& density);
double discrete_energy(const PolygonalCurve& curve, const DensityBundle& bundle);

/// (Phi(x, x_rho), 1)^h, the quantity controlled by the stability estimate.
double phi_energy(const PolygonalCurve& curve, const DensityBundle& bundle);

struct ElementStats {
    std::vector<Vec2> derivatives;
    std::vector<double> edge_lengths;
    double min_edge = 0.0;
    double max_edge = 0.0;
    /// Longest over shortest edge; +inf when an edge has collapsed.
    double ratio = 1.0;
    bool degenerate = false;
};

ElementStats element_stats(const PolygonalCurve& curve);

double polygon_length(const PolygonalCurve& curve);

/// True when all turning cross products d_e x d_{e+1} are nonzero and share one sign.
bool is_convex(const PolygonalCurve& curve);

/// Nodal interpolation X_i = x0(q_i). Throws DegenerateEdgeError on repeated consecutive nodes.
PolygonalCurve sample_initial(const std::function<Vec2(double)>& x0, const PeriodicGrid& grid);

/// Non-convex test curve (cos u, sin u / 2 + sin(cos u) + sin u (1/5 + sin u sin^2 3u)), u = 2 pi rho.
Vec2 mikula_curve(double rho);

/// Anti-clockwise circle of the given radius.
std::function<Vec2(double)> circle(const Vec2& center, double radius);

}  // namespace anisoflow
