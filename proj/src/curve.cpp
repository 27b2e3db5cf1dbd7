#include "anisoflow/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace anisoflow {

PeriodicGrid::PeriodicGrid(std::size_t elements) {
    if (elements < 3) throw ConfigError("periodic grid needs J >= 3 elements");
    lengths_.assign(elements, 1.0 / double(elements));
    parameters_.resize(elements);
    for (std::size_t i = 0; i < elements; ++i) parameters_[i] = double(i) / double(elements);
}

PeriodicGrid::PeriodicGrid(std::vector<double> lengths) : lengths_(std::move(lengths)) {
    if (lengths_.size() < 3) throw ConfigError("periodic grid needs J >= 3 elements");
    if (std::any_of(lengths_.begin(), lengths_.end(), [](double h) { return !(h > 0.0); })) {
        throw ConfigError("periodic grid element lengths must be positive");
    }
    const double total = std::accumulate(lengths_.begin(), lengths_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("periodic grid element lengths must sum to 1");
    parameters_.resize(lengths_.size());
    double q = 0.0;
    for (std::size_t i = 0; i < lengths_.size(); ++i) {
        parameters_[i] = q;
        q += lengths_[i];
    }
}

double PeriodicGrid::max_h() const { return *std::max_element(lengths_.begin(), lengths_.end()); }

PolygonalCurve::PolygonalCurve(PeriodicGrid g, std::vector<Vec2> x) : grid(std::move(g)), nodes(std::move(x)) {
    if (nodes.size() != grid.size()) throw ConfigError("curve node count does not match its grid");
}

void PolygonalCurve::require_nondegenerate() const {
    for (std::size_t e = 0; e < size(); ++e) {
        const double len = edge(e).norm();
        if (!(len > 0.0) || !std::isfinite(len)) {
            std::ostringstream msg;
            msg << "collapsed edge: element " << e << " has length " << len;
            throw DegenerateEdgeError(msg.str(), e);
        }
    }
}

double lumped_inner(const PiecewiseField<Vec2>& u, const PiecewiseField<Vec2>& v, const PeriodicGrid& grid) {
    double sum = 0.0;
    for (std::size_t e = 0; e < grid.size(); ++e) {
        sum += 0.5 * grid.h(e) * (u[e].right.dot(v[e].right) + u[e].left.dot(v[e].left));
    }
    return sum;
}

double lumped_inner(const PiecewiseField<double>& u, const PiecewiseField<double>& v, const PeriodicGrid& grid) {
    double sum = 0.0;
    for (std::size_t e = 0; e < grid.size(); ++e) {
        sum += 0.5 * grid.h(e) * (u[e].right * v[e].right + u[e].left * v[e].left);
    }
    return sum;
}

PiecewiseField<Vec2> nodal_field(std::span<const Vec2> values, const PeriodicGrid& grid) {
    PiecewiseField<Vec2> field(grid.size());
    for (std::size_t e = 0; e < grid.size(); ++e) field[e] = {values[e], values[grid.next(e)]};
    return field;
}

double discrete_energy(const PolygonalCurve& curve, const AnisotropyDensity& density) {
    curve.require_nondegenerate();
    const PeriodicGrid& grid = curve.grid;
    // Per-node local densities are shared by the two adjacent elements.
    std::vector<LocalDensity> local;
    local.reserve(curve.size());
    for (const Vec2& x : curve.nodes) local.push_back(density.at(x));

    double sum = 0.0;
    for (std::size_t e = 0; e < grid.size(); ++e) {
        const std::size_t b = grid.next(e);
        const Vec2 q = perp(curve.derivative(e));
        const double left = local[e].weight().value * local[e].gamma(q);
        const double right = local[b].weight().value * local[b].gamma(q);
        sum += 0.5 * grid.h(e) * (left + right);
    }
    return sum;
}

double discrete_energy(const PolygonalCurve& curve, const DensityBundle& bundle) {
    return discrete_energy(curve, bundle.base());
}

double phi_energy(const PolygonalCurve& curve, const DensityBundle& bundle) {
    const PeriodicGrid& grid = curve.grid;
    std::vector<LocalBundle> local;
    local.reserve(curve.size());
    for (const Vec2& x : curve.nodes) local.push_back(bundle.at(x));

    double sum = 0.0;
    for (std::size_t e = 0; e < grid.size(); ++e) {
        const Vec2 d = curve.derivative(e);
        sum += 0.5 * grid.h(e) * (local[e].phi(d) + local[grid.next(e)].phi(d));
    }
    return sum;
}

ElementStats element_stats(const PolygonalCurve& curve) {
    ElementStats stats;
    const std::size_t n = curve.size();
    stats.derivatives.resize(n);
    stats.edge_lengths.resize(n);
    stats.min_edge = std::numeric_limits<double>::infinity();
    stats.max_edge = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
        stats.derivatives[e] = curve.derivative(e);
        const double len = curve.edge(e).norm();
        stats.edge_lengths[e] = len;
        stats.min_edge = std::min(stats.min_edge, len);
        stats.max_edge = std::max(stats.max_edge, len);
    }
    stats.degenerate = !(stats.min_edge > 0.0);
    stats.ratio = stats.degenerate ? std::numeric_limits<double>::infinity() : stats.max_edge / stats.min_edge;
    return stats;
}

double polygon_length(const PolygonalCurve& curve) {
    double sum = 0.0;
    for (std::size_t e = 0; e < curve.size(); ++e) sum += curve.edge(e).norm();
    return sum;
}

bool is_convex(const PolygonalCurve& curve) {
    int sign = 0;
    for (std::size_t e = 0; e < curve.size(); ++e) {
        const double c = cross(curve.edge(e), curve.edge(curve.grid.next(e)));
        const int s = (c > 0.0) - (c < 0.0);
        if (s == 0) return false;
        if (sign == 0) sign = s;
        if (s != sign) return false;
    }
    return true;
}

PolygonalCurve sample_initial(const std::function<Vec2(double)>& x0, const PeriodicGrid& grid) {
    std::vector<Vec2> nodes(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) nodes[i] = x0(grid.node_parameter(i));
    PolygonalCurve curve(grid, std::move(nodes));
    curve.require_nondegenerate();
    return curve;
}

Vec2 mikula_curve(double rho) {
    const double u = 2.0 * std::numbers::pi * rho;
    const double s = std::sin(u);
    const double s3 = std::sin(3.0 * u);
    return {std::cos(u), 0.5 * s + std::sin(std::cos(u)) + s * (0.2 + s * s3 * s3)};
}

std::function<Vec2(double)> circle(const Vec2& center, double radius) {
    return [center, radius](double rho) {
        const double u = 2.0 * std::numbers::pi * rho;
        return Vec2(center + radius * Vec2(std::cos(u), std::sin(u)));
    };
}

}  // namespace anisoflow
