#include "anisoflow/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace anisoflow {

namespace {

double inf_norm(const std::vector<Vec2>& v) {
    double m = 0.0;
    for (const Vec2& x : v) m = std::max(m, x.cwiseAbs().maxCoeff());
    return m;
}

double l2_norm(const std::vector<Vec2>& v) {
    double s = 0.0;
    for (const Vec2& x : v) s += x.squaredNorm();
    return std::sqrt(s);
}

// Outer unit normal of an anti-clockwise curve on an element with derivative d.
Vec2 outer_normal(const Vec2& d) { return -perp(d) / d.norm(); }

// Step for local central differences; balances truncation and rounding error.
constexpr double kLocalStep = 6e-6;

struct GradZJet {
    Mat2 dz;  // column k: derivative with respect to z_k
    Mat2 dp;  // column k: derivative with respect to p_k
};

Mat2 grad_z_dp(const LocalBundle& local, const Vec2& p, Part part) {
    const double eps = kLocalStep * std::max(p.norm(), 1e-300);
    Mat2 out;
    for (int k = 0; k < 2; ++k) {
        Vec2 step = Vec2::Zero();
        step[k] = eps;
        out.col(k) = (local.phi_grad_z(p + step, part) - local.phi_grad_z(p - step, part)) / (2.0 * eps);
    }
    return out;
}

GradZJet grad_z_jet(const DensityBundle& bundle, const LocalBundle& local, const Vec2& p, Part part) {
    GradZJet jet;
    const Vec2& z = local.point();
    const double eps = kLocalStep * std::max(1.0, z.norm());
    for (int k = 0; k < 2; ++k) {
        Vec2 step = Vec2::Zero();
        step[k] = eps;
        jet.dz.col(k) = (bundle.phi_grad_z(z + step, p, part) - bundle.phi_grad_z(z - step, p, part)) / (2.0 * eps);
    }
    jet.dp = grad_z_dp(local, p, part);
    return jet;
}

}  // namespace

void SchemeParams::validate() const {
    if (!(dt > 0.0)) throw ConfigError("time step dt must be positive");
    if (!(T >= 0.0)) throw ConfigError("final time T must be nonnegative");
    if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
    if (newton_max_iter < 1) throw ConfigError("newton_max_iter must be at least 1");
}

Forcing Forcing::constant(double f0) {
    return Forcing{[f0](const Vec2&, const Vec2&) { return f0; }};
}

bool stability_holds(const StepReport& report) {
    return report.stability_slack >= -1e-9 * (1.0 + std::abs(report.phi_energy_before));
}

StepSystem::StepSystem(const PolygonalCurve& x_old, const DensityBundle& bundle, const Forcing& forcing,
                       const SchemeParams& params)
    : x_old_(x_old), bundle_(&bundle), params_(params), position_dependent_(bundle.depends_on_position()) {
    params_.validate();
    x_old_.require_nondegenerate();
    const PeriodicGrid& grid = x_old_.grid;
    const std::size_t n = x_old_.size();

    old_local_.reserve(n);
    for (const Vec2& x : x_old_.nodes) old_local_.push_back(bundle.at(x));

    mass_.assign(n, Mat2::Zero());
    forcing_load_.assign(n, Vec2::Zero());
    const double inv_dt = 1.0 / params_.dt;
    for (std::size_t e = 0; e < n; ++e) {
        const std::size_t a = e;
        const std::size_t b = grid.next(e);
        const Vec2 d = x_old_.derivative(e);
        const double half_h = 0.5 * grid.h(e);
        const MobilityMatrix ha = old_local_[a].h_matrix(d);
        const MobilityMatrix hb = old_local_[b].h_matrix(d);
        mass_[a] += inv_dt * half_h * ha.entries;
        mass_[b] += inv_dt * half_h * hb.entries;
        if (forcing.active()) {
            const Vec2 nu = outer_normal(d);
            forcing_load_[a] += half_h * forcing.f(x_old_.nodes[a], nu) * (ha * nu);
            forcing_load_[b] += half_h * forcing.f(x_old_.nodes[b], nu) * (hb * nu);
        }
    }
}

void StepSystem::require_valid(const std::vector<Vec2>& x_new) const {
    if (x_new.size() != x_old_.size()) throw Error("candidate curve has the wrong number of nodes");
    const PeriodicGrid& grid = x_old_.grid;
    for (std::size_t e = 0; e < x_new.size(); ++e) {
        const double len = (x_new[grid.next(e)] - x_new[e]).norm();
        if (!(len > 0.0) || !std::isfinite(len)) {
            std::ostringstream msg;
            msg << "collapsed edge in candidate curve: element " << e << " has length " << len;
            throw DegenerateEdgeError(msg.str(), e);
        }
    }
}

std::vector<Vec2> StepSystem::residual(const std::vector<Vec2>& x_new) const {
    require_valid(x_new);
    const PeriodicGrid& grid = x_old_.grid;
    const std::size_t n = x_new.size();

    std::vector<Vec2> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = mass_[i] * (x_new[i] - x_old_.nodes[i]) - forcing_load_[i];

    std::vector<LocalBundle> new_local;
    if (position_dependent_) {
        new_local.reserve(n);
        for (const Vec2& x : x_new) new_local.push_back(bundle_->at(x));
    }

    for (std::size_t e = 0; e < n; ++e) {
        const std::size_t a = e;
        const std::size_t b = grid.next(e);
        const double h = grid.h(e);
        const Vec2 d = (x_new[b] - x_new[a]) / h;
        const Vec2 flux = 0.5 * (old_local_[a].phi_grad_p(d) + old_local_[b].phi_grad_p(d));
        r[b] += flux;
        r[a] -= flux;
        if (position_dependent_) {
            r[a] += 0.5 * h * (new_local[a].phi_grad_z(d, Part::plus) + old_local_[a].phi_grad_z(d, Part::minus));
            r[b] += 0.5 * h * (new_local[b].phi_grad_z(d, Part::plus) + old_local_[b].phi_grad_z(d, Part::minus));
        }
    }
    return r;
}

void StepSystem::add_phi_p_blocks(const std::vector<Vec2>& x_new, CyclicBlockTridiag& m) const {
    const PeriodicGrid& grid = x_old_.grid;
    for (std::size_t i = 0; i < x_new.size(); ++i) m.diag(i) += mass_[i];
    for (std::size_t e = 0; e < x_new.size(); ++e) {
        const std::size_t a = e;
        const std::size_t b = grid.next(e);
        const double h = grid.h(e);
        const Vec2 d = (x_new[b] - x_new[a]) / h;
        const Mat2 k = 0.5 * (old_local_[a].phi_hess_p(d) + old_local_[b].phi_hess_p(d)) / h;
        m.diag(b) += k;
        m.lower(b) -= k;
        m.upper(a) -= k;
        m.diag(a) += k;
    }
}

CyclicBlockTridiag StepSystem::picard_matrix(const std::vector<Vec2>& x_new) const {
    require_valid(x_new);
    CyclicBlockTridiag m(x_new.size());
    add_phi_p_blocks(x_new, m);
    return m;
}

CyclicBlockTridiag StepSystem::analytic_jacobian(const std::vector<Vec2>& x_new) const {
    require_valid(x_new);
    CyclicBlockTridiag m(x_new.size());
    add_phi_p_blocks(x_new, m);
    if (!position_dependent_) return m;

    const PeriodicGrid& grid = x_old_.grid;
    std::vector<LocalBundle> new_local;
    new_local.reserve(x_new.size());
    for (const Vec2& x : x_new) new_local.push_back(bundle_->at(x));

    for (std::size_t e = 0; e < x_new.size(); ++e) {
        const std::size_t a = e;
        const std::size_t b = grid.next(e);
        const double h = grid.h(e);
        const Vec2 d = (x_new[b] - x_new[a]) / h;

        // Node a carries 1/2 h [Phi+_z(X_a, d) + Phi-_z(X^m_a, d)], d = (X_b - X_a) / h.
        const GradZJet plus_a = grad_z_jet(*bundle_, new_local[a], d, Part::plus);
        const Mat2 coupling_a = 0.5 * (plus_a.dp + grad_z_dp(old_local_[a], d, Part::minus));
        m.diag(a) += 0.5 * h * plus_a.dz - coupling_a;
        m.upper(a) += coupling_a;

        const GradZJet plus_b = grad_z_jet(*bundle_, new_local[b], d, Part::plus);
        const Mat2 coupling_b = 0.5 * (plus_b.dp + grad_z_dp(old_local_[b], d, Part::minus));
        m.diag(b) += 0.5 * h * plus_b.dz + coupling_b;
        m.lower(b) -= coupling_b;
    }
    return m;
}

CyclicBlockTridiag StepSystem::fd_jacobian(const std::vector<Vec2>& x_new) const {
    require_valid(x_new);
    const PeriodicGrid& grid = x_old_.grid;
    const std::size_t n = x_new.size();
    double mean_edge = 0.0;
    for (std::size_t e = 0; e < n; ++e) mean_edge += (x_new[grid.next(e)] - x_new[e]).norm();
    mean_edge /= double(n);
    const double eps = 1e-6 * mean_edge;

    // Columns j, j' may share a colour only if their cyclic distance is >= 3.
    const std::size_t periodic = 3 * (n / 3);
    std::vector<std::vector<std::size_t>> colours(3);
    for (std::size_t j = 0; j < periodic; ++j) colours[j % 3].push_back(j);
    for (std::size_t j = periodic; j < n; ++j) colours.push_back({j});

    CyclicBlockTridiag m(n);
    for (const auto& colour : colours) {
        for (int k = 0; k < 2; ++k) {
            std::vector<Vec2> plus = x_new;
            std::vector<Vec2> minus = x_new;
            for (std::size_t j : colour) {
                plus[j][k] += eps;
                minus[j][k] -= eps;
            }
            const std::vector<Vec2> rp = residual(plus);
            const std::vector<Vec2> rm = residual(minus);
            for (std::size_t j : colour) {
                const std::size_t l = grid.prev(j);
                const std::size_t u = grid.next(j);
                m.diag(j).col(k) = (rp[j] - rm[j]) / (2.0 * eps);
                m.upper(l).col(k) = (rp[l] - rm[l]) / (2.0 * eps);
                m.lower(u).col(k) = (rp[u] - rm[u]) / (2.0 * eps);
            }
        }
    }
    return m;
}

CyclicBlockTridiag StepSystem::jacobian(const std::vector<Vec2>& x_new) const {
    return params_.jacobian == JacobianKind::fd_colored ? fd_jacobian(x_new) : analytic_jacobian(x_new);
}

double StepSystem::mobility_norm(const std::vector<Vec2>& increment) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < increment.size(); ++i) sum += increment[i].dot(mass_[i] * increment[i]);
    return sum;
}

std::vector<Vec2> assemble_residual(const PolygonalCurve& x_new, const PolygonalCurve& x_old,
                                    const DensityBundle& bundle, const Forcing& forcing,
                                    const SchemeParams& params) {
    return StepSystem(x_old, bundle, forcing, params).residual(x_new.nodes);
}

CyclicBlockTridiag assemble_jacobian(const PolygonalCurve& x_new, const PolygonalCurve& x_old,
                                     const DensityBundle& bundle, const Forcing& forcing,
                                     const SchemeParams& params) {
    return StepSystem(x_old, bundle, forcing, params).jacobian(x_new.nodes);
}

StepResult solve_step(const PolygonalCurve& x_old, const DensityBundle& bundle, const Forcing& forcing,
                      const SchemeParams& params) {
    const StepSystem system(x_old, bundle, forcing, params);
    const auto linear_solve = [&](const CyclicBlockTridiag& m, std::vector<Vec2> rhs) {
        for (Vec2& v : rhs) v = -v;
        return params.linear_solver == LinearSolverKind::dense ? m.solve_dense(rhs) : m.solve(rhs);
    };

    std::vector<Vec2> x = x_old.nodes;
    std::vector<Vec2> r = system.residual(x);
    StepReport report;
    report.forced = forcing.active();
    report.dt_over_h = params.dt / x_old.grid.max_h();

    const auto fail = [&](const std::string& why) {
        report.final_residual = inf_norm(r);
        std::ostringstream msg;
        msg << why << " after " << report.iterations << " iterations, residual " << report.final_residual;
        throw NonconvergenceError(msg.str(), PolygonalCurve(x_old.grid, x), report);
    };

    while (inf_norm(r) > params.newton_tol) {
        if (report.iterations >= params.newton_max_iter) fail("nonlinear solver did not converge");
        const bool newton = params.solver == SolverKind::newton;
        const CyclicBlockTridiag m = newton ? system.jacobian(x) : system.picard_matrix(x);
        const std::vector<Vec2> delta = linear_solve(m, r);
        ++report.iterations;

        if (!(newton && params.damping)) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += delta[i];
            r = system.residual(x);
            continue;
        }

        const double merit = l2_norm(r);
        double alpha = 1.0;
        bool accepted = false;
        bool all_degenerate = true;
        std::size_t degenerate_element = 0;
        for (int halvings = 0; halvings <= 8 && !accepted; ++halvings, alpha *= 0.5) {
            std::vector<Vec2> trial = x;
            for (std::size_t i = 0; i < x.size(); ++i) trial[i] += alpha * delta[i];
            std::vector<Vec2> trial_r;
            try {
                trial_r = system.residual(trial);
            } catch (const DegenerateEdgeError& err) {
                degenerate_element = err.element();
                continue;
            }
            all_degenerate = false;
            if (l2_norm(trial_r) < merit || inf_norm(trial_r) <= params.newton_tol) {
                x = std::move(trial);
                r = std::move(trial_r);
                accepted = true;
            }
        }
        if (!accepted) {
            if (all_degenerate) {
                throw DegenerateEdgeError("every damped Newton trial collapsed an edge", degenerate_element);
            }
            fail("damped Newton made no progress");
        }
    }

    report.final_residual = inf_norm(r);
    PolygonalCurve x_new(x_old.grid, std::move(x));
    std::vector<Vec2> increment(x_new.size());
    for (std::size_t i = 0; i < x_new.size(); ++i) increment[i] = x_new.nodes[i] - x_old.nodes[i];

    report.energy_before = discrete_energy(x_old, bundle);
    report.energy_after = discrete_energy(x_new, bundle);
    report.phi_energy_before = phi_energy(x_old, bundle);
    report.phi_energy_after = phi_energy(x_new, bundle);
    report.dissipation = system.mobility_norm(increment);
    report.stability_slack = report.phi_energy_before - report.phi_energy_after - report.dissipation;
    return {std::move(x_new), report};
}

TrajectorySummary run(const PolygonalCurve& x0, const DensityBundle& bundle, const Forcing& forcing,
                      const SchemeParams& params, std::span<const StepObserver> observers) {
    params.validate();
    x0.require_nondegenerate();

    const auto steps = static_cast<std::size_t>(std::llround(params.T / params.dt));
    const double extinction_length = std::max(params.extinction_factor * x0.grid.max_h(), 1e-6);

    TrajectorySummary summary{0, 0.0, StopReason::completed, x0, {}, 0, 0};
    summary.records.reserve(steps + 1);

    const auto record_state = [&](std::size_t step, const StepReport& report, const PolygonalCurve& curve) {
        const ElementStats stats = element_stats(curve);
        StepRecord rec{step, double(step) * params.dt, report, stats.ratio, stats.min_edge, polygon_length(curve)};
        summary.records.push_back(rec);
        for (const StepObserver& observer : observers) observer(rec, curve);
        return rec;
    };

    StepReport initial;
    initial.energy_before = initial.energy_after = discrete_energy(x0, bundle);
    initial.phi_energy_before = initial.phi_energy_after = phi_energy(x0, bundle);
    initial.dt_over_h = params.dt / x0.grid.max_h();
    initial.forced = forcing.active();
    record_state(0, initial, x0);

    PolygonalCurve current = x0;
    for (std::size_t m = 1; m <= steps; ++m) {
        StepResult result = [&] {
            try {
                return solve_step(current, bundle, forcing, params);
            } catch (NonconvergenceError& err) {
                err.set_step(m);
                throw;
            } catch (const DegenerateEdgeError& err) {
                throw DegenerateEdgeError("step " + std::to_string(m) + ": " + err.what(), err.element());
            }
        }();
        current = std::move(result.curve);
        if (!forcing.active() && !stability_holds(result.report)) ++summary.stability_violations;
        if (result.report.iterations > params.slow_iterations) ++summary.slow_steps;
        const StepRecord rec = record_state(m, result.report, current);
        summary.steps = m;
        summary.final_time = rec.t;
        if (rec.length < extinction_length) {
            summary.stop = StopReason::extinction;
            break;
        }
    }
    summary.final_curve = std::move(current);
    return summary;
}

}  // namespace anisoflow
