#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "anisoflow/block_tridiag.hpp"
#include "anisoflow/curve.hpp"
#include "anisoflow/energy_density.hpp"

namespace anisoflow {

enum class SolverKind { newton, picard };
enum class JacobianKind { analytic_if_available, fd_colored };
enum class LinearSolverKind { cyclic, dense };

struct SchemeParams {
    double dt = 1e-4;
    double T = 0.0;
    /// Sup-norm tolerance on the nodal residual.
    double newton_tol = 1e-10;
    int newton_max_iter = 25;
    /// Backtracking on the residual norm, factor 1/2, at most 8 halvings.
    bool damping = true;
    SolverKind solver = SolverKind::newton;
    JacobianKind jacobian = JacobianKind::analytic_if_available;
    LinearSolverKind linear_solver = LinearSolverKind::cyclic;
    /// Extinction when the polygon length drops below max(extinction_factor * h, 1e-6).
    double extinction_factor = 10.0;
    /// Steps needing more iterations than this are counted as slow.
    int slow_iterations = 10;

    /// Throws ConfigError on dt <= 0, newton_tol <= 0 or newton_max_iter < 1.
    void validate() const;
};

/// Normal forcing f(z, nu). Positive values push the curve along nu, the
/// outer unit normal of an anti-clockwise curve, i.e. they expand it.
struct Forcing {
    std::function<double(const Vec2& z, const Vec2& normal)> f;

    static Forcing none() { return {}; }
    static Forcing constant(double f0);
    bool active() const { return static_cast<bool>(f); }
};

struct StepReport {
    int iterations = 0;
    double final_residual = 0.0;
    /// Discrete energy E^h before and after the step.
    double energy_before = 0.0;
    double energy_after = 0.0;
    /// (Phi, 1)^h before and after the step.
    double phi_energy_before = 0.0;
    double phi_energy_after = 0.0;
    /// (1/dt) (H(x^m)(x^{m+1} - x^m), x^{m+1} - x^m)^h.
    double dissipation = 0.0;
    /// phi_energy_before - phi_energy_after - dissipation; nonnegative for exact unforced solves.
    double stability_slack = 0.0;
    double dt_over_h = 0.0;
    bool forced = false;
};

/// Stability tolerance for one step: slack >= -1e-9 (1 + |energy|).
bool stability_holds(const StepReport& report);

class NonconvergenceError : public Error {
public:
    NonconvergenceError(const std::string& what, PolygonalCurve best, StepReport report)
        : Error(what), best_(std::move(best)), report_(report) {}

    const PolygonalCurve& best_iterate() const { return best_; }
    const StepReport& report() const { return report_; }
    std::size_t step() const { return step_; }
    void set_step(std::size_t step) { step_ = step; }

private:
    PolygonalCurve best_;
    StepReport report_;
    std::size_t step_ = 0;
};

/// The nonlinear system of one time step, with everything that depends only
/// on x^m (mobility blocks, forcing) precomputed.
///
/// Nodal residual, with l/r the elements left/right of node j and d^new the
/// element derivatives of the candidate:
///   R_j = (1/dt) 1/2 [h_l H(X^m_j, d^m_l) + h_r H(X^m_j, d^m_r)] (X_j - X^m_j)
///       + P_l - P_r,   P_e = 1/2 [Phi_p(X^m_a, d^new_e) + Phi_p(X^m_b, d^new_e)] for e = [a, b]
///       + 1/2 sum_{e in {l,r}} h_e [Phi+_z(X_j, d^new_e) + Phi-_z(X^m_j, d^new_e)]
///       - 1/2 sum_{e in {l,r}} h_e f(X^m_j, nu_e) H(X^m_j, d^m_e) nu_e.
class StepSystem {
public:
    /// The bundle must outlive the system.
    StepSystem(const PolygonalCurve& x_old, const DensityBundle& bundle, const Forcing& forcing,
               const SchemeParams& params);

    std::vector<Vec2> residual(const std::vector<Vec2>& x_new) const;
    /// Jacobian selected by params.jacobian.
    CyclicBlockTridiag jacobian(const std::vector<Vec2>& x_new) const;
    /// Phi_pp in closed form; z-derivatives of Phi^+-_z by local central differences.
    CyclicBlockTridiag analytic_jacobian(const std::vector<Vec2>& x_new) const;
    /// Central differences of the full residual, columns grouped by a distance-3 colouring.
    CyclicBlockTridiag fd_jacobian(const std::vector<Vec2>& x_new) const;
    /// Frozen-coefficient matrix: mobility plus Phi_pp at the current iterate, z-terms lagged.
    CyclicBlockTridiag picard_matrix(const std::vector<Vec2>& x_new) const;

    /// (1/dt)(H(x^m) v, v)^h for a nodal increment v.
    double mobility_norm(const std::vector<Vec2>& increment) const;

    const PolygonalCurve& old_curve() const { return x_old_; }

private:
    void add_phi_p_blocks(const std::vector<Vec2>& x_new, CyclicBlockTridiag& m) const;
    void require_valid(const std::vector<Vec2>& x_new) const;

    PolygonalCurve x_old_;
    const DensityBundle* bundle_;
    SchemeParams params_;
    bool position_dependent_;
    std::vector<LocalBundle> old_local_;
    std::vector<Mat2> mass_;
    std::vector<Vec2> forcing_load_;
};

std::vector<Vec2> assemble_residual(const PolygonalCurve& x_new, const PolygonalCurve& x_old,
                                    const DensityBundle& bundle, const Forcing& forcing,
                                    const SchemeParams& params);

CyclicBlockTridiag assemble_jacobian(const PolygonalCurve& x_new, const PolygonalCurve& x_old,
                                     const DensityBundle& bundle, const Forcing& forcing,
                                     const SchemeParams& params);

struct StepResult {
    PolygonalCurve curve;
    StepReport report;
};

/// One step from x_old; Newton (or Picard) starts at x_old.
/// Throws NonconvergenceError or DegenerateEdgeError.
StepResult solve_step(const PolygonalCurve& x_old, const DensityBundle& bundle, const Forcing& forcing,
                      const SchemeParams& params);

struct StepRecord {
    std::size_t step = 0;
    double t = 0.0;
    StepReport report;
    double ratio = 1.0;
    double min_edge = 0.0;
    double length = 0.0;
};

enum class StopReason { completed, extinction };

struct TrajectorySummary {
    std::size_t steps = 0;
    double final_time = 0.0;
    StopReason stop = StopReason::completed;
    PolygonalCurve final_curve;
    /// Entry 0 is the initial state.
    std::vector<StepRecord> records;
    std::size_t stability_violations = 0;
    std::size_t slow_steps = 0;
};

using StepObserver = std::function<void(const StepRecord&, const PolygonalCurve&)>;

/// Advances x0 to params.T with uniform steps, calling every observer after
/// each step (and once for the initial state). Stops early on extinction.
/// Solver failures are rethrown with the step index attached.
TrajectorySummary run(const PolygonalCurve& x0, const DensityBundle& bundle, const Forcing& forcing,
                      const SchemeParams& params, std::span<const StepObserver> observers = {});

}  // namespace anisoflow
