#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "anisoflow/geodesic.hpp"
#include "anisoflow/scheme.hpp"

using namespace anisoflow;

namespace {

constexpr double kPi = std::numbers::pi;

double sup_diff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).lpNorm<Eigen::Infinity>());
    return m;
}

// Star-shaped random closed curve with J nodes on a uniform grid.
PolygonalCurve random_curve(std::size_t j, std::mt19937_64& rng, Vec2 center = Vec2::Zero()) {
    std::uniform_real_distribution<double> amp(-0.15, 0.15);
    const double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng), phase = amp(rng) * 20;
    std::vector<Vec2> x(j);
    for (std::size_t i = 0; i < j; ++i) {
        const double u = 2 * kPi * double(i) / double(j);
        const double r = 1.0 + a1 * std::cos(2 * u + phase) + a2 * std::sin(3 * u) + a3 * std::cos(5 * u);
        x[i] = center + r * Vec2(std::cos(u), std::sin(u));
    }
    return PolygonalCurve(PeriodicGrid(j), x);
}

std::vector<Vec2> perturb(const std::vector<Vec2>& x, double size, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-size, size);
    std::vector<Vec2> out = x;
    for (auto& v : out) v += Vec2(u(rng), u(rng));
    return out;
}

// Backward Euler for x_t = x_rr / |x_r|^2 with lumped weights |d^m|^2, assembled and
// solved densely without any library code beyond the curve container.
std::vector<Vec2> isotropic_oracle_step(const PolygonalCurve& old, double dt) {
    const std::size_t n = old.size();
    const double h = 1.0 / double(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs(n, 2);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t l = (j + n - 1) % n, r = (j + 1) % n;
        const double dl = (old.nodes[j] - old.nodes[l]).squaredNorm() / (h * h);
        const double dr = (old.nodes[r] - old.nodes[j]).squaredNorm() / (h * h);
        const double mass = 0.5 * h * (dl + dr) / dt;
        a(j, j) += mass + 2.0 / h;
        a(j, l) -= 1.0 / h;
        a(j, r) -= 1.0 / h;
        rhs.row(j) = mass * old.nodes[j].transpose();
    }
    const Eigen::MatrixXd x = a.partialPivLu().solve(rhs);
    std::vector<Vec2> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = x.row(j).transpose();
    return out;
}

// Residual of the scheme for test functions eta = hat_j e_k, built term by term with lumped_inner.
std::vector<Vec2> brute_force_residual(const std::vector<Vec2>& x, const PolygonalCurve& old,
                                       const DensityBundle& b, double dt) {
    const PeriodicGrid& g = old.grid;
    const std::size_t n = old.size();
    PiecewiseField<Vec2> mobility(n), flux(n), source(n);
    for (std::size_t e = 0; e < n; ++e) {
        const std::size_t r = g.next(e);
        const Vec2 dm = old.derivative(e);
        const Vec2 d = (x[r] - x[e]) / g.h(e);
        mobility[e] = {b.h_matrix(old.nodes[e], dm) * (x[e] - old.nodes[e]) / dt,
                       b.h_matrix(old.nodes[r], dm) * (x[r] - old.nodes[r]) / dt};
        flux[e] = {b.phi_grad_p(old.nodes[e], d), b.phi_grad_p(old.nodes[r], d)};
        source[e] = {b.phi_grad_z(x[e], d, Part::plus) + b.phi_grad_z(old.nodes[e], d, Part::minus),
                     b.phi_grad_z(x[r], d, Part::plus) + b.phi_grad_z(old.nodes[r], d, Part::minus)};
    }
    std::vector<Vec2> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (int k = 0; k < 2; ++k) {
            std::vector<Vec2> eta(n, Vec2::Zero());
            eta[j][k] = 1.0;
            PiecewiseField<Vec2> eta_rho(n);
            for (std::size_t e = 0; e < n; ++e) {
                const Vec2 de = (eta[g.next(e)] - eta[e]) / g.h(e);
                eta_rho[e] = {de, de};
            }
            const auto eta_h = nodal_field(eta, g);
            out[j][k] = lumped_inner(mobility, eta_h, g) + lumped_inner(flux, eta_rho, g) +
                        lumped_inner(source, eta_h, g);
        }
    }
    return out;
}

SchemeParams params_with_dt(double dt) {
    SchemeParams p;
    p.dt = dt;
    return p;
}

}  // namespace

TEST(Residual, IsotropicMatchesHandAssembledBackwardEuler) {
    std::mt19937_64 rng(1);
    const DensityBundle iso(AnisotropyDensity::isotropic());
    for (int trial = 0; trial < 10; ++trial) {
        const PolygonalCurve old = random_curve(16, rng);
        const std::vector<Vec2> cand = perturb(old.nodes, 0.05, rng);
        const double dt = 1e-3;
        const auto r = assemble_residual(PolygonalCurve(old.grid, cand), old, iso, Forcing::none(), params_with_dt(dt));
        const double h = 1.0 / 16;
        for (std::size_t j = 0; j < 16; ++j) {
            const std::size_t l = (j + 15) % 16, rr = (j + 1) % 16;
            const double mass = 0.5 * h *
                                ((old.nodes[j] - old.nodes[l]).squaredNorm() + (old.nodes[rr] - old.nodes[j]).squaredNorm()) /
                                (h * h) / dt;
            const Vec2 expected = mass * (cand[j] - old.nodes[j]) + (2 * cand[j] - cand[l] - cand[rr]) / h;
            EXPECT_LE((r[j] - expected).norm(), 1e-12 * (1 + expected.norm()));
        }
    }
}

TEST(Residual, GeodesicJ4MatchesLumpedInnerProductAssembly) {
    std::mt19937_64 rng(2);
    const auto mountain = std::make_shared<const MountainSurface>();
    const DensityBundle b = geodesic_bundle(mountain, 0.4);
    const PeriodicGrid g(std::vector<double>{0.2, 0.3, 0.25, 0.25});
    const PolygonalCurve old(g, {Vec2(0.4, 0.0), Vec2(1.6, 0.1), Vec2(1.5, 1.2), Vec2(0.5, 1.1)});
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<Vec2> cand = perturb(old.nodes, 0.1, rng);
        const double dt = 0.01;
        const auto r = assemble_residual(PolygonalCurve(g, cand), old, b, Forcing::none(), params_with_dt(dt));
        const auto oracle = brute_force_residual(cand, old, b, dt);
        for (std::size_t j = 0; j < 4; ++j) EXPECT_LE((r[j] - oracle[j]).norm(), 1e-12 * (1 + oracle[j].norm()));
    }
}

TEST(Residual, TranslationInvariantForHomogeneousDensity) {
    std::mt19937_64 rng(3);
    const DensityBundle kf(AnisotropyDensity::kfold(6, 0.028));
    const PolygonalCurve old = random_curve(20, rng);
    const std::vector<Vec2> cand = perturb(old.nodes, 0.02, rng);
    const Vec2 shift(3.5, -1.25);
    std::vector<Vec2> old_s = old.nodes, cand_s = cand;
    for (auto& v : old_s) v += shift;
    for (auto& v : cand_s) v += shift;
    const auto p = params_with_dt(1e-3);
    const auto r1 = assemble_residual(PolygonalCurve(old.grid, cand), old, kf, Forcing::none(), p);
    const auto r2 = assemble_residual(PolygonalCurve(old.grid, cand_s), PolygonalCurve(old.grid, old_s), kf,
                                      Forcing::none(), p);
    EXPECT_LE(sup_diff(r1, r2), 1e-9);
}

TEST(Jacobian, DirectionalFiniteDifferences) {
    std::mt19937_64 rng(4);
    const auto mountain = std::make_shared<const MountainSurface>();
    const std::vector<DensityBundle> bundles = {DensityBundle(AnisotropyDensity::kfold(6, 0.028)),
                                                DensityBundle(AnisotropyDensity::elliptic(0.5)),
                                                geodesic_bundle(mountain, 0.0), geodesic_bundle(mountain, 0.5)};
    for (const auto& b : bundles) {
        for (JacobianKind kind : {JacobianKind::analytic_if_available, JacobianKind::fd_colored}) {
            const PolygonalCurve old = random_curve(12, rng, Vec2(1.0, 0.6));
            SchemeParams p = params_with_dt(1e-2);
            p.jacobian = kind;
            const StepSystem sys(old, b, Forcing::none(), p);
            const std::vector<Vec2> x = perturb(old.nodes, 0.02, rng);
            const std::vector<Vec2> v = perturb(std::vector<Vec2>(12, Vec2::Zero()), 1.0, rng);
            const double eps = 1e-6;
            std::vector<Vec2> xp = x, xm = x;
            for (std::size_t i = 0; i < 12; ++i) {
                xp[i] += eps * v[i];
                xm[i] -= eps * v[i];
            }
            const auto rp = sys.residual(xp), rm = sys.residual(xm);
            const auto jv = sys.jacobian(x).multiply(v);
            double err = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < 12; ++i) {
                err = std::max(err, ((rp[i] - rm[i]) / (2 * eps) - jv[i]).norm());
                scale = std::max(scale, jv[i].norm());
            }
            EXPECT_LE(err, 1e-5 * (1 + scale));
        }
    }
}

TEST(Jacobian, IsotropicFluxBlockIsConstant) {
    std::mt19937_64 rng(5);
    const PolygonalCurve old = random_curve(10, rng);
    const DensityBundle iso(AnisotropyDensity::isotropic());
    const StepSystem sys(old, iso, Forcing::none(), params_with_dt(1e-3));
    const auto j1 = sys.jacobian(perturb(old.nodes, 0.05, rng)).to_dense();
    const auto j2 = sys.jacobian(perturb(old.nodes, 0.05, rng)).to_dense();
    EXPECT_LE((j1 - j2).norm(), 1e-9 * j1.norm());
}

TEST(Jacobian, SmallStepIsDominatedByLumpedMobility) {
    std::mt19937_64 rng(6);
    const PolygonalCurve old = random_curve(10, rng);
    const DensityBundle kf(AnisotropyDensity::kfold(6, 0.028));
    const double dt = 1e-12;
    const auto j = StepSystem(old, kf, Forcing::none(), params_with_dt(dt)).jacobian(old.nodes);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_LE(j.lower(i).norm() + j.upper(i).norm(), 1e-8 * j.diag(i).norm());
    }
}

TEST(Step, IsotropicMatchesIndependentBackwardEuler) {
    std::mt19937_64 rng(7);
    const DensityBundle iso(AnisotropyDensity::isotropic());
    for (int trial = 0; trial < 10; ++trial) {
        const PolygonalCurve old = random_curve(16, rng);
        const auto step = solve_step(old, iso, Forcing::none(), params_with_dt(1e-3));
        EXPECT_LE(sup_diff(step.curve.nodes, isotropic_oracle_step(old, 1e-3)), 1e-10);
    }
}

TEST(Step, RegularPolygonShrinksSelfSimilarly) {
    // Every node solves R^2 (R - R_old) / dt = -R, i.e. R = R_old^3 / (R_old^2 + dt).
    const DensityBundle iso(AnisotropyDensity::isotropic());
    const double dt = 0.01, r0 = 1.3;
    const PolygonalCurve old = sample_initial(circle(Vec2::Zero(), r0), PeriodicGrid(12));
    const auto step = solve_step(old, iso, Forcing::none(), params_with_dt(dt));
    const double expected = r0 * r0 * r0 / (r0 * r0 + dt);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_NEAR(step.curve.nodes[i].norm(), expected, 1e-12);
        EXPECT_NEAR(cross(old.nodes[i], step.curve.nodes[i]), 0.0, 1e-12);
    }
}

TEST(Step, EnergyEstimateHoldsForLargeSteps) {
    const PolygonalCurve mikula = sample_initial(mikula_curve, PeriodicGrid(64));
    const DensityBundle kf(AnisotropyDensity::kfold(6, 0.028));
    for (double dt : {1e-4, 1e-3, 1e-2}) {
        const auto step = solve_step(mikula, kf, Forcing::none(), params_with_dt(dt));
        EXPECT_TRUE(stability_holds(step.report)) << "dt=" << dt << " slack=" << step.report.stability_slack;
        EXPECT_NEAR(step.report.phi_energy_after + step.report.dissipation + step.report.stability_slack,
                    step.report.phi_energy_before, 1e-12 * step.report.phi_energy_before);
    }
}

TEST(Step, PositiveForcingExpandsCircle) {
    const DensityBundle iso(AnisotropyDensity::isotropic());
    const PolygonalCurve old = sample_initial(circle(Vec2::Zero(), 1.0), PeriodicGrid(32));
    const auto unforced = solve_step(old, iso, Forcing::none(), params_with_dt(1e-2));
    const auto pushed = solve_step(old, iso, Forcing::constant(5.0), params_with_dt(1e-2));
    const auto pulled = solve_step(old, iso, Forcing::constant(-1.0), params_with_dt(1e-2));
    EXPECT_GT(pushed.curve.nodes[0].norm(), 1.0);
    EXPECT_LT(pulled.curve.nodes[0].norm(), unforced.curve.nodes[0].norm());
    EXPECT_TRUE(pushed.report.forced);
}

TEST(Step, SolverVariantsAgree) {
    const auto mountain = std::make_shared<const MountainSurface>();
    const DensityBundle b = geodesic_bundle(mountain, 0.0);
    const PolygonalCurve old = sample_initial(circle(mountain->centroid(), 2.0), PeriodicGrid(32));
    const auto base = solve_step(old, b, Forcing::none(), params_with_dt(1e-2));
    SchemeParams dense = params_with_dt(1e-2);
    dense.linear_solver = LinearSolverKind::dense;
    SchemeParams fd = params_with_dt(1e-2);
    fd.jacobian = JacobianKind::fd_colored;
    SchemeParams picard = params_with_dt(1e-2);
    picard.solver = SolverKind::picard;
    picard.newton_max_iter = 200;
    for (const SchemeParams& p : {dense, fd, picard}) {
        const auto other = solve_step(old, b, Forcing::none(), p);
        EXPECT_LE(sup_diff(base.curve.nodes, other.curve.nodes), 1e-9);
    }
}

TEST(Step, NonconvergenceCarriesBestIterate) {
    const PolygonalCurve mikula = sample_initial(mikula_curve, PeriodicGrid(64));
    SchemeParams p = params_with_dt(1e-2);
    p.newton_max_iter = 1;
    try {
        solve_step(mikula, DensityBundle(AnisotropyDensity::kfold(6, 0.028)), Forcing::none(), p);
        FAIL() << "expected NonconvergenceError";
    } catch (const NonconvergenceError& e) {
        EXPECT_EQ(e.best_iterate().size(), 64u);
        EXPECT_GT(e.report().final_residual, p.newton_tol);
    }
}

TEST(Params, InvalidRejected) {
    SchemeParams p;
    p.dt = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = SchemeParams{};
    p.newton_max_iter = 0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Run, ShrinkingCircleStopsAtExtinction) {
    SchemeParams p = params_with_dt(1e-3);
    p.T = 0.2;  // a circle of radius 0.5 vanishes at t = 0.125
    const auto s = run(sample_initial(circle(Vec2::Zero(), 0.5), PeriodicGrid(32)),
                       DensityBundle(AnisotropyDensity::isotropic()), Forcing::none(), p);
    EXPECT_EQ(s.stop, StopReason::extinction);
    EXPECT_GT(s.final_time, 0.1);
    EXPECT_LT(s.final_time, 0.14);
    EXPECT_EQ(s.records.size(), s.steps + 1);
    EXPECT_EQ(s.stability_violations, 0u);
}

TEST(Run, ObserversSeeEveryStepIncludingInitial) {
    SchemeParams p = params_with_dt(1e-3);
    p.T = 0.01;
    std::vector<std::size_t> seen;
    const StepObserver obs = [&](const StepRecord& r, const PolygonalCurve&) { seen.push_back(r.step); };
    const auto s = run(sample_initial(circle(Vec2::Zero(), 1.0), PeriodicGrid(16)),
                       DensityBundle(AnisotropyDensity::isotropic()), Forcing::none(), p, {&obs, 1});
    ASSERT_EQ(seen.size(), 11u);
    for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i);
    EXPECT_NEAR(s.final_time, 0.01, 1e-15);
}
