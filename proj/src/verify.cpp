#include "anisoflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "anisoflow/geodesic.hpp"

namespace anisoflow {

double fd_check(const ScalarFn& f, const GradientFn& claimed, std::span<const Eigen::VectorXd> samples,
                double step) {
    double worst = 0.0;
    for (const Eigen::VectorXd& x : samples) {
        const Eigen::VectorXd g = claimed(x);
        Eigen::VectorXd fd(x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            Eigen::VectorXd xp = x;
            Eigen::VectorXd xm = x;
            xp[k] += step;
            xm[k] -= step;
            fd[k] = (f(xp) - f(xm)) / (2.0 * step);
        }
        worst = std::max(worst, (fd - g).norm() / (1.0 + g.norm()));
    }
    return worst;
}

double fd_check_jacobian(const VectorFn& f, const JacobianFn& claimed, std::span<const Eigen::VectorXd> samples,
                         double step) {
    double worst = 0.0;
    for (const Eigen::VectorXd& x : samples) {
        const Eigen::MatrixXd j = claimed(x);
        Eigen::MatrixXd fd(j.rows(), x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            Eigen::VectorXd xp = x;
            Eigen::VectorXd xm = x;
            xp[k] += step;
            xm[k] -= step;
            fd.col(k) = (f(xp) - f(xm)) / (2.0 * step);
        }
        worst = std::max(worst, (fd - j).norm() / (1.0 + j.norm()));
    }
    return worst;
}

double exact_circle_radius(double t, double r0) {
    if (!(t < 0.5 * r0 * r0)) {
        std::ostringstream msg;
        msg << "circle of radius " << r0 << " is extinct at t = " << 0.5 * r0 * r0 << ", asked for t = " << t;
        throw Error(msg.str());
    }
    return std::sqrt(r0 * r0 - 2.0 * t);
}

EocRecord::EocRecord(std::vector<std::size_t> elements, std::vector<double> errors)
    : elements_(std::move(elements)), errors_(std::move(errors)) {
    if (elements_.size() != errors_.size()) throw Error("EOC record needs one error per mesh");
    for (std::size_t i = 1; i < elements_.size(); ++i) {
        if (elements_[i] != 2 * elements_[i - 1]) throw Error("EOC meshes must strictly double");
    }
    for (double e : errors_) {
        if (!(e > 0.0)) throw Error("EOC errors must be positive");
    }
}

std::vector<double> EocRecord::eoc() const {
    std::vector<double> out;
    for (std::size_t i = 1; i < errors_.size(); ++i) out.push_back(std::log2(errors_[i - 1] / errors_[i]));
    return out;
}

namespace {

struct ErrorParts {
    double position = 0.0;    // ||x - x_h||_h^2
    double derivative = 0.0;  // ||x_rho - x_h,rho||_h^2
};

// Reference values at the coarse nodes and one-sided reference derivatives per coarse element.
struct ReferenceSlice {
    std::vector<Vec2> nodes;
    std::vector<Vec2> left_derivative;   // at q_e^+
    std::vector<Vec2> right_derivative;  // at q_{e+1}^-
};

ErrorParts measure(const PolygonalCurve& coarse, const ReferenceSlice& ref) {
    ErrorParts parts;
    const PeriodicGrid& grid = coarse.grid;
    for (std::size_t e = 0; e < coarse.size(); ++e) {
        const std::size_t b = grid.next(e);
        const double half_h = 0.5 * grid.h(e);
        parts.position += half_h * ((ref.nodes[e] - coarse.nodes[e]).squaredNorm() +
                                    (ref.nodes[b] - coarse.nodes[b]).squaredNorm());
        const Vec2 d = coarse.derivative(e);
        parts.derivative +=
            half_h * ((ref.left_derivative[e] - d).squaredNorm() + (ref.right_derivative[e] - d).squaredNorm());
    }
    return parts;
}

ReferenceSlice slice_exact(const ExactSolution& exact, const PeriodicGrid& grid, double t) {
    ReferenceSlice s;
    const std::size_t n = grid.size();
    s.nodes.resize(n);
    s.left_derivative.resize(n);
    s.right_derivative.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.nodes[i] = exact.position(grid.node_parameter(i), t);
    for (std::size_t e = 0; e < n; ++e) {
        s.left_derivative[e] = exact.derivative(grid.node_parameter(e), t);
        const double q_right = e + 1 == n ? 1.0 : grid.node_parameter(e + 1);
        s.right_derivative[e] = exact.derivative(q_right, t);
    }
    return s;
}

ReferenceSlice slice_reference(const PolygonalCurve& fine, std::size_t coarse_elements) {
    const std::size_t ratio = fine.size() / coarse_elements;
    ReferenceSlice s;
    s.nodes.resize(coarse_elements);
    s.left_derivative.resize(coarse_elements);
    s.right_derivative.resize(coarse_elements);
    for (std::size_t e = 0; e < coarse_elements; ++e) {
        s.nodes[e] = fine.nodes[e * ratio];
        s.left_derivative[e] = fine.derivative(e * ratio);
        s.right_derivative[e] = fine.derivative((e + 1) * ratio - 1);
    }
    return s;
}

}  // namespace

EocResult eoc_study(const EocScenario& scenario, std::span<const std::size_t> elements,
                    const SchemeParams& base_params) {
    if (elements.empty()) throw Error("EOC study needs at least one mesh");
    for (std::size_t i = 1; i < elements.size(); ++i) {
        if (elements[i] != 2 * elements[i - 1]) throw Error("EOC meshes must strictly double");
    }
    const std::size_t j_min = elements.front();
    const std::size_t j_max = elements.back();
    const auto dt_for = [&](std::size_t j) { return scenario.dt_coefficient / (double(j) * double(j)); };

    // Every coarse time level is a multiple of dt(j_max); align T to the coarsest step.
    const double dt_fine = dt_for(j_max);
    const double final_time = std::llround(scenario.T / dt_for(j_min)) * dt_for(j_min);

    // Reference snapshots at multiples of dt(j_max), indexed by that step.
    std::vector<PolygonalCurve> reference;
    if (!scenario.exact) {
        const std::size_t j_ref = scenario.reference_elements;
        if (j_ref < 4 * j_max || j_ref % j_max != 0) {
            throw Error("reference mesh must be a multiple of, and at least 4x, the finest mesh");
        }
        SchemeParams ref_params = base_params;
        ref_params.dt = dt_fine / 4.0;
        ref_params.T = final_time;
        const PolygonalCurve x0 = sample_initial(scenario.initial, PeriodicGrid(j_ref));
        const StepObserver keep = [&](const StepRecord& rec, const PolygonalCurve& curve) {
            if (rec.step % 4 == 0) reference.push_back(curve);
        };
        const TrajectorySummary summary = run(x0, scenario.bundle, Forcing::none(), ref_params, {&keep, 1});
        if (summary.stop != StopReason::completed) throw Error("reference run stopped early (extinction)");
    }

    std::vector<double> h1, l2, semi;
    for (std::size_t j : elements) {
        const PeriodicGrid grid(j);
        SchemeParams params = base_params;
        params.dt = dt_for(j);
        params.T = final_time;
        const auto stride = static_cast<std::size_t>(std::llround(params.dt / dt_fine));
        ErrorParts worst;
        double worst_total = 0.0;
        const StepObserver measure_step = [&](const StepRecord& rec, const PolygonalCurve& curve) {
            const ReferenceSlice ref = scenario.exact ? slice_exact(*scenario.exact, grid, rec.t)
                                                      : slice_reference(reference.at(rec.step * stride), j);
            const ErrorParts parts = measure(curve, ref);
            worst.position = std::max(worst.position, parts.position);
            worst.derivative = std::max(worst.derivative, parts.derivative);
            worst_total = std::max(worst_total, parts.position + parts.derivative);
        };
        const TrajectorySummary summary =
            run(sample_initial(scenario.initial, grid), scenario.bundle, Forcing::none(), params, {&measure_step, 1});
        if (summary.stop != StopReason::completed) throw Error("EOC run stopped early (extinction)");
        h1.push_back(std::sqrt(worst_total));
        l2.push_back(std::sqrt(worst.position));
        semi.push_back(std::sqrt(worst.derivative));
    }
    const std::vector<std::size_t> js(elements.begin(), elements.end());
    return {EocRecord(js, h1), EocRecord(js, l2), EocRecord(js, semi)};
}

std::vector<Vec2> wulff_boundary(const AnisotropyDensity& density, std::size_t samples) {
    if (!density.spatially_homogeneous()) throw ConfigError("Wulff shape needs a spatially homogeneous density");
    const LocalDensity local = density.at(Vec2::Zero());
    std::vector<Vec2> out(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double theta = 2.0 * std::numbers::pi * double(i) / double(samples);
        out[i] = local.grad_p(Vec2(std::cos(theta), std::sin(theta)));
    }
    return out;
}

namespace {

Vec2 head(const Eigen::VectorXd& x) { return x.head<2>(); }
Vec2 tail(const Eigen::VectorXd& x) { return x.tail<2>(); }

Eigen::VectorXd join(const Vec2& a, const Vec2& b) {
    Eigen::VectorXd v(4);
    v << a, b;
    return v;
}

struct NamedDensity {
    std::string name;
    AnisotropyDensity density;
};

struct NamedBundle {
    std::string name;
    DensityBundle bundle;
};

}  // namespace

std::vector<PropertyCheck> run_property_suite(std::uint64_t seed, std::size_t samples) {
    constexpr double kFdStep = 1e-6;
    constexpr double kFdTol = 1e-6;
    constexpr double kIdentityTol = 1e-12;

    const auto mountain = std::make_shared<const MountainSurface>();
    const std::vector<NamedDensity> densities = {
        {"isotropic", AnisotropyDensity::isotropic()},
        {"kfold(6,0.028)", AnisotropyDensity::kfold(6, 0.028)},
        {"elliptic(0.5)", AnisotropyDensity::elliptic(0.5)},
        {"mountain-metric", AnisotropyDensity::metric_induced(mountain)},
    };
    std::vector<NamedBundle> bundles;
    for (const NamedDensity& d : densities) bundles.push_back({d.name, DensityBundle(d.density)});
    bundles.push_back({"mountain-metric c_phi=0.5", geodesic_bundle(mountain, 0.5)});

    // z over the mountain region, p with |p| in [0.2, 1.5].
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> zx(-1.0, 3.0);
    std::uniform_real_distribution<double> zy(-1.0, 2.8);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> radius(0.2, 1.5);
    std::uniform_real_distribution<double> scale(-3.0, 3.0);
    std::vector<Eigen::VectorXd> cloud;  // (z, p)
    std::vector<Vec2> xis;
    std::vector<double> lambdas;
    for (std::size_t i = 0; i < samples; ++i) {
        const double th = angle(rng);
        const double r = radius(rng);
        cloud.push_back(join(Vec2(zx(rng), zy(rng)), r * Vec2(std::cos(th), std::sin(th))));
        xis.emplace_back(scale(rng), scale(rng));
        lambdas.push_back(scale(rng));
    }

    std::vector<PropertyCheck> checks;
    const auto add = [&](std::string name, double err, double tol) {
        checks.push_back({std::move(name), err, tol, err <= tol});
    };

    for (const NamedDensity& nd : densities) {
        const AnisotropyDensity& d = nd.density;
        double hom = 0.0, euler = 0.0;
        for (std::size_t i = 0; i < samples; ++i) {
            const Vec2 z = head(cloud[i]);
            const Vec2 p = tail(cloud[i]);
            const double g = d.gamma(z, p);
            hom = std::max(hom, std::abs(d.gamma(z, lambdas[i] * p) - std::abs(lambdas[i]) * g) / (1.0 + g));
            euler = std::max(euler, std::abs(d.grad_p(z, p).dot(p) - g) / (1.0 + g));
        }
        add(nd.name + ": gamma 1-homogeneity", hom, kIdentityTol);
        add(nd.name + ": Euler relation gamma_p.p = gamma", euler, kIdentityTol);

        add(nd.name + ": gamma_p vs finite differences",
            fd_check([&](const Eigen::VectorXd& x) { return d.gamma(head(x), tail(x)); },
                     [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                         return join(d.grad_z(head(x), tail(x)), d.grad_p(head(x), tail(x)));
                     },
                     cloud, kFdStep),
            kFdTol);
        {
            std::vector<Eigen::VectorXd> ps;
            for (const auto& x : cloud) ps.push_back(tail(x));
            const Vec2 z0 = head(cloud.front());
            add(nd.name + ": gamma_pp vs finite differences",
                fd_check_jacobian([&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return d.grad_p(z0, p); },
                                  [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd { return d.hess_p(z0, p); }, ps,
                                  kFdStep),
                kFdTol);
        }
        std::vector<Eigen::VectorXd> zs;
        for (const auto& x : cloud) zs.push_back(head(x));
        add(nd.name + ": weight gradient vs finite differences",
            fd_check([&](const Eigen::VectorXd& z) { return d.weight(z).value; },
                     [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return d.weight(z).grad; }, zs, kFdStep),
            kFdTol);
    }

    for (const NamedBundle& nb : bundles) {
        const DensityBundle& b = nb.bundle;
        add(nb.name + ": Phi_z, Phi_p vs finite differences",
            fd_check([&](const Eigen::VectorXd& x) { return b.phi(head(x), tail(x)); },
                     [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                         return join(b.phi_grad_z(head(x), tail(x), Part::full), b.phi_grad_p(head(x), tail(x)));
                     },
                     cloud, kFdStep),
            kFdTol);
        for (Part part : {Part::plus, Part::minus}) {
            const std::string label = part == Part::plus ? "Phi+_z" : "Phi-_z";
            std::vector<Eigen::VectorXd> zs;
            double worst = 0.0;
            for (std::size_t i = 0; i < std::min<std::size_t>(samples, 200); ++i) {
                const Vec2 p = tail(cloud[i]);
                const Eigen::VectorXd z = head(cloud[i]);
                worst = std::max(
                    worst, fd_check([&](const Eigen::VectorXd& zz) { return b.phi_part(zz, p, part); },
                                    [&](const Eigen::VectorXd& zz) -> Eigen::VectorXd {
                                        return b.phi_grad_z(zz, p, part);
                                    },
                                    {&z, 1}, kFdStep));
            }
            add(nb.name + ": " + label + " vs finite differences", worst, kFdTol);
        }
        {
            std::vector<Eigen::VectorXd> ps;
            for (const auto& x : cloud) ps.push_back(tail(x));
            const Vec2 z0 = head(cloud[1]);
            add(nb.name + ": Phi_pp vs finite differences",
                fd_check_jacobian([&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return b.phi_grad_p(z0, p); },
                                  [&](const Eigen::VectorXd& p) -> Eigen::MatrixXd { return b.phi_hess_p(z0, p); },
                                  ps, kFdStep),
                kFdTol);
        }

        double h_err = 0.0, split_err = 0.0;
        for (std::size_t i = 0; i < samples; ++i) {
            const Vec2 z = head(cloud[i]);
            const Vec2 p = tail(cloud[i]);
            const LocalBundle local = b.at(z);
            const Vec2 q = perp(p);
            const double a = local.density().weight().value;
            const double g = local.density().gamma(q);
            const double expected = a * a * g * g / local.density().grad_p(q).squaredNorm() * xis[i].squaredNorm();
            h_err = std::max(h_err, std::abs(local.h_matrix(p).quadratic_form(xis[i]) - expected) / (1.0 + expected));
            const Vec2 full = local.phi_grad_z(p, Part::full);
            const Vec2 sum = local.phi_grad_z(p, Part::plus) + local.phi_grad_z(p, Part::minus);
            split_err = std::max(split_err, (sum - full).norm() / (1.0 + full.norm()));
        }
        add(nb.name + ": H quadratic-form identity", h_err, kIdentityTol);
        add(nb.name + ": split sum identity", split_err, kIdentityTol);
    }

    {
        std::vector<Eigen::VectorXd> zs;
        for (const auto& x : cloud) zs.push_back(head(x));
        add("mountain: grad phi vs finite differences",
            fd_check([&](const Eigen::VectorXd& z) { return mountain->jet(z).value; },
                     [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return mountain->jet(z).grad; }, zs,
                     kFdStep),
            kFdTol);
        add("mountain: Hess phi vs finite differences",
            fd_check_jacobian([&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return mountain->jet(z).grad; },
                              [&](const Eigen::VectorXd& z) -> Eigen::MatrixXd { return mountain->jet(z).hess; }, zs,
                              kFdStep),
            kFdTol);
    }
    return checks;
}

}  // namespace anisoflow
