#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anisoflow/anisotropy.hpp"
#include "anisoflow/curve.hpp"
#include "anisoflow/energy_density.hpp"
#include "anisoflow/scheme.hpp"

namespace anisoflow {

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// max over samples of |central difference - claimed| / (1 + |claimed|).
double fd_check(const ScalarFn& f, const GradientFn& claimed, std::span<const Eigen::VectorXd> samples,
                double step);

/// Same for a vector map and its claimed Jacobian (Frobenius norms).
double fd_check_jacobian(const VectorFn& f, const JacobianFn& claimed, std::span<const Eigen::VectorXd> samples,
                         double step);

/// Radius sqrt(R0^2 - 2t) of a circle under isotropic curve shortening flow.
/// Throws Error for t >= R0^2 / 2.
double exact_circle_radius(double t, double r0);

/// Errors under mesh doubling.
class EocRecord {
public:
    EocRecord() = default;
    /// Throws Error unless the J values strictly double and every error is positive.
    EocRecord(std::vector<std::size_t> elements, std::vector<double> errors);

    const std::vector<std::size_t>& elements() const { return elements_; }
    const std::vector<double>& errors() const { return errors_; }
    /// log2(e_J / e_2J) for each consecutive pair.
    std::vector<double> eoc() const;

private:
    std::vector<std::size_t> elements_;
    std::vector<double> errors_;
};

/// Exact parameterised solution x(rho, t) with its derivative in rho.
struct ExactSolution {
    std::function<Vec2(double rho, double t)> position;
    std::function<Vec2(double rho, double t)> derivative;
};

struct EocScenario {
    DensityBundle bundle;
    std::function<Vec2(double)> initial;
    double T = 0.1;
    /// dt = dt_coefficient * h^2.
    double dt_coefficient = 1.0;
    /// Used as reference when present; otherwise a fine-grid run.
    std::optional<ExactSolution> exact;
    std::size_t reference_elements = 1024;
};

struct EocResult {
    /// max_m (||x - x_h||_h^2 + ||x_rho - x_h,rho||_h^2)^(1/2)
    EocRecord h1;
    /// Position part only.
    EocRecord l2;
    /// Derivative part only.
    EocRecord semi;
};

/// Runs the scenario on each J (strictly doubling) and measures errors in the
/// discrete L-infinity-in-time H1 norm against the exact or reference solution.
/// A reference run uses J_ref elements and dt_ref = dt(J_max) / 4.
EocResult eoc_study(const EocScenario& scenario, std::span<const std::size_t> elements,
                    const SchemeParams& base_params);

/// Boundary of the Wulff shape, gamma_p(n(theta)) over uniform angles.
/// Throws ConfigError for spatially varying densities.
std::vector<Vec2> wulff_boundary(const AnisotropyDensity& density, std::size_t samples);

/// Outcome of one sampled property check.
struct PropertyCheck {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Randomised checks of the calculus layer: homogeneity, Euler relations,
/// finite-difference gradients, the mobility identity and the split identity,
/// on every built-in density.
std::vector<PropertyCheck> run_property_suite(std::uint64_t seed = 7, std::size_t samples = 1000);

}  // namespace anisoflow
