#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace garch_ecf {

/// Admissible GARCH region used by the estimators: θ_i ≥ lower for every
/// coordinate and Σα + Σβ ≤ persistence_cap (coordinates 1..p−1).
struct FeasibleSet {
    double lower = 1e-8;
    double persistence_cap = 1.0 - 1e-6;

    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& theta) const;
    [[nodiscard]] bool on_boundary(const Eigen::VectorXd& theta) const;
};

/// Value, gradient and a positive semidefinite curvature approximation of
/// the objective at one point.
struct LocalModel {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd curvature;
};

using ModelFunction = std::function<LocalModel(const Eigen::VectorXd&)>;
/// Objective value only; lets trial steps skip the derivative work.
using ValueFunction = std::function<double(const Eigen::VectorXd&)>;

enum class SolverStatus { Converged, NoConvergence, BoundaryStall };

[[nodiscard]] std::string to_string(SolverStatus status);

struct TraceEntry {
    std::string stage;
    int iteration = 0;
    double value = 0.0;
    double stationarity = 0.0;
    double damping = 0.0;
};

struct SolverOptions {
    /// Convergence when gradient_scale · ‖projected gradient‖∞ falls below this.
    double grad_tol = 1e-8;
    double gradient_scale = 1.0;
    int max_iter = 200;
    std::string stage = "solve";
};

struct SolverResult {
    Eigen::VectorXd theta;
    LocalModel model;
    int iterations = 0;
    SolverStatus status = SolverStatus::NoConvergence;
    std::vector<TraceEntry> trace;
};

/// Projected quasi-Newton with Levenberg–Marquardt damping: each step solves
/// (B + S + λ·diag(B)) δ = −g, where B is the supplied curvature and S a
/// symmetric rank-one secant correction for the part of the Hessian that B
/// omits, and projects onto the feasible set. Trial points are screened with
/// `value` when given; derivatives are evaluated only at accepted points.
/// A start at which the model cannot be evaluated (NonPositiveVolatility,
/// NonStationary, SingularMatrix) yields NoConvergence with an infinite value.
[[nodiscard]] SolverResult minimize_projected(const ModelFunction& model, Eigen::VectorXd start,
                                              const FeasibleSet& feasible,
                                              const SolverOptions& options,
                                              const ValueFunction& value = {});

struct MultistartSummary {
    std::size_t best = 0;  // lowest value among converged runs (any run if none converged)
    std::size_t distinct = 0;  // distinct solutions among runs that did not fail
    int total_iterations = 0;
};

/// Two solutions are distinct when they differ by more than 1e−3 relative
/// in the max norm.
[[nodiscard]] MultistartSummary summarize_multistart(const std::vector<SolverResult>& runs);

/// Moment-matched starting points: γ̂ from the sample variance of y,
/// (α₁, β₁) drawn from a fixed perturbation list, remaining lags at 0.01 and
/// α₀ = γ̂(1 − Σα − Σβ).
[[nodiscard]] std::vector<Eigen::VectorXd> initial_guesses(const std::vector<double>& y,
                                                           std::size_t r, std::size_t s,
                                                           std::size_t count);

}  // namespace garch_ecf
