#pragma once

#include "garch_ecf/ecf.hpp"
#include "garch_ecf/garch.hpp"
#include "garch_ecf/noise.hpp"
#include "garch_ecf/solver.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace garch_ecf {

struct NllValue {
    double value = 0.0;  // (1/N) Σ [−log f(ε_n) + ½ log σ_n²]
    Eigen::VectorXd grad;
};

/// Averaged negative log-likelihood and its analytic gradient
/// (1/N) Σ (1 + (f′/f)(ε_n) ε_n) σ_θn/σ_n. Throws DensityUnavailable for
/// families without a closed-form density.
[[nodiscard]] NllValue neg_log_likelihood(const GarchParams& params, std::span<const double> y,
                                          const NoiseModel& noise);

struct MlOptions {
    std::size_t r = 1;
    std::size_t s = 1;
    double grad_tol = 1e-8;
    int max_iter = 200;
    std::size_t multistart = 5;
    std::size_t transient = kDefaultTransient;  // only for the plug-in M̂*
    FeasibleSet feasible{};
};

/// ML results share the estimator result layout: `objective` is the averaged
/// negative log-likelihood, `efficiency_score` is μ and
/// asympt_cov = μ⁻¹ M̂*⁻¹.
using MlResult = EstimationResult;

/// Fisher-scoring minimization of the NLL with curvature μ·(1/N)Σ σ_θσ_θᵀ/σ²,
/// under the same constraints and multistart policy as the ECF estimator.
[[nodiscard]] MlResult ml_estimate(std::span<const double> y, const NoiseModel& noise,
                                   const MlOptions& opts = {});

struct ScaleFisherIdentity {
    double lhs = 0.0;                // E[(−(f′/f)(X)X − 1)²]
    double rhs = 0.0;                // E[(f′/f)²(X)X²] − 1
    double mean_score_x = 0.0;       // E[(f′/f)(X)X], equals −1
    double mean_curvature_x2 = 0.0;  // E[(f″/f)(X)X²], equals 2
};

[[nodiscard]] ScaleFisherIdentity scale_fisher_identity_check(const NoiseModel& noise);

}  // namespace garch_ecf
