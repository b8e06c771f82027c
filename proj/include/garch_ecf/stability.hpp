#pragma once

#include "garch_ecf/garch.hpp"
#include "garch_ecf/noise.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace garch_ecf {

/// Random matrix of the form constant + (ΔL)²·scale.
struct AffineRandomMatrix {
    Eigen::MatrixXd constant;
    Eigen::MatrixXd scale;

    [[nodiscard]] Eigen::Index dim() const noexcept { return constant.rows(); }
    [[nodiscard]] Eigen::MatrixXd draw(double squared_increment) const {
        return constant + squared_increment * scale;
    }
};

/// State-transition matrix A_n of X_n = (y_n²..y_{n−r+1}², σ_n²..σ_{n−s+1}²).
/// No admissibility checks, so that boundary and invalid coefficient sets
/// can be inspected.
[[nodiscard]] AffineRandomMatrix state_matrix(std::span<const double> alpha,
                                              std::span<const double> beta);
[[nodiscard]] AffineRandomMatrix state_matrix(const GarchParams& params);

/// Companion block of the inverse recursion driven by β(θ) (s × s).
[[nodiscard]] Eigen::MatrixXd volatility_companion(std::span<const double> beta);

/// Transition matrix of (X_n, σ_n²(θ)..σ_{n−s+1}²(θ)): lower block-triangular
/// with diagonal blocks A_n and the companion of β(θ).
[[nodiscard]] AffineRandomMatrix expanded_state_matrix(const GarchParams& truth,
                                                       const GarchParams& theta);

struct StateMatrixSpec {
    AffineRandomMatrix matrix;
    /// even_moments[j − 1] = E[ΔL^{2j}]
    std::vector<double> even_moments;
};

/// Moments up to E[ΔL^{2·max_power}] taken from the noise model.
[[nodiscard]] StateMatrixSpec make_state_spec(const AffineRandomMatrix& matrix,
                                              const NoiseModel& noise, int max_power = 4);

/// E[A^{⊗q}] for 1 ≤ q ≤ 4, expanding each Kronecker monomial in (ΔL²)^j
/// and replacing it by m_{2j}. Throws MomentUnavailable when a moment is missing.
[[nodiscard]] Eigen::MatrixXd expected_kron_power(const StateMatrixSpec& spec, int q);

/// max |eigenvalue|; for dimension > 64 the result is cross-checked by power iteration.
[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& m);

struct RadiusPair {
    double lhs;  // ρ[E P^{⊗q}]
    double rhs;  // max(ρ[E P₁^{⊗q}], ρ[E P₂^{⊗q}])
};

/// Both sides of the block-triangular identity for P = [[P₁, 0], [B, P₂]],
/// with expectations taken over the supplied equally weighted samples.
[[nodiscard]] RadiusPair block_triangular_radius_check(std::span<const Eigen::MatrixXd> p1,
                                                       std::span<const Eigen::MatrixXd> p2,
                                                       std::span<const Eigen::MatrixXd> coupling,
                                                       int q);

/// Exact-moment version for blocks driven by the same ΔL².
[[nodiscard]] RadiusPair block_triangular_radius_check(const AffineRandomMatrix& p1,
                                                       const AffineRandomMatrix& p2,
                                                       const AffineRandomMatrix& coupling,
                                                       std::span<const double> even_moments,
                                                       int q);

struct LyapunovFit {
    double slope = 0.0;  // λ_q estimate; −∞ when products vanish
    double intercept = 0.0;
    double r_squared = 0.0;
    bool vanished = false;
    bool precondition_holds = true;  // ρ[E A^{⊗q}] < 1
    double rho = 0.0;
    std::vector<double> log_moments;  // log E‖P_n⋯P_1‖_F^q, n = 1..n_max
};

/// Monte Carlo estimate of λ_q = lim (1/n) log E‖P_n⋯P_1‖^q with Frobenius
/// norm, products renormalized every step. The slope is fitted on the second
/// half of n = 1..n_max.
[[nodiscard]] LyapunovFit estimate_lambda_q(const StateMatrixSpec& spec, const NoiseModel& noise,
                                            int q, std::size_t n_max, std::size_t reps,
                                            std::int64_t seed);

/// True iff C(z) = Σα_i z^{r−i} and D(z) = z^s − Σβ_j z^{s−j} have no common
/// root, judged by a relative resultant threshold. C ≡ 0 counts as not coprime.
[[nodiscard]] bool check_coprime(std::span<const double> alpha, std::span<const double> beta);
[[nodiscard]] bool check_coprime(const GarchParams& params);

/// Sylvester resultant of two polynomials given by coefficients, highest degree first.
[[nodiscard]] double resultant(std::span<const double> p, std::span<const double> q);

}  // namespace garch_ecf
