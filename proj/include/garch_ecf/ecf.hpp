#pragma once

#include "garch_ecf/garch.hpp"
#include "garch_ecf/noise.hpp"
#include "garch_ecf/solver.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace garch_ecf {

/// Strictly increasing, positive evaluation points u₁..u_M.
class UGrid {
public:
    explicit UGrid(std::vector<double> points);

    /// step·(1..count)
    static UGrid uniform(double step, std::size_t count);
    /// 0.5·(1..8)
    static UGrid default_grid() { return uniform(0.5, 8); }

    [[nodiscard]] const std::vector<double>& points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] double operator[](std::size_t k) const { return points_[k]; }

    /// Δ when u_k = kΔ for every k (powers of e^{iΔε} then give all exponentials).
    [[nodiscard]] std::optional<double> arithmetic_step() const;

    friend bool operator==(const UGrid&, const UGrid&) = default;

private:
    std::vector<double> points_;
};

inline constexpr std::size_t kDefaultTransient = 100;
inline constexpr double kDefaultRidgeFactor = 1e-10;
inline constexpr double kRidgeConditionThreshold = 1e12;
/// Stationarity tolerance of the preliminary (continuously-updated) stage.
inline constexpr double kPreliminaryTolerance = 1e-6;
/// Largest admissible move of the optimal-weighting stage away from θ̂_pre,
/// in asymptotic standard deviations (Mahalanobis distance under Σ/N).
inline constexpr double kOptimalStageRadius = 4.0;

/// C_{kl} = φ(u_k − u_l) − φ(u_k)φ(−u_l)
[[nodiscard]] Eigen::MatrixXcd c_matrix(const UGrid& grid, const NoiseModel& noise);

struct RegularizedMatrix {
    Eigen::MatrixXcd matrix;
    double condition = 1.0;  // before regularization
    bool ridge_applied = false;
    double ridge = 0.0;
};

/// Adds ridge_factor·trace(C)/M to the diagonal when cond(C) exceeds 1e12.
/// ridge_factor = 0 disables the ridge.
[[nodiscard]] RegularizedMatrix regularize(const Eigen::MatrixXcd& c, double ridge_factor);

/// φ_k = u_k φ′(u_k)
[[nodiscard]] Eigen::VectorXcd phi_vector(const UGrid& grid, const NoiseModel& noise);

/// Time-averaged stacked scores h̄ (entry k·p + a) and their θ-Jacobian.
struct ScoreSet {
    Eigen::VectorXcd h_bar;
    Eigen::MatrixXcd jac;  // empty unless requested
    /// M̂(θ) over the same observations, and its partial derivatives ∂M̂/∂θ_c
    /// when the Jacobian is requested.
    Eigen::MatrixXd m_hat;
    std::vector<Eigen::MatrixXd> m_hat_grad;
    std::size_t n_used = 0;
};

[[nodiscard]] ScoreSet scores(const GarchParams& params, std::span<const double> y,
                              const UGrid& grid, const NoiseModel& noise,
                              std::size_t transient = kDefaultTransient, bool with_jacobian = true);

/// M̂(θ) = average of σ_θn σ_θnᵀ / σ_n² over n ≥ transient.
[[nodiscard]] Eigen::MatrixXd m_hat(const GarchParams& params, std::span<const double> y,
                                    std::size_t transient = kDefaultTransient);

/// Hermitian positive definite weighting matrix with its Cholesky factor.
class WeightMatrix {
public:
    static WeightMatrix identity(std::size_t dim);
    /// Throws SingularMatrix when K is not numerically positive definite.
    static WeightMatrix from_matrix(const Eigen::MatrixXcd& k);
    /// K = C_reg ⊗ M̂
    static WeightMatrix optimal(const UGrid& grid, const NoiseModel& noise,
                                const Eigen::MatrixXd& m_hat,
                                double ridge_factor = kDefaultRidgeFactor);

    [[nodiscard]] const Eigen::MatrixXcd& matrix() const noexcept { return k_; }
    [[nodiscard]] bool is_identity() const noexcept { return identity_; }
    [[nodiscard]] bool ridge_applied() const noexcept { return ridge_applied_; }
    [[nodiscard]] double ridge() const noexcept { return ridge_; }
    [[nodiscard]] double condition() const noexcept { return condition_; }

    /// L⁻¹x with K = LL*
    [[nodiscard]] Eigen::MatrixXcd whiten(const Eigen::MatrixXcd& x) const;
    /// K⁻¹x
    [[nodiscard]] Eigen::MatrixXcd solve(const Eigen::MatrixXcd& x) const;

private:
    Eigen::MatrixXcd k_;
    Eigen::MatrixXcd l_;
    bool identity_ = false;
    bool ridge_applied_ = false;
    double ridge_ = 0.0;
    double condition_ = 1.0;
};

struct ObjectiveValue {
    double value = 0.0;         // Q = h̄* K⁻¹ h̄
    Eigen::VectorXd half_grad;  // Re(h̄_θ* K⁻¹ h̄)
};

[[nodiscard]] ObjectiveValue objective(const GarchParams& params, std::span<const double> y,
                                       const UGrid& grid, const NoiseModel& noise,
                                       const WeightMatrix& k,
                                       std::size_t transient = kDefaultTransient);

/// Continuously-updated criterion Q(θ) = h̄*(C ⊗ M̂(θ))⁻¹h̄ with its exact
/// gradient (including the θ-dependence of M̂). Rescaling the instrument
/// σ_θ/σ leaves it unchanged, which makes it a reliable preliminary
/// criterion from distant starting points.
struct CueValue {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

[[nodiscard]] CueValue cue_objective(const GarchParams& params, std::span<const double> y,
                                     const UGrid& grid, const NoiseModel& noise,
                                     double ridge_factor = kDefaultRidgeFactor,
                                     std::size_t transient = kDefaultTransient);

/// Optimal: preliminary estimate from the continuously-updated criterion,
/// then K = C ⊗ M̂(θ̂_pre) held fixed. Identity: a single stage with K = I.
enum class Weighting { Identity, Optimal };

struct EcfOptions {
    Weighting weighting = Weighting::Optimal;
    std::size_t r = 1;
    std::size_t s = 1;
    double grad_tol = 1e-8;
    int max_iter = 200;
    double ridge = kDefaultRidgeFactor;
    std::size_t multistart = 5;
    std::size_t transient = kDefaultTransient;
    FeasibleSet feasible{};
};

struct EstimationResult {
    std::string method;
    GarchParams theta{1.0, {0.0}, {}};
    SolverStatus status = SolverStatus::NoConvergence;
    double objective = 0.0;
    Eigen::VectorXd gradient;  // half-gradient (ECF) or NLL gradient (ML)
    int iterations = 0;
    std::size_t n_obs = 0;

    /// Distinct converged multistart solutions; more than one flags a
    /// possible violation of root uniqueness.
    std::size_t distinct_solutions = 0;
    bool uniqueness_violation = false;

    /// The fixed-weight stage left the neighbourhood of θ̂_pre (it can lower
    /// Q by shrinking the instrument); the continuously-updated estimate was
    /// kept instead.
    bool preliminary_retained = false;

    std::optional<GarchParams> theta_pre;
    Eigen::MatrixXd m_star_hat;
    Eigen::MatrixXd asympt_cov;  // covariance of √N(θ̂ − θ*)
    Eigen::MatrixXd covariance;  // asympt_cov / N
    double efficiency_score = 0.0;  // φ*C⁻¹φ (ECF) or μ (ML)
    Eigen::MatrixXcd weighting;
    std::vector<std::string> ridge_events;
    std::vector<TraceEntry> trace;

    [[nodiscard]] bool ok() const noexcept { return status == SolverStatus::Converged; }
};

/// Two-step ECF estimate (see Weighting), multistart in the first stage.
/// Requires y.size() ≥ 500 and grid.size() ≥ r + s + 1.
[[nodiscard]] EstimationResult estimate(std::span<const double> y, const NoiseModel& noise,
                                        const UGrid& grid, const EcfOptions& opts = {});

struct AsymptoticCovariance {
    Eigen::MatrixXd sigma;
    double efficiency_score = 0.0;
    bool ridge_applied = false;
};

/// Σ = (φ*C⁻¹φ)⁻¹ M*⁻¹; throws SingularMatrix when M* is not positive definite.
[[nodiscard]] AsymptoticCovariance asymptotic_covariance(const UGrid& grid, const NoiseModel& noise,
                                                         const Eigen::MatrixXd& m_star,
                                                         double ridge_factor = kDefaultRidgeFactor);

struct EfficiencyPoint {
    std::size_t size = 0;
    double value = 0.0;
    bool ridge_applied = false;
    double ridge = 0.0;
};

/// φ*C⁻¹φ for each grid of a nested family (each grid contains the previous).
/// One ridge, decided on the finest grid, is shared by the whole family so
/// that the values are exactly nondecreasing.
[[nodiscard]] std::vector<EfficiencyPoint> efficiency_bound(const NoiseModel& noise,
                                                            std::span<const UGrid> grids,
                                                            double ridge_factor = kDefaultRidgeFactor);

}  // namespace garch_ecf
