#pragma once

#include "garch_ecf/noise.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace garch_ecf {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/**
 * GARCH(r, s) parameter vector θ = (α₀, α₁..α_r, β₁..β_s).
 *
 * Construction enforces r ≥ 1, α₀ > 0, α_i ≥ 0, β_j ≥ 0. Stationarity
 * (Σα + Σβ < 1) is checked by the operations that need it, so that
 * non-stationary vectors can still be represented and diagnosed.
 */
class GarchParams {
public:
    GarchParams(double alpha0, std::vector<double> alpha, std::vector<double> beta);

    /// Unpacks θ laid out as (α₀, α₁..α_r, β₁..β_s).
    static GarchParams from_vector(const Eigen::VectorXd& theta, std::size_t r, std::size_t s);

    [[nodiscard]] std::size_t r() const noexcept { return alpha_.size(); }
    [[nodiscard]] std::size_t s() const noexcept { return beta_.size(); }
    /// p = r + s + 1
    [[nodiscard]] std::size_t dim() const noexcept { return 1 + r() + s(); }

    [[nodiscard]] double alpha0() const noexcept { return alpha0_; }
    [[nodiscard]] std::span<const double> alpha() const noexcept { return alpha_; }
    [[nodiscard]] std::span<const double> beta() const noexcept { return beta_; }

    /// Σα_i + Σβ_j
    [[nodiscard]] double persistence() const noexcept;
    [[nodiscard]] bool is_stationary() const noexcept { return persistence() < 1.0; }

    [[nodiscard]] Eigen::VectorXd to_vector() const;

private:
    double alpha0_;
    std::vector<double> alpha_;
    std::vector<double> beta_;
};

/// γ = α₀ / (1 − Σα − Σβ). Throws NonStationary when Σα + Σβ ≥ 1.
[[nodiscard]] double stationary_variance(const GarchParams& params);

struct SimulatedPath {
    std::vector<double> y;
    std::vector<double> sigma2;  // true conditional variance
    std::vector<double> noise;   // driving increments ΔL_n
};

inline constexpr std::size_t kDefaultBurnIn = 1000;

/// Forward simulation started at the stationary mean (σ² = y² = γ); the
/// first `burn_in` steps are discarded.
[[nodiscard]] SimulatedPath simulate(const GarchParams& params, const NoiseModel& noise,
                                     std::size_t n, std::size_t burn_in, std::int64_t seed);

/// Same recursion driven by caller-supplied increments. The first `burn_in`
/// entries of `increments` are consumed by the burn-in.
[[nodiscard]] SimulatedPath simulate_from_increments(const GarchParams& params,
                                                     std::span<const double> increments,
                                                     std::size_t burn_in);

/// Inverse filter σ_n²(θ) with pre-sample values y_n = 0, σ_n²(θ) = γ(θ) for n < 0.
[[nodiscard]] std::vector<double> invert_volatility(const GarchParams& params,
                                                    std::span<const double> y);

/// ε_n(θ) = y_n / σ_n(θ)
[[nodiscard]] std::vector<double> residuals(const GarchParams& params, std::span<const double> y);

struct Sensitivities {
    std::vector<double> sigma2;
    RowMatrix d_sigma2;  // N × p, ∂σ_n²/∂θ
    RowMatrix d_sigma;   // N × p, ∂σ_n/∂θ = ∂σ_n²/∂θ / (2σ_n)
};

[[nodiscard]] Sensitivities sensitivity_filter(const GarchParams& params,
                                               std::span<const double> y);

/// ∂²σ_n²/∂θ∂θ for every n, stored as N contiguous p × p blocks.
class SecondSensitivities {
public:
    SecondSensitivities(std::size_t n, std::size_t p) : n_(n), p_(p), data_(n * p * p, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t dim() const noexcept { return p_; }

    [[nodiscard]] double operator()(std::size_t n, std::size_t a, std::size_t b) const {
        return data_[(n * p_ + a) * p_ + b];
    }
    double& operator()(std::size_t n, std::size_t a, std::size_t b) {
        return data_[(n * p_ + a) * p_ + b];
    }
    [[nodiscard]] Eigen::Map<const RowMatrix> at(std::size_t n) const {
        return {data_.data() + n * p_ * p_, static_cast<Eigen::Index>(p_),
                static_cast<Eigen::Index>(p_)};
    }

private:
    std::size_t n_;
    std::size_t p_;
    std::vector<double> data_;
};

[[nodiscard]] SecondSensitivities second_sensitivity_filter(const GarchParams& params,
                                                            std::span<const double> y);

/// Everything the estimators consume from one pass over the data.
struct SeriesBundle {
    std::vector<double> y;
    std::vector<double> sigma2;
    RowMatrix d_sigma2;  // ∂σ_n²/∂θ
    RowMatrix sens;      // σ_θn = ∂σ_n/∂θ
    std::vector<double> eps;
    SecondSensitivities d2_sigma2{0, 0};  // filled only when requested
};

[[nodiscard]] SeriesBundle filter_series(const GarchParams& params, std::span<const double> y,
                                         bool second_order = false);

}  // namespace garch_ecf
