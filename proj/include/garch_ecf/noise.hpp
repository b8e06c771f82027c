#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace garch_ecf {

enum class NoiseFamily { Gaussian, VarianceGamma };

/**
 * Standardized (zero mean, unit variance) increment law of a Lévy process.
 *
 * Gaussian: N(0, 1).
 * VarianceGamma: symmetric VG with shape ν, realized as √G·Z where G is
 * gamma distributed with mean 1 and variance ν, and Z ~ N(0, 1).
 * Characteristic function (1 + ν u²/2)^(−1/ν), fourth moment 3(1 + ν).
 */
class NoiseModel {
public:
    static NoiseModel gaussian();
    static NoiseModel variance_gamma(double nu);

    [[nodiscard]] NoiseFamily family() const noexcept { return family_; }
    [[nodiscard]] double shape() const noexcept { return shape_; }

    /// E[X^order]; zero for odd orders.
    [[nodiscard]] double moment(int order) const;
    [[nodiscard]] double m4() const { return moment(4); }

    /// Only the Gaussian family exposes a closed-form log density.
    [[nodiscard]] bool has_closed_form_density() const noexcept {
        return family_ == NoiseFamily::Gaussian;
    }

    [[nodiscard]] std::string name() const;

    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;

private:
    NoiseModel(NoiseFamily family, double shape) : family_(family), shape_(shape) {}

    NoiseFamily family_;
    double shape_;
};

[[nodiscard]] std::complex<double> cf(double u, const NoiseModel& model);
[[nodiscard]] std::complex<double> cf_deriv(double u, const NoiseModel& model);

/// Draws `out.size()` i.i.d. increments from `gen`.
void sample_into(const NoiseModel& model, std::span<double> out, std::mt19937_64& gen);

/// n i.i.d. increments, deterministic in `seed`. Rejects n = 0 and seed < 0.
[[nodiscard]] std::vector<double> sample(const NoiseModel& model, std::size_t n,
                                         std::int64_t seed);

struct LogDensityScore {
    double log_density;
    double score;  // f'(x)/f(x)
};

/// Throws DensityUnavailable for families without a closed-form density.
[[nodiscard]] LogDensityScore log_density_score(double x, const NoiseModel& model);

struct DensityTerms {
    double density;
    double score;        // f'/f
    double score_slope;  // d/dx (f'/f)
};

/// Density and its log-derivatives for every supported family. The
/// Variance-Gamma branch uses the Bessel-K representation of the density.
[[nodiscard]] DensityTerms density_terms(double x, const NoiseModel& model);

struct InvertedDensity {
    double density;
    double derivative;
};

/// Trapezoidal Fourier inversion of the characteristic function on
/// |u| ≤ u_max with `points` nodes. Used as an independent check of the
/// Variance-Gamma density.
[[nodiscard]] InvertedDensity fourier_inverted_density(double x, const NoiseModel& model,
                                                       double u_max = 50.0,
                                                       std::size_t points = 1U << 14U);

/// E[g(X, terms(X))] over the whole line by adaptive Gauss–Kronrod quadrature.
/// Throws QuadratureError when the error estimate exceeds 1e−9.
[[nodiscard]] double expectation(const NoiseModel& model,
                                 const std::function<double(double, const DensityTerms&)>& g);

/// Scale Fisher information μ = E[(f'/f)²(X) X²] − 1 by adaptive quadrature.
[[nodiscard]] double fisher_scale(const NoiseModel& model);

/// Same quantity integrated over the whole line instead of twice the half line.
[[nodiscard]] double fisher_scale_full_line(const NoiseModel& model);

}  // namespace garch_ecf
