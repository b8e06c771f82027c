#include "garch_ecf/noise.hpp"

#include "garch_ecf/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace garch_ecf {

namespace {

constexpr double kLogSqrtTwoPi = 0.91893853320467274178;

double double_factorial_odd(int j) {
    // (2j − 1)!!
    double out = 1.0;
    for (int i = 1; i <= 2 * j - 1; i += 2) out *= i;
    return out;
}

// Variance-Gamma pieces. With k = 1/ν, a = k − 1/2 and z = |x|·√(2/ν),
//   f(x) = 2 / (√(2π) Γ(k) ν^k) · (ν/2)^a · z^a K_a(z),
//   f'/f = −sign(x)·√(2/ν)·K_{a−1}(z)/K_a(z).
struct VgConstants {
    double a;
    double c;
    double log_norm;
};

VgConstants vg_constants(double nu) {
    const double k = 1.0 / nu;
    const double a = k - 0.5;
    const double log_norm = std::log(2.0) - kLogSqrtTwoPi - std::lgamma(k) - k * std::log(nu) +
                            a * std::log(nu / 2.0);
    return {a, std::sqrt(2.0 / nu), log_norm};
}

// log K_v(z) and K_{v−1}(z)/K_v(z), with a large-argument expansion where
// the Bessel functions underflow.
struct BesselPair {
    double log_k;
    double ratio;
};

BesselPair bessel_pair(double v, double z) {
    if (z > 500.0) {
        auto series = [z](double order) {
            const double m = 4.0 * order * order;
            return 1.0 + (m - 1.0) / (8.0 * z) + (m - 1.0) * (m - 9.0) / (2.0 * 64.0 * z * z);
        };
        const double log_k = 0.5 * std::log(std::numbers::pi / (2.0 * z)) - z + std::log(series(v));
        return {log_k, series(v - 1.0) / series(v)};
    }
    const double kv = boost::math::cyl_bessel_k(std::abs(v), z);
    const double kvm1 = boost::math::cyl_bessel_k(std::abs(v - 1.0), z);
    return {std::log(kv), kvm1 / kv};
}

DensityTerms vg_terms(double x, double nu) {
    const auto [a, c, log_norm] = vg_constants(nu);
    const double ax = std::abs(x);
    if (ax == 0.0) {
        if (a <= 1.0) {
            // Density is not twice differentiable at the origin; use the right limit.
            return vg_terms(std::numeric_limits<double>::min() * 1e10, nu);
        }
        // z^a K_a(z) → Γ(a) 2^(a−1) and K_{a−1}/K_a ≈ z / (2(a−1)).
        const double density = std::exp(log_norm + std::lgamma(a) + (a - 1.0) * std::log(2.0));
        return {density, 0.0, -c * c / (2.0 * (a - 1.0))};
    }
    const double z = c * ax;
    const auto [log_k, ratio] = bessel_pair(a, z);
    const double density = std::exp(log_norm + a * std::log(z) + log_k);
    const double score = (x > 0.0 ? -1.0 : 1.0) * c * ratio;
    // d/dz (K_{a−1}/K_a) = −1 + R² + (2a − 1) R / z
    const double ratio_slope = -1.0 + ratio * ratio + (2.0 * a - 1.0) * ratio / z;
    return {density, score, -c * c * ratio_slope};
}

template <class F>
double integrate_half_line(F&& integrand, const char* label) {
    double error = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13, &error);
    if (!std::isfinite(value) || error > 1e-9) throw QuadratureError(label, error);
    return value;
}

}  // namespace

NoiseModel NoiseModel::gaussian() { return {NoiseFamily::Gaussian, 0.0}; }

NoiseModel NoiseModel::variance_gamma(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu))
        throw std::invalid_argument("variance-gamma shape must be positive and finite");
    return {NoiseFamily::VarianceGamma, nu};
}

double NoiseModel::moment(int order) const {
    if (order < 0) throw std::invalid_argument("moment order must be nonnegative");
    if (order % 2 == 1) return 0.0;
    const int j = order / 2;
    double m = double_factorial_odd(j);
    if (family_ == NoiseFamily::VarianceGamma) {
        for (int i = 0; i < j; ++i) m *= 1.0 + i * shape_;
    }
    return m;
}

std::string NoiseModel::name() const {
    if (family_ == NoiseFamily::Gaussian) return "gaussian";
    return "vg(nu=" + std::to_string(shape_) + ")";
}

std::complex<double> cf(double u, const NoiseModel& model) {
    if (model.family() == NoiseFamily::Gaussian) return {std::exp(-0.5 * u * u), 0.0};
    const double nu = model.shape();
    return {std::pow(1.0 + 0.5 * nu * u * u, -1.0 / nu), 0.0};
}

std::complex<double> cf_deriv(double u, const NoiseModel& model) {
    if (model.family() == NoiseFamily::Gaussian) return {-u * std::exp(-0.5 * u * u), 0.0};
    const double nu = model.shape();
    return {-u * std::pow(1.0 + 0.5 * nu * u * u, -1.0 / nu - 1.0), 0.0};
}

void sample_into(const NoiseModel& model, std::span<double> out, std::mt19937_64& gen) {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (model.family() == NoiseFamily::Gaussian) {
        for (double& x : out) x = normal(gen);
        return;
    }
    const double nu = model.shape();
    std::gamma_distribution<double> gamma(1.0 / nu, nu);
    for (double& x : out) {
        const double g = gamma(gen);
        x = std::sqrt(g) * normal(gen);
    }
}

std::vector<double> sample(const NoiseModel& model, std::size_t n, std::int64_t seed) {
    if (n == 0) throw std::invalid_argument("sample size must be at least 1");
    if (seed < 0) throw std::invalid_argument("seed must be nonnegative");
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed));
    std::vector<double> out(n);
    sample_into(model, out, gen);
    return out;
}

LogDensityScore log_density_score(double x, const NoiseModel& model) {
    if (!model.has_closed_form_density())
        throw DensityUnavailable("no closed-form density for noise family " + model.name());
    return {-0.5 * x * x - kLogSqrtTwoPi, -x};
}

DensityTerms density_terms(double x, const NoiseModel& model) {
    if (model.family() == NoiseFamily::Gaussian)
        return {std::exp(-0.5 * x * x - kLogSqrtTwoPi), -x, -1.0};
    return vg_terms(x, model.shape());
}

InvertedDensity fourier_inverted_density(double x, const NoiseModel& model, double u_max,
                                         std::size_t points) {
    if (points < 2 || !(u_max > 0.0))
        throw std::invalid_argument("fourier inversion needs u_max > 0 and at least 2 points");
    // f(x) = (1/π) ∫_0^∞ Re[e^{−iux} φ(u)] du for a real random variable.
    const double du = u_max / static_cast<double>(points - 1);
    double f = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double u = du * static_cast<double>(i);
        const double weight = (i == 0 || i + 1 == points) ? 0.5 : 1.0;
        const std::complex<double> kernel = std::polar(1.0, -u * x) * cf(u, model);
        f += weight * kernel.real();
        fp += weight * (std::complex<double>(0.0, -u) * kernel).real();
    }
    return {f * du / std::numbers::pi, fp * du / std::numbers::pi};
}

double fisher_scale(const NoiseModel& model) {
    auto integrand = [&model](double x) {
        const DensityTerms t = density_terms(x, model);
        return t.score * t.score * x * x * t.density;
    };
    // The integrand is even.
    return 2.0 * integrate_half_line(integrand, "scale Fisher information") - 1.0;
}

double expectation(const NoiseModel& model,
                   const std::function<double(double, const DensityTerms&)>& g) {
    auto right = [&](double x) {
        const DensityTerms t = density_terms(x, model);
        return g(x, t) * t.density;
    };
    auto left = [&](double x) { return right(-x); };
    return integrate_half_line(right, "expectation") + integrate_half_line(left, "expectation");
}

double fisher_scale_full_line(const NoiseModel& model) {
    auto integrand = [&model](double x) {
        const DensityTerms t = density_terms(x, model);
        return t.score * t.score * x * x * t.density;
    };
    const double right = integrate_half_line(integrand, "scale Fisher information");
    const double left =
        integrate_half_line([&](double x) { return integrand(-x); }, "scale Fisher information");
    return left + right - 1.0;
}

}  // namespace garch_ecf
