#include "garch_ecf/garch.hpp"

#include "garch_ecf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace garch_ecf {

namespace {

void require_stationary(const GarchParams& params) {
    if (!params.is_stationary())
        throw NonStationary("Σα + Σβ = " + std::to_string(params.persistence()) + " is not < 1");
}

void require_length(const GarchParams& params, std::size_t n) {
    const std::size_t needed = std::max(params.r(), params.s()) + 1;
    if (n < needed)
        throw std::invalid_argument("series of length " + std::to_string(n) + " is shorter than " +
                                    std::to_string(needed) + " observations");
}

enum class Order { Zero, First, Second };

struct FilterOutput {
    std::vector<double> sigma2;
    RowMatrix d1;
    SecondSensitivities d2{0, 0};
};

// One pass of the inverse recursion
//   σ_n² = α₀ + Σ_i α_i Y_{n−i} + Σ_j β_j S_{n−j},
// with Y_k = y_k² and S_k = σ_k² for k ≥ 0, and Y_k = 0, S_k = γ(θ) for k < 0.
// Derivatives follow by differentiating the same recursion; the pre-sample
// σ² inherits ∂γ/∂θ and ∂²γ/∂θ∂θ.
FilterOutput run_filter(const GarchParams& params, std::span<const double> y, Order order) {
    require_stationary(params);
    require_length(params, y.size());

    const std::size_t n_obs = y.size();
    const std::size_t r = params.r();
    const std::size_t s = params.s();
    const std::size_t p = params.dim();
    const auto alpha = params.alpha();
    const auto beta = params.beta();
    const double alpha0 = params.alpha0();
    const double slack = 1.0 - params.persistence();
    const double gamma = alpha0 / slack;

    Eigen::VectorXd d_gamma = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p),
                                                        alpha0 / (slack * slack));
    d_gamma(0) = 1.0 / slack;
    RowMatrix d2_gamma = RowMatrix::Constant(static_cast<Eigen::Index>(p),
                                             static_cast<Eigen::Index>(p),
                                             2.0 * alpha0 / (slack * slack * slack));
    d2_gamma(0, 0) = 0.0;
    for (std::size_t c = 1; c < p; ++c) {
        d2_gamma(0, static_cast<Eigen::Index>(c)) = 1.0 / (slack * slack);
        d2_gamma(static_cast<Eigen::Index>(c), 0) = 1.0 / (slack * slack);
    }

    FilterOutput out;
    out.sigma2.resize(n_obs);
    if (order != Order::Zero) out.d1 = RowMatrix::Zero(static_cast<Eigen::Index>(n_obs),
                                                       static_cast<Eigen::Index>(p));
    if (order == Order::Second) out.d2 = SecondSensitivities(n_obs, p);

    // Pre-sample values are only reachable for t < max(r, s); the steady-state
    // loop below skips the bounds checks.
    auto step = [&]<bool Warm>(std::size_t t) {
        const auto n = static_cast<std::ptrdiff_t>(t);
        auto sq_obs = [&](std::ptrdiff_t k) {
            if constexpr (Warm) {
                if (k < 0) return 0.0;
            }
            return y[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
        };
        auto past_var = [&](std::ptrdiff_t k) {
            if constexpr (Warm) {
                if (k < 0) return gamma;
            }
            return out.sigma2[static_cast<std::size_t>(k)];
        };
        auto past_d1 = [&](std::ptrdiff_t k, std::size_t a) {
            if constexpr (Warm) {
                if (k < 0) return d_gamma(static_cast<Eigen::Index>(a));
            }
            return out.d1(k, static_cast<Eigen::Index>(a));
        };
        auto past_d2 = [&](std::ptrdiff_t k, std::size_t a, std::size_t b) {
            if constexpr (Warm) {
                if (k < 0) return d2_gamma(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
            return out.d2(static_cast<std::size_t>(k), a, b);
        };

        double s2 = alpha0;
        for (std::size_t i = 1; i <= r; ++i) s2 += alpha[i - 1] * sq_obs(n - static_cast<std::ptrdiff_t>(i));
        for (std::size_t j = 1; j <= s; ++j) s2 += beta[j - 1] * past_var(n - static_cast<std::ptrdiff_t>(j));
        if (!(s2 > 0.0) || !std::isfinite(s2))
            throw NonPositiveVolatility("σ² = " + std::to_string(s2) + " at n = " + std::to_string(t));
        out.sigma2[t] = s2;
        if (order == Order::Zero) return;

        for (std::size_t a = 0; a < p; ++a) {
            double g;
            if (a == 0) {
                g = 1.0;
            } else if (a <= r) {
                g = sq_obs(n - static_cast<std::ptrdiff_t>(a));
            } else {
                g = past_var(n - static_cast<std::ptrdiff_t>(a - r));
            }
            for (std::size_t j = 1; j <= s; ++j) g += beta[j - 1] * past_d1(n - static_cast<std::ptrdiff_t>(j), a);
            out.d1(n, static_cast<Eigen::Index>(a)) = g;
        }
        if (order != Order::Second) return;

        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = a; b < p; ++b) {
                double h = 0.0;
                if (a > r) h += past_d1(n - static_cast<std::ptrdiff_t>(a - r), b);
                if (b > r) h += past_d1(n - static_cast<std::ptrdiff_t>(b - r), a);
                for (std::size_t j = 1; j <= s; ++j)
                    h += beta[j - 1] * past_d2(n - static_cast<std::ptrdiff_t>(j), a, b);
                out.d2(t, a, b) = h;
                out.d2(t, b, a) = h;
            }
        }
    };

    const std::size_t warm = std::min(n_obs, std::max(r, s));
    for (std::size_t t = 0; t < warm; ++t) step.template operator()<true>(t);
    for (std::size_t t = warm; t < n_obs; ++t) step.template operator()<false>(t);
    return out;
}

}  // namespace

GarchParams::GarchParams(double alpha0, std::vector<double> alpha, std::vector<double> beta)
    : alpha0_(alpha0), alpha_(std::move(alpha)), beta_(std::move(beta)) {
    if (alpha_.empty()) throw std::invalid_argument("GARCH order r must be at least 1");
    if (!(alpha0_ > 0.0) || !std::isfinite(alpha0_))
        throw std::invalid_argument("alpha0 must be positive and finite");
    auto bad = [](double v) { return !(v >= 0.0) || !std::isfinite(v); };
    if (std::any_of(alpha_.begin(), alpha_.end(), bad))
        throw std::invalid_argument("alpha coefficients must be nonnegative");
    if (std::any_of(beta_.begin(), beta_.end(), bad))
        throw std::invalid_argument("beta coefficients must be nonnegative");
}

GarchParams GarchParams::from_vector(const Eigen::VectorXd& theta, std::size_t r, std::size_t s) {
    if (static_cast<std::size_t>(theta.size()) != 1 + r + s)
        throw std::invalid_argument("parameter vector length does not match orders");
    std::vector<double> alpha(theta.data() + 1, theta.data() + 1 + r);
    std::vector<double> beta(theta.data() + 1 + r, theta.data() + 1 + r + s);
    return {theta(0), std::move(alpha), std::move(beta)};
}

double GarchParams::persistence() const noexcept {
    return std::accumulate(alpha_.begin(), alpha_.end(), 0.0) +
           std::accumulate(beta_.begin(), beta_.end(), 0.0);
}

Eigen::VectorXd GarchParams::to_vector() const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(dim()));
    theta(0) = alpha0_;
    for (std::size_t i = 0; i < r(); ++i) theta(static_cast<Eigen::Index>(1 + i)) = alpha_[i];
    for (std::size_t j = 0; j < s(); ++j) theta(static_cast<Eigen::Index>(1 + r() + j)) = beta_[j];
    return theta;
}

double stationary_variance(const GarchParams& params) {
    require_stationary(params);
    return params.alpha0() / (1.0 - params.persistence());
}

SimulatedPath simulate(const GarchParams& params, const NoiseModel& noise, std::size_t n,
                       std::size_t burn_in, std::int64_t seed) {
    if (n == 0) throw std::invalid_argument("simulation length must be at least 1");
    if (seed < 0) throw std::invalid_argument("seed must be nonnegative");
    require_stationary(params);
    std::mt19937_64 gen(static_cast<std::uint64_t>(seed));
    std::vector<double> increments(n + burn_in);
    sample_into(noise, increments, gen);
    return simulate_from_increments(params, increments, burn_in);
}

SimulatedPath simulate_from_increments(const GarchParams& params,
                                       std::span<const double> increments, std::size_t burn_in) {
    if (increments.size() <= burn_in)
        throw std::invalid_argument("need more increments than burn-in steps");
    const double gamma = stationary_variance(params);
    const std::size_t r = params.r();
    const std::size_t s = params.s();
    const std::size_t lag = std::max(r, s);
    const std::size_t total = increments.size();
    const auto alpha = params.alpha();
    const auto beta = params.beta();

    // History buffers start at the stationary mean.
    std::vector<double> sq(total + lag, gamma);
    std::vector<double> var(total + lag, gamma);
    for (std::size_t t = 0; t < total; ++t) {
        const std::size_t k = t + lag;
        double s2 = params.alpha0();
        for (std::size_t i = 1; i <= r; ++i) s2 += alpha[i - 1] * sq[k - i];
        for (std::size_t j = 1; j <= s; ++j) s2 += beta[j - 1] * var[k - j];
        if (!(s2 > 0.0)) throw NonPositiveVolatility("simulated σ² is not positive");
        var[k] = s2;
        const double yk = std::sqrt(s2) * increments[t];
        sq[k] = yk * yk;
    }

    SimulatedPath path;
    const std::size_t n = total - burn_in;
    path.y.resize(n);
    path.sigma2.resize(n);
    path.noise.assign(increments.begin() + static_cast<std::ptrdiff_t>(burn_in), increments.end());
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t k = burn_in + t + lag;
        path.sigma2[t] = var[k];
        path.y[t] = std::sqrt(var[k]) * increments[burn_in + t];
    }
    return path;
}

std::vector<double> invert_volatility(const GarchParams& params, std::span<const double> y) {
    return run_filter(params, y, Order::Zero).sigma2;
}

std::vector<double> residuals(const GarchParams& params, std::span<const double> y) {
    std::vector<double> eps = invert_volatility(params, y);
    for (std::size_t t = 0; t < eps.size(); ++t) eps[t] = y[t] / std::sqrt(eps[t]);
    return eps;
}

Sensitivities sensitivity_filter(const GarchParams& params, std::span<const double> y) {
    FilterOutput f = run_filter(params, y, Order::First);
    Sensitivities out;
    out.d_sigma = f.d1;
    for (Eigen::Index t = 0; t < f.d1.rows(); ++t)
        out.d_sigma.row(t) /= 2.0 * std::sqrt(f.sigma2[static_cast<std::size_t>(t)]);
    out.sigma2 = std::move(f.sigma2);
    out.d_sigma2 = std::move(f.d1);
    return out;
}

SecondSensitivities second_sensitivity_filter(const GarchParams& params,
                                              std::span<const double> y) {
    return run_filter(params, y, Order::Second).d2;
}

SeriesBundle filter_series(const GarchParams& params, std::span<const double> y,
                           bool second_order) {
    FilterOutput f = run_filter(params, y, second_order ? Order::Second : Order::First);
    SeriesBundle b;
    b.y.assign(y.begin(), y.end());
    b.eps.resize(y.size());
    b.sens = f.d1;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double sd = std::sqrt(f.sigma2[t]);
        b.eps[t] = y[t] / sd;
        b.sens.row(static_cast<Eigen::Index>(t)) /= 2.0 * sd;
    }
    b.sigma2 = std::move(f.sigma2);
    b.d_sigma2 = std::move(f.d1);
    b.d2_sigma2 = std::move(f.d2);
    return b;
}

}  // namespace garch_ecf
