#include "garch_ecf/stability.hpp"

#include "garch_ecf/errors.hpp"
#include "garch_ecf/random.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace garch_ecf {

namespace {

Eigen::MatrixXd kron_power(const Eigen::MatrixXd& m, int q) {
    Eigen::MatrixXd out = m;
    for (int i = 1; i < q; ++i) {
        Eigen::MatrixXd next = Eigen::kroneckerProduct(out, m);
        out = std::move(next);
    }
    return out;
}

Eigen::MatrixXd sample_mean_kron_power(std::span<const Eigen::MatrixXd> samples, int q) {
    if (samples.empty()) throw std::invalid_argument("no matrix samples supplied");
    Eigen::MatrixXd acc = kron_power(samples.front(), q);
    for (std::size_t i = 1; i < samples.size(); ++i) acc += kron_power(samples[i], q);
    return acc / static_cast<double>(samples.size());
}

void require_power(int q) {
    if (q < 1 || q > 4) throw std::invalid_argument("Kronecker power q must lie in 1..4");
}

}  // namespace

AffineRandomMatrix state_matrix(std::span<const double> alpha, std::span<const double> beta) {
    const auto r = static_cast<Eigen::Index>(alpha.size());
    const auto s = static_cast<Eigen::Index>(beta.size());
    if (r < 1) throw std::invalid_argument("state matrix needs r ≥ 1");
    const Eigen::Index d = r + s;
    AffineRandomMatrix a{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
    for (Eigen::Index i = 0; i < r; ++i) a.scale(0, i) = alpha[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < s; ++j) a.scale(0, r + j) = beta[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < r; ++i) a.constant(i, i - 1) = 1.0;
    if (s > 0) {
        a.constant.row(r) = a.scale.row(0);
        for (Eigen::Index j = 1; j < s; ++j) a.constant(r + j, r + j - 1) = 1.0;
    }
    return a;
}

AffineRandomMatrix state_matrix(const GarchParams& params) {
    return state_matrix(params.alpha(), params.beta());
}

Eigen::MatrixXd volatility_companion(std::span<const double> beta) {
    const auto s = static_cast<Eigen::Index>(beta.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(s, s);
    for (Eigen::Index j = 0; j < s; ++j) m(0, j) = beta[static_cast<std::size_t>(j)];
    for (Eigen::Index j = 1; j < s; ++j) m(j, j - 1) = 1.0;
    return m;
}

AffineRandomMatrix expanded_state_matrix(const GarchParams& truth, const GarchParams& theta) {
    if (truth.r() != theta.r() || truth.s() != theta.s())
        throw std::invalid_argument("expanded state matrix needs matching GARCH orders");
    const AffineRandomMatrix base = state_matrix(truth);
    const Eigen::Index d = base.dim();
    const auto r = static_cast<Eigen::Index>(theta.r());
    const auto s = static_cast<Eigen::Index>(theta.s());
    AffineRandomMatrix out{Eigen::MatrixXd::Zero(d + s, d + s), Eigen::MatrixXd::Zero(d + s, d + s)};
    out.constant.topLeftCorner(d, d) = base.constant;
    out.scale.topLeftCorner(d, d) = base.scale;
    if (s > 0) {
        for (Eigen::Index i = 0; i < r; ++i) out.constant(d, i) = theta.alpha()[static_cast<std::size_t>(i)];
        out.constant.bottomRightCorner(s, s) = volatility_companion(theta.beta());
    }
    return out;
}

StateMatrixSpec make_state_spec(const AffineRandomMatrix& matrix, const NoiseModel& noise,
                                int max_power) {
    StateMatrixSpec spec{matrix, {}};
    for (int j = 1; j <= max_power; ++j) spec.even_moments.push_back(noise.moment(2 * j));
    return spec;
}

Eigen::MatrixXd expected_kron_power(const StateMatrixSpec& spec, int q) {
    require_power(q);
    const Eigen::Index d = spec.matrix.dim();
    Eigen::Index dq = 1;
    for (int i = 0; i < q; ++i) dq *= d;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dq, dq);
    const unsigned terms = 1U << static_cast<unsigned>(q);
    for (unsigned mask = 0; mask < terms; ++mask) {
        const int power = std::popcount(mask);
        double weight = 1.0;
        if (power > 0) {
            if (static_cast<std::size_t>(power) > spec.even_moments.size())
                throw MomentUnavailable("E[ΔL^" + std::to_string(2 * power) + "] is not available");
            weight = spec.even_moments[static_cast<std::size_t>(power - 1)];
        }
        auto factor = [&](int pos) -> const Eigen::MatrixXd& {
            return (mask >> static_cast<unsigned>(pos)) & 1U ? spec.matrix.scale : spec.matrix.constant;
        };
        Eigen::MatrixXd term = factor(0);
        for (int pos = 1; pos < q; ++pos) {
            Eigen::MatrixXd next = Eigen::kroneckerProduct(term, factor(pos));
            term = std::move(next);
        }
        out += weight * term;
    }
    return out;
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("spectral radius needs a square matrix");
    if (m.size() == 0) return 0.0;
    if (!m.allFinite()) throw std::invalid_argument("spectral radius needs finite entries");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");
    const double rho = solver.eigenvalues().cwiseAbs().maxCoeff();
    if (m.rows() <= 64) return rho;

    // Power-iteration cross-check: geometric mean growth over a late window.
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(m.rows(), 1.0, 2.0);
    x.normalize();
    constexpr int kSteps = 3000;
    constexpr int kWindow = 1000;
    double log_growth = 0.0;
    for (int k = 0; k < kSteps; ++k) {
        x = m * x;
        const double norm = x.norm();
        if (norm == 0.0) return rho;
        if (k >= kSteps - kWindow) log_growth += std::log(norm);
        x /= norm;
    }
    const double power_rho = std::exp(log_growth / kWindow);
    if (std::abs(power_rho - rho) > 0.05 * std::max(power_rho, rho) + 1e-8)
        throw NumericalError("eigensolver radius " + std::to_string(rho) +
                             " disagrees with power iteration " + std::to_string(power_rho));
    return rho;
}

RadiusPair block_triangular_radius_check(std::span<const Eigen::MatrixXd> p1,
                                         std::span<const Eigen::MatrixXd> p2,
                                         std::span<const Eigen::MatrixXd> coupling, int q) {
    require_power(q);
    if (p1.size() != p2.size() || p1.size() != coupling.size() || p1.empty())
        throw std::invalid_argument("block samples must be nonempty and equally many");
    const Eigen::Index d1 = p1.front().rows();
    const Eigen::Index d2 = p2.front().rows();
    std::vector<Eigen::MatrixXd> full;
    full.reserve(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p1[i].rows() != d1 || p1[i].cols() != d1 || p2[i].rows() != d2 || p2[i].cols() != d2 ||
            coupling[i].rows() != d2 || coupling[i].cols() != d1)
            throw std::invalid_argument("block dimension mismatch");
        Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d1 + d2, d1 + d2);
        p.topLeftCorner(d1, d1) = p1[i];
        p.bottomLeftCorner(d2, d1) = coupling[i];
        p.bottomRightCorner(d2, d2) = p2[i];
        full.push_back(std::move(p));
    }
    const double lhs = spectral_radius(sample_mean_kron_power(full, q));
    const double rhs = std::max(spectral_radius(sample_mean_kron_power(p1, q)),
                                spectral_radius(sample_mean_kron_power(p2, q)));
    return {lhs, rhs};
}

RadiusPair block_triangular_radius_check(const AffineRandomMatrix& p1,
                                         const AffineRandomMatrix& p2,
                                         const AffineRandomMatrix& coupling,
                                         std::span<const double> even_moments, int q) {
    const Eigen::Index d1 = p1.dim();
    const Eigen::Index d2 = p2.dim();
    if (coupling.constant.rows() != d2 || coupling.constant.cols() != d1 ||
        coupling.scale.rows() != d2 || coupling.scale.cols() != d1)
        throw std::invalid_argument("coupling block dimension mismatch");
    AffineRandomMatrix full{Eigen::MatrixXd::Zero(d1 + d2, d1 + d2),
                            Eigen::MatrixXd::Zero(d1 + d2, d1 + d2)};
    full.constant.topLeftCorner(d1, d1) = p1.constant;
    full.constant.bottomLeftCorner(d2, d1) = coupling.constant;
    full.constant.bottomRightCorner(d2, d2) = p2.constant;
    full.scale.topLeftCorner(d1, d1) = p1.scale;
    full.scale.bottomLeftCorner(d2, d1) = coupling.scale;
    full.scale.bottomRightCorner(d2, d2) = p2.scale;
    const std::vector<double> moments(even_moments.begin(), even_moments.end());
    auto radius = [&](const AffineRandomMatrix& m) {
        return spectral_radius(expected_kron_power(StateMatrixSpec{m, moments}, q));
    };
    return {radius(full), std::max(radius(p1), radius(p2))};
}

LyapunovFit estimate_lambda_q(const StateMatrixSpec& spec, const NoiseModel& noise, int q,
                              std::size_t n_max, std::size_t reps, std::int64_t seed) {
    require_power(q);
    if (n_max < 2 || reps < 1) throw std::invalid_argument("need n_max ≥ 2 and reps ≥ 1");
    if (seed < 0) throw std::invalid_argument("seed must be nonnegative");

    LyapunovFit fit;
    fit.rho = spectral_radius(expected_kron_power(spec, q));
    fit.precondition_holds = fit.rho < 1.0;

    const Eigen::Index d = spec.matrix.dim();
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    // log_norms[n * reps + rep] = log ‖P_{n+1}⋯P_1‖_F
    std::vector<double> log_norms(n_max * reps, kNegInf);
    std::vector<double> increments(n_max);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        std::mt19937_64 gen(static_cast<std::uint64_t>(derive_seed(seed, rep)));
        sample_into(noise, increments, gen);
        Eigen::MatrixXd product = Eigen::MatrixXd::Identity(d, d);
        double log_scale = 0.0;
        for (std::size_t n = 0; n < n_max; ++n) {
            product = spec.matrix.draw(increments[n] * increments[n]) * product;
            const double norm = product.norm();
            if (norm == 0.0) break;
            log_scale += std::log(norm);
            product /= norm;
            log_norms[n * reps + rep] = log_scale;
        }
    }

    fit.log_moments.resize(n_max);
    for (std::size_t n = 0; n < n_max; ++n) {
        double peak = kNegInf;
        for (std::size_t rep = 0; rep < reps; ++rep) peak = std::max(peak, q * log_norms[n * reps + rep]);
        if (peak == kNegInf) {
            fit.log_moments[n] = kNegInf;
            continue;
        }
        double acc = 0.0;
        for (std::size_t rep = 0; rep < reps; ++rep) acc += std::exp(q * log_norms[n * reps + rep] - peak);
        fit.log_moments[n] = peak + std::log(acc / static_cast<double>(reps));
    }

    if (std::any_of(fit.log_moments.begin(), fit.log_moments.end(),
                    [](double v) { return v == kNegInf; })) {
        fit.vanished = true;
        fit.slope = kNegInf;
        fit.intercept = kNegInf;
        return fit;
    }

    // Ordinary least squares of log-moment on n over the second half.
    const std::size_t first = n_max / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const auto count = static_cast<double>(n_max - first);
    for (std::size_t n = first; n < n_max; ++n) {
        const double x = static_cast<double>(n + 1);
        const double yv = fit.log_moments[n];
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
        syy += yv * yv;
    }
    const double cov = sxy - sx * sy / count;
    const double varx = sxx - sx * sx / count;
    const double vary = syy - sy * sy / count;
    fit.slope = cov / varx;
    fit.intercept = (sy - fit.slope * sx) / count;
    fit.r_squared = vary > 0.0 ? cov * cov / (varx * vary) : 1.0;
    return fit;
}

double resultant(std::span<const double> p, std::span<const double> q) {
    if (p.empty() || q.empty()) throw std::invalid_argument("resultant needs nonempty polynomials");
    const auto m = static_cast<Eigen::Index>(p.size()) - 1;
    const auto n = static_cast<Eigen::Index>(q.size()) - 1;
    const Eigen::Index size = m + n;
    if (size == 0) return 1.0;
    Eigen::MatrixXd sylvester = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index row = 0; row < n; ++row)
        for (Eigen::Index k = 0; k <= m; ++k) sylvester(row, row + k) = p[static_cast<std::size_t>(k)];
    for (Eigen::Index row = 0; row < m; ++row)
        for (Eigen::Index k = 0; k <= n; ++k) sylvester(n + row, row + k) = q[static_cast<std::size_t>(k)];
    return sylvester.fullPivLu().determinant();
}

bool check_coprime(std::span<const double> alpha, std::span<const double> beta) {
    if (alpha.empty()) return false;
    const double c_scale =
        std::abs(*std::max_element(alpha.begin(), alpha.end(),
                                   [](double a, double b) { return std::abs(a) < std::abs(b); }));
    if (c_scale == 0.0) return false;
    std::vector<double> d(beta.size() + 1);
    d[0] = 1.0;
    for (std::size_t j = 0; j < beta.size(); ++j) d[j + 1] = -beta[j];
    double d_scale = 0.0;
    for (double v : d) d_scale = std::max(d_scale, std::abs(v));
    const double res = resultant(alpha, d);
    const double deg_c = static_cast<double>(alpha.size() - 1);
    const double deg_d = static_cast<double>(beta.size());
    const double threshold = 1e-10 * std::pow(c_scale, deg_d) * std::pow(d_scale, deg_c);
    return std::abs(res) > threshold;
}

bool check_coprime(const GarchParams& params) { return check_coprime(params.alpha(), params.beta()); }

}  // namespace garch_ecf
