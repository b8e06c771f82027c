#include "garch_ecf/errors.hpp"
#include "garch_ecf/garch.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace garch_ecf;

namespace {

const GarchParams kTruth(0.1, {0.2}, {0.7});

std::vector<double> simulated(std::size_t n, std::int64_t seed, const GarchParams& p = kTruth) {
    return simulate(p, NoiseModel::gaussian(), n, kDefaultBurnIn, seed).y;
}

GarchParams perturbed(const GarchParams& p, std::size_t k, double h) {
    Eigen::VectorXd v = p.to_vector();
    v(static_cast<Eigen::Index>(k)) += h;
    return GarchParams::from_vector(v, p.r(), p.s());
}

// Random interior point with persistence in [0.5, 0.95].
GarchParams random_interior(std::mt19937_64& gen, std::size_t r, std::size_t s) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    std::vector<double> w(r + s);
    for (double& x : w) x = unif(gen);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const double persistence = 0.5 + 0.45 * unif(gen);
    for (double& x : w) x *= persistence / total;
    return {0.05 + 0.2 * unif(gen), {w.begin(), w.begin() + static_cast<std::ptrdiff_t>(r)},
            {w.begin() + static_cast<std::ptrdiff_t>(r), w.end()}};
}

}  // namespace

TEST_CASE("stationary variance") {
    CHECK(stationary_variance(kTruth) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(stationary_variance(GarchParams(0.5, {0.5}, {})) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)stationary_variance(GarchParams(0.1, {0.6}, {0.4})), NonStationary);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(GarchParams(0.0, {0.1}, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(GarchParams(0.1, {}, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(GarchParams(0.1, {-0.1}, {0.5}), std::invalid_argument);
    const GarchParams p(0.3, {0.1, 0.05}, {0.6});
    CHECK(p.dim() == 4);
    const GarchParams q = GarchParams::from_vector(p.to_vector(), 2, 1);
    CHECK(q.to_vector() == p.to_vector());
}

TEST_CASE("simulation: degenerate ARCH(1) with α₁ = 0") {
    const GarchParams p(0.49, {0.0}, {});
    const SimulatedPath path = simulate(p, NoiseModel::gaussian(), 500, 100, 11);
    for (std::size_t n = 0; n < 500; ++n) {
        CHECK(path.sigma2[n] == doctest::Approx(0.49));
        CHECK(path.y[n] == doctest::Approx(0.7 * path.noise[n]));
    }
}

TEST_CASE("simulation: variance and serial uncorrelation") {
    const std::size_t n = 100000;
    const std::vector<double> y = simulated(n, 2024);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    CHECK(std::abs(var - 1.0) < 0.05);
    for (std::size_t lag = 1; lag <= 5; ++lag) {
        double acov = 0.0;
        for (std::size_t t = lag; t < n; ++t) acov += (y[t] - mean) * (y[t - lag] - mean);
        acov /= static_cast<double>(n);
        CHECK(std::abs(acov) < 4.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("simulation is deterministic in the seed") {
    CHECK(simulated(2000, 5) == simulated(2000, 5));
    CHECK(simulated(2000, 5) != simulated(2000, 6));
}

TEST_CASE("inverse filter: one ARCH(1) step") {
    const GarchParams p(0.5, {0.5}, {});
    const std::vector<double> y{std::sqrt(2.0), 0.3, -0.2};
    const std::vector<double> s2 = invert_volatility(p, y);
    CHECK(s2[0] == doctest::Approx(0.5));  // pre-sample y = 0
    CHECK(s2[1] == doctest::Approx(1.5));
}

TEST_CASE("inverse filter: zero input reaches the fixed point α₀/(1 − Σβ)") {
    const std::vector<double> zeros(400, 0.0);
    const GarchParams arch(0.5, {0.5}, {});
    for (double v : invert_volatility(arch, zeros)) CHECK(v == doctest::Approx(0.5));
    const std::vector<double> s2 = invert_volatility(kTruth, zeros);
    CHECK(s2.back() == doctest::Approx(0.1 / 0.3).epsilon(1e-12));
    for (double e : residuals(kTruth, zeros)) CHECK(e == 0.0);
}

TEST_CASE("inverse filter forgets its initialization geometrically") {
    const SimulatedPath path = simulate(kTruth, NoiseModel::gaussian(), 3000, kDefaultBurnIn, 17);
    const std::vector<double> s2 = invert_volatility(kTruth, path.y);
    // Both recursions share the inputs; the gap contracts by β₁ = 0.7 per step.
    const double gap0 = std::abs(s2[0] - path.sigma2[0]);
    for (std::size_t n = 0; n < 120; ++n) {
        const double gap = std::abs(s2[n] - path.sigma2[n]);
        CHECK(gap <= gap0 * std::pow(0.7, static_cast<double>(n)) * (1.0 + 1e-9) + 1e-13);
    }
    CHECK(std::abs(s2[200] - path.sigma2[200]) < 1e-12);
}

TEST_CASE("residuals recover the driving noise at the true parameter") {
    const SimulatedPath path = simulate(kTruth, NoiseModel::gaussian(), 5000, kDefaultBurnIn, 23);
    const std::vector<double> eps = residuals(kTruth, path.y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t n = 201; n < eps.size(); ++n) {
        sxy += eps[n] * path.noise[n];
        sxx += eps[n] * eps[n];
        syy += path.noise[n] * path.noise[n];
    }
    CHECK(sxy / std::sqrt(sxx * syy) > 0.999);
}

TEST_CASE("residuals are scale equivariant") {
    const std::vector<double> y = simulated(1000, 29);
    const double c = 3.7;
    std::vector<double> ys(y);
    for (double& v : ys) v *= c;
    const std::vector<double> e1 = residuals(kTruth, y);
    const std::vector<double> e2 = residuals(GarchParams(0.1 * c * c, {0.2}, {0.7}), ys);
    for (std::size_t n = 0; n < y.size(); ++n) CHECK(e2[n] == doctest::Approx(e1[n]).epsilon(1e-12));
}

TEST_CASE("ARCH(1) sensitivities in closed form") {
    const GarchParams p(0.3, {0.4}, {});
    const std::vector<double> y = simulated(300, 31, p);
    const Sensitivities s = sensitivity_filter(p, y);
    const SecondSensitivities d2 = second_sensitivity_filter(p, y);
    for (std::size_t n = 1; n < y.size(); ++n) {
        const auto i = static_cast<Eigen::Index>(n);
        CHECK(s.d_sigma2(i, 0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(s.d_sigma2(i, 1) == doctest::Approx(y[n - 1] * y[n - 1]).epsilon(1e-13));
        CHECK(d2(n, 0, 0) == 0.0);
        CHECK(s.d_sigma(i, 1) == doctest::Approx(s.d_sigma2(i, 1) / (2.0 * std::sqrt(s.sigma2[n]))));
    }
}

TEST_CASE("sensitivities match finite differences of the inverse filter") {
    std::mt19937_64 gen(99);
    for (auto [r, s] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 1}, {1, 2}}) {
        for (int trial = 0; trial < 5; ++trial) {
            const GarchParams p = random_interior(gen, r, s);
            const std::vector<double> y = simulated(400, 40 + trial, p);
            const SeriesBundle b = filter_series(p, y, true);
            for (std::size_t k = 0; k < p.dim(); ++k) {
                const double h = 1e-6 * std::max(1e-2, std::abs(p.to_vector()(static_cast<Eigen::Index>(k))));
                const std::vector<double> up = invert_volatility(perturbed(p, k, h), y);
                const std::vector<double> dn = invert_volatility(perturbed(p, k, -h), y);
                const Sensitivities s_up = sensitivity_filter(perturbed(p, k, h), y);
                const Sensitivities s_dn = sensitivity_filter(perturbed(p, k, -h), y);
                for (std::size_t n = 0; n < y.size(); n += 7) {
                    const double fd = (up[n] - dn[n]) / (2.0 * h);
                    const double an = b.d_sigma2(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
                    CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
                    for (std::size_t j = 0; j < p.dim(); ++j) {
                        const auto jj = static_cast<Eigen::Index>(j);
                        const auto nn = static_cast<Eigen::Index>(n);
                        const double fd2 = (s_up.d_sigma2(nn, jj) - s_dn.d_sigma2(nn, jj)) / (2.0 * h);
                        CHECK(std::abs(b.d2_sigma2(n, j, k) - fd2) <= 1e-4 * std::max(1.0, std::abs(fd2)));
                    }
                }
            }
        }
    }
}

TEST_CASE("second sensitivities are exactly symmetric") {
    const GarchParams p(0.2, {0.1, 0.05}, {0.6, 0.1});
    const std::vector<double> y = simulated(300, 8, p);
    const SecondSensitivities d2 = second_sensitivity_filter(p, y);
    for (std::size_t n = 0; n < y.size(); ++n)
        for (std::size_t a = 0; a < p.dim(); ++a)
            for (std::size_t c = 0; c < p.dim(); ++c) CHECK(d2(n, a, c) == d2(n, c, a));
}

TEST_CASE("filter rejects invalid input") {
    const std::vector<double> y = simulated(100, 1);
    CHECK_THROWS_AS((void)invert_volatility(GarchParams(0.1, {0.6}, {0.4}), y), NonStationary);
    CHECK_THROWS_AS((void)invert_volatility(GarchParams(0.1, {0.1, 0.1}, {0.1}), std::vector<double>{1.0}),
                    std::invalid_argument);
}

TEST_CASE("filter transient decays log-linearly") {
    const SimulatedPath path = simulate(kTruth, NoiseModel::gaussian(), 400, kDefaultBurnIn, 41);
    const std::vector<double> s2 = invert_volatility(kTruth, path.y);
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, k = 0;
    for (std::size_t n = 0; n < 60; ++n) {
        const double gap = std::abs(s2[n] - path.sigma2[n]);
        if (gap < 1e-14) break;
        const double x = static_cast<double>(n), yv = std::log(gap);
        sx += x, sy += yv, sxx += x * x, sxy += x * yv, syy += yv * yv, k += 1;
    }
    const double cov = sxy - sx * sy / k, vx = sxx - sx * sx / k, vy = syy - sy * sy / k;
    const double slope = cov / vx;
    CHECK(std::exp(slope) < 1.0);
    CHECK(std::exp(slope) == doctest::Approx(0.7).epsilon(0.01));
    CHECK(cov * cov / (vx * vy) > 0.9);
}

TEST_CASE("stationary variance equals the long-run mean of σ²") {
    const std::size_t n = 1000000;
    const SimulatedPath path = simulate(kTruth, NoiseModel::gaussian(), n, kDefaultBurnIn, 43);
    // Batch means absorb the serial dependence of σ².
    const std::size_t batches = 100, len = n / batches;
    std::vector<double> means(batches, 0.0);
    for (std::size_t b = 0; b < batches; ++b) {
        for (std::size_t t = b * len; t < (b + 1) * len; ++t) means[b] += path.sigma2[t];
        means[b] /= static_cast<double>(len);
    }
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(batches);
    double var = 0.0;
    for (double m : means) var += (m - grand) * (m - grand);
    const double se = std::sqrt(var / static_cast<double>(batches - 1) / static_cast<double>(batches));
    CHECK(std::abs(grand - stationary_variance(kTruth)) < 3.0 * se);
}

TEST_CASE("residuals at the true parameter match the noise characteristic function") {
    const std::size_t n = 50000;
    const std::vector<double> eps = residuals(kTruth, simulated(n, 47));
    for (double u : {0.5, 1.0, 2.0}) {
        std::complex<double> acc = 0.0;
        for (double e : eps) acc += std::exp(std::complex<double>(0.0, u * e));
        acc /= static_cast<double>(n);
        CHECK(std::abs(acc - cf(u, NoiseModel::gaussian())) < 4.0 / std::sqrt(static_cast<double>(n)));
    }
}
