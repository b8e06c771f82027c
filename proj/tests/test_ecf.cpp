#include "garch_ecf/ecf.hpp"
#include "garch_ecf/random.hpp"
#include "garch_ecf/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <unsupported/Eigen/KroneckerProduct>

using namespace garch_ecf;
using cd = std::complex<double>;

namespace {

// Oracle values computed independently with 30-digit arithmetic.
constexpr double kC11 = 0.632120558828557678;          // 1 − e^{−1}
constexpr double kC12 = 0.524445661088734628;          // e^{−1/2} − e^{−5/2}
constexpr double kScoreSinglePoint = 0.581976706869326424;  // e^{−1}/(1 − e^{−1})
constexpr double kScoreHalfStep4 = 1.6024004945543;    // u = 0.5·(1..4)
constexpr double kScoreHalfStep8 = 1.8337412510165;    // u = 0.5·(1..8)

const GarchParams kTruth(0.1, {0.2}, {0.7});
const NoiseModel kGauss = NoiseModel::gaussian();

std::vector<double> simulated(std::size_t n, std::int64_t seed, const NoiseModel& noise = kGauss) {
    return simulate(kTruth, noise, n, kDefaultBurnIn, seed).y;
}

GarchParams shifted(const GarchParams& p, Eigen::Index k, double h) {
    Eigen::VectorXd v = p.to_vector();
    v(k) += h;
    return GarchParams::from_vector(v, p.r(), p.s());
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(b)); }

}  // namespace

TEST_CASE("u-grid construction") {
    const UGrid g = UGrid::default_grid();
    REQUIRE(g.size() == 8);
    CHECK(g[0] == 0.5);
    CHECK(g[7] == 4.0);
    CHECK(g.arithmetic_step().value() == doctest::Approx(0.5));
    CHECK_FALSE(UGrid({0.5, 1.5, 2.0}).arithmetic_step().has_value());
    CHECK_THROWS_AS(UGrid(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(UGrid({0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(UGrid({1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(UGrid({2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(UGrid::uniform(0.5, 0), std::invalid_argument);
}

TEST_CASE("C matrix entries") {
    const Eigen::MatrixXcd c1 = c_matrix(UGrid({1.0}), kGauss);
    CHECK(c1(0, 0).real() == doctest::Approx(kC11).epsilon(1e-14));
    const Eigen::MatrixXcd c2 = c_matrix(UGrid({1.0, 2.0}), kGauss);
    CHECK(c2(0, 1).real() == doctest::Approx(kC12).epsilon(1e-14));
    CHECK(c2.isApprox(c2.adjoint(), 1e-15));
}

TEST_CASE("C matrix equals the covariance of e^{iuX} − φ(u)") {
    const UGrid grid({0.5, 1.0, 2.0});
    const NoiseModel vg = NoiseModel::variance_gamma(0.5);
    const std::size_t n = 1000000;
    const std::vector<double> x = sample(vg, n, 8);
    const auto m = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXcd mc = Eigen::MatrixXcd::Zero(m, m);
    Eigen::VectorXcd d(m);
    for (double v : x) {
        for (Eigen::Index k = 0; k < m; ++k)
            d(k) = std::exp(cd(0.0, grid[static_cast<std::size_t>(k)] * v)) - cf(grid[static_cast<std::size_t>(k)], vg);
        mc += d * d.adjoint();
    }
    mc /= static_cast<double>(n);
    CHECK((mc - c_matrix(grid, vg)).cwiseAbs().maxCoeff() < 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("φ vector") {
    const Eigen::VectorXcd phi = phi_vector(UGrid({1.0, 2.0}), kGauss);
    CHECK(phi(0).real() == doctest::Approx(-std::exp(-0.5)));
    CHECK(phi(1).real() == doctest::Approx(-4.0 * std::exp(-2.0)));
}

TEST_CASE("ridge regularization") {
    const RegularizedMatrix plain = regularize(c_matrix(UGrid::default_grid(), kGauss), kDefaultRidgeFactor);
    CHECK_FALSE(plain.ridge_applied);
    const RegularizedMatrix dense = regularize(c_matrix(UGrid::uniform(0.25, 40), kGauss), kDefaultRidgeFactor);
    CHECK(dense.condition > kRidgeConditionThreshold);
    CHECK(dense.ridge_applied);
    CHECK(dense.ridge > 0.0);
    CHECK_FALSE(regularize(c_matrix(UGrid::uniform(0.25, 40), kGauss), 0.0).ridge_applied);
}

TEST_CASE("score Jacobian matches finite differences") {
    const std::vector<double> y = simulated(3000, 12);
    const UGrid grid = UGrid::default_grid();
    for (const GarchParams& at : {kTruth, GarchParams(0.15, {0.1}, {0.75}), GarchParams(0.3, {0.3}, {0.4})}) {
        const ScoreSet sc = scores(at, y, grid, kGauss);
        const double scale = sc.jac.cwiseAbs().maxCoeff();
        for (Eigen::Index c = 0; c < 3; ++c) {
            const double h = 1e-6;
            const ScoreSet up = scores(shifted(at, c, h), y, grid, kGauss, kDefaultTransient, false);
            const ScoreSet dn = scores(shifted(at, c, -h), y, grid, kGauss, kDefaultTransient, false);
            const Eigen::VectorXcd fd = (up.h_bar - dn.h_bar) / (2.0 * h);
            CHECK((fd - sc.jac.col(c)).cwiseAbs().maxCoeff() <= 1e-5 * scale);
            for (std::size_t a = 0; a < 3; ++a) {
                const Eigen::MatrixXd fd_m = (up.m_hat - dn.m_hat) / (2.0 * h);
                CHECK((fd_m - sc.m_hat_grad[static_cast<std::size_t>(c)]).cwiseAbs().maxCoeff() <=
                      1e-5 * fd_m.cwiseAbs().maxCoeff());
            }
        }
    }
}

TEST_CASE("arithmetic and general grids give identical scores") {
    const std::vector<double> y = simulated(2000, 13);
    const ScoreSet a = scores(kTruth, y, UGrid::default_grid(), kGauss);
    std::vector<double> pts = UGrid::default_grid().points();
    pts.back() += 1e-13;  // defeats the arithmetic-step shortcut
    const ScoreSet b = scores(kTruth, y, UGrid(pts), kGauss);
    CHECK((a.h_bar - b.h_bar).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.jac - b.jac).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("scores at the true parameter are mean zero") {
    const std::size_t n = 100000;
    const std::vector<double> y = simulated(n, 14);
    const UGrid grid = UGrid::default_grid();
    const ScoreSet sc = scores(kTruth, y, grid, kGauss);
    const Eigen::MatrixXcd k = Eigen::kroneckerProduct(c_matrix(grid, kGauss), sc.m_hat.cast<cd>()).eval();
    CHECK(sc.h_bar.norm() <= 5.0 * std::sqrt(k.trace().real() / static_cast<double>(n)));
}

TEST_CASE("score Jacobian at the true parameter is −φ_k·M*") {
    // ε_θ = −ε·σ_θ/σ, so E[jac_k] = −u_kφ′(u_k)M*.
    const UGrid grid({0.5, 1.0, 2.0});
    const Eigen::VectorXcd phi = phi_vector(grid, kGauss);
    const int reps = 10;
    std::vector<Eigen::MatrixXcd> devs;
    for (int rep = 0; rep < reps; ++rep) {
        const ScoreSet sc = scores(kTruth, simulated(20000, 100 + rep), grid, kGauss);
        Eigen::MatrixXcd dev(sc.jac.rows(), sc.jac.cols());
        for (Eigen::Index k = 0; k < 3; ++k) dev.middleRows(k * 3, 3) = sc.jac.middleRows(k * 3, 3) + phi(k) * sc.m_hat;
        devs.push_back(dev);
    }
    Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(9, 3);
    for (const auto& d : devs) mean += d / static_cast<double>(reps);
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(9, 3);
    for (const auto& d : devs) var += (d - mean).cwiseAbs2() / static_cast<double>(reps - 1);
    const Eigen::MatrixXd se = (var / static_cast<double>(reps)).cwiseSqrt();
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        CHECK(std::abs(mean.data()[i]) <= 5.0 * se.data()[i] + 1e-12);
}

TEST_CASE("M̂ closed form for zero input") {
    const GarchParams arch(0.4, {0.5}, {});
    const std::vector<double> zeros(1000, 0.0);
    const Eigen::MatrixXd m = m_hat(arch, zeros);
    // σ_n² = α₀ and ∂σ_n²/∂θ = (1, 0) once the zero inputs are in the window.
    CHECK(m(0, 0) == doctest::Approx(1.0 / (4.0 * 0.4 * 0.4)));
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 1) == 0.0);
}

TEST_CASE("M̂ is positive semidefinite and concentrates") {
    std::vector<Eigen::MatrixXd> ms;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::MatrixXd m = m_hat(kTruth, simulated(100000, 200 + rep));
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff() >= -1e-12);
        ms.push_back(m);
    }
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3), sq = Eigen::MatrixXd::Zero(3, 3);
    for (const auto& m : ms) {
        mean += m / 20.0;
        sq += m.cwiseAbs2() / 20.0;
    }
    const Eigen::MatrixXd sd = (sq - mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt() * std::sqrt(20.0 / 19.0);
    CHECK((sd.array() / mean.array().abs()).maxCoeff() < 0.05);
}

TEST_CASE("weighting matrices") {
    CHECK(WeightMatrix::identity(4).is_identity());
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(2, 2);
    bad(1, 1) = -1.0;
    CHECK_THROWS_AS((void)WeightMatrix::from_matrix(bad), SingularMatrix);
    const Eigen::MatrixXd m = m_hat(kTruth, simulated(5000, 15));
    const WeightMatrix k = WeightMatrix::optimal(UGrid::default_grid(), kGauss, m);
    const Eigen::VectorXcd x = Eigen::VectorXcd::Random(24);
    CHECK((k.matrix() * k.solve(x) - x).norm() < 1e-8 * x.norm());
    CHECK(k.whiten(x).squaredNorm() == doctest::Approx(x.dot(k.solve(x).col(0)).real()).epsilon(1e-10));
}

TEST_CASE("objective is a nonnegative quadratic form with the half-gradient") {
    const std::vector<double> y = simulated(3000, 16);
    const UGrid grid = UGrid::default_grid();
    const WeightMatrix k = WeightMatrix::optimal(grid, kGauss, m_hat(kTruth, y));
    for (const GarchParams& at : {kTruth, GarchParams(0.2, {0.15}, {0.6})}) {
        const ObjectiveValue q = objective(at, y, grid, kGauss, k);
        CHECK(q.value >= 0.0);
        for (Eigen::Index c = 0; c < 3; ++c) {
            const double h = 1e-6;
            const double fd = (objective(shifted(at, c, h), y, grid, kGauss, k).value -
                               objective(shifted(at, c, -h), y, grid, kGauss, k).value) /
                              (2.0 * h);
            CHECK(rel_err(q.half_grad(c), 0.5 * fd) < 1e-5);
        }
    }
    CHECK_THROWS_AS((void)objective(kTruth, y, grid, kGauss, WeightMatrix::identity(5)), std::invalid_argument);
}

TEST_CASE("objective at the true parameter is on the chi-square scale") {
    const std::size_t n = 100000;
    const std::vector<double> y = simulated(n, 17);
    const UGrid grid = UGrid::default_grid();
    const WeightMatrix k = WeightMatrix::optimal(grid, kGauss, m_hat(kTruth, y));
    const double nq = static_cast<double>(n) * objective(kTruth, y, grid, kGauss, k).value;
    const double pm = 3.0 * 8.0;
    CHECK(nq > pm / 2.0);
    CHECK(nq < 2.0 * pm);
}

TEST_CASE("continuously-updated criterion gradient matches finite differences") {
    const std::vector<double> y = simulated(3000, 18);
    const UGrid grid = UGrid::default_grid();
    for (const GarchParams& at : {kTruth, GarchParams(0.4, {0.3}, {0.25})}) {
        const CueValue q = cue_objective(at, y, grid, kGauss);
        for (Eigen::Index c = 0; c < 3; ++c) {
            const double h = 1e-6;
            const double fd = (cue_objective(shifted(at, c, h), y, grid, kGauss).value -
                               cue_objective(shifted(at, c, -h), y, grid, kGauss).value) /
                              (2.0 * h);
            CHECK(rel_err(q.gradient(c), fd) < 1e-5);
        }
    }
}

TEST_CASE("continuously-updated criterion is invariant to rescaling the instrument") {
    // Scaling y by c and α₀ by c² leaves ε unchanged and multiplies σ_θ/σ by a
    // fixed matrix, which the criterion absorbs.
    const std::vector<double> y = simulated(3000, 19);
    std::vector<double> ys(y);
    for (double& v : ys) v *= 2.0;
    const UGrid grid = UGrid::default_grid();
    const double a = cue_objective(kTruth, y, grid, kGauss).value;
    const double b = cue_objective(GarchParams(0.4, {0.2}, {0.7}), ys, grid, kGauss).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("asymptotic covariance") {
    const Eigen::MatrixXd m = m_hat(kTruth, simulated(5000, 20));
    const AsymptoticCovariance one = asymptotic_covariance(UGrid({1.0}), kGauss, m);
    CHECK(one.efficiency_score == doctest::Approx(kScoreSinglePoint).epsilon(1e-13));
    const AsymptoticCovariance a = asymptotic_covariance(UGrid::default_grid(), kGauss, m);
    const AsymptoticCovariance b = asymptotic_covariance(UGrid::default_grid(), kGauss, 2.0 * m);
    CHECK((a.sigma - 2.0 * b.sigma).cwiseAbs().maxCoeff() < 1e-10 * a.sigma.cwiseAbs().maxCoeff());
    CHECK((a.sigma * m * a.efficiency_score - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
    Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(3, 3);
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS((void)asymptotic_covariance(UGrid::default_grid(), kGauss, singular), SingularMatrix);
}

TEST_CASE("Kronecker decoupling of the information") {
    std::mt19937_64 gen(6);
    std::normal_distribution<double> n01;
    const UGrid grid = UGrid::default_grid();
    const Eigen::MatrixXcd c = c_matrix(grid, kGauss);
    const Eigen::VectorXcd phi = phi_vector(grid, kGauss);
    Eigen::MatrixXd a(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) a.data()[i] = n01(gen);
    const Eigen::MatrixXd m = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(3, 3);
    const Eigen::MatrixXcd mc = m.cast<cd>();
    const Eigen::MatrixXcd g = Eigen::kroneckerProduct(phi, mc).eval();
    const Eigen::MatrixXcd k = Eigen::kroneckerProduct(c, mc).eval();
    const Eigen::MatrixXcd lhs = g.adjoint() * k.ldlt().solve(g);
    const cd score = phi.dot(c.ldlt().solve(phi));
    CHECK((lhs - score * mc).cwiseAbs().maxCoeff() < 1e-10 * m.cwiseAbs().maxCoeff());
}

TEST_CASE("efficiency bound along nested grids") {
    std::vector<UGrid> half;
    for (std::size_t m : {1, 2, 4, 8}) half.push_back(UGrid::uniform(0.5, m));
    const std::vector<EfficiencyPoint> hv = efficiency_bound(kGauss, half);
    CHECK(hv[2].value == doctest::Approx(kScoreHalfStep4).epsilon(1e-11));
    CHECK(hv[3].value == doctest::Approx(kScoreHalfStep8).epsilon(1e-11));

    std::vector<UGrid> family;
    for (std::size_t m : {1, 2, 4, 8, 10, 12, 16, 24, 32, 40}) family.push_back(UGrid::uniform(0.25, m));
    const std::vector<EfficiencyPoint> pts = efficiency_bound(kGauss, family);
    const double mu = fisher_scale(kGauss);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(pts[i].value <= mu + 1e-6);
        if (i > 0) CHECK(pts[i].value >= pts[i - 1].value);
    }
    CHECK(pts.back().ridge_applied);
    CHECK(std::abs(pts.back().value - 2.0) < 0.05 * 2.0);
    // Regression baselines for the shared ridge.
    CHECK(pts[6].value == doctest::Approx(1.99979).epsilon(1e-5));
    CHECK(pts.back().value == doctest::Approx(1.99980).epsilon(1e-5));

    // Point order does not matter, only nesting.
    const std::vector<UGrid> shuffled{UGrid({1.0}), UGrid({0.5, 1.0}), UGrid({0.5, 1.0, 3.0})};
    const std::vector<EfficiencyPoint> sv = efficiency_bound(kGauss, shuffled);
    CHECK(sv[0].value == doctest::Approx(kScoreSinglePoint).epsilon(1e-12));
    CHECK(sv[2].value >= sv[1].value);
    const std::vector<UGrid> not_nested{UGrid({1.0}), UGrid({2.0})};
    CHECK_THROWS_AS((void)efficiency_bound(kGauss, not_nested), std::invalid_argument);
}

TEST_CASE("single estimate recovers the true parameter") {
    const std::vector<double> y = simulated(20000, 21);
    const EstimationResult res = estimate(y, kGauss, UGrid({0.5, 1.0, 1.5, 2.0}));
    CHECK(res.ok());
    CHECK(res.method == "ecf");
    CHECK(res.distinct_solutions == 1);
    CHECK_FALSE(res.uniqueness_violation);
    REQUIRE(res.theta_pre.has_value());
    CHECK((res.theta.to_vector() - kTruth.to_vector()).cwiseAbs().maxCoeff() < 0.08);
    CHECK(res.theta.is_stationary());
    CHECK(res.covariance.rows() == 3);
    CHECK(res.efficiency_score > 0.0);
    CHECK(res.n_obs == 20000);
    CHECK_FALSE(res.trace.empty());
    CHECK(res.trace.back().stage == "optimal");
}

TEST_CASE("identity weighting runs a single stage") {
    const std::vector<double> y = simulated(5000, 22);
    EcfOptions opts;
    opts.weighting = Weighting::Identity;
    opts.multistart = 2;
    const EstimationResult res = estimate(y, kGauss, UGrid::default_grid(), opts);
    CHECK_FALSE(res.trace.empty());
    CHECK(res.trace.front().stage == "identity");
    CHECK(res.weighting.isApprox(Eigen::MatrixXcd::Identity(24, 24)));
}

TEST_CASE("estimate is deterministic") {
    const std::vector<double> y = simulated(3000, 23);
    EcfOptions opts;
    opts.multistart = 2;
    const EstimationResult a = estimate(y, kGauss, UGrid({0.5, 1.0, 1.5, 2.0}), opts);
    const EstimationResult b = estimate(y, kGauss, UGrid({0.5, 1.0, 1.5, 2.0}), opts);
    CHECK(a.theta.to_vector() == b.theta.to_vector());
}

TEST_CASE("estimate validates its input") {
    const std::vector<double> y = simulated(1000, 24);
    CHECK_THROWS_AS((void)estimate(std::vector<double>(499, 0.1), kGauss, UGrid::default_grid()), std::invalid_argument);
    CHECK_THROWS_AS((void)estimate(y, kGauss, UGrid({1.0, 2.0})), std::invalid_argument);
    EcfOptions opts;
    opts.r = 0;
    CHECK_THROWS_AS((void)estimate(y, kGauss, UGrid::default_grid(), opts), std::invalid_argument);
    opts.r = 1;
    opts.ridge = -1.0;
    CHECK_THROWS_AS((void)estimate(y, kGauss, UGrid::default_grid(), opts), std::invalid_argument);
}

TEST_CASE("coin-flip noise still yields a stationary estimate") {
    std::mt19937_64 gen(25);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> inc(6000);
    for (double& v : inc) v = coin(gen) ? 1.0 : -1.0;
    const std::vector<double> y = simulate_from_increments(kTruth, inc, 1000).y;
    EcfOptions opts;
    opts.multistart = 2;
    const EstimationResult res = estimate(y, kGauss, UGrid({0.5, 1.0, 1.5, 2.0}), opts);
    CHECK(res.theta.is_stationary());
    CHECK(res.theta.to_vector().allFinite());
}

TEST_CASE("optimal stage that slides away from the preliminary estimate is rejected") {
    // At N = 10⁴ this sample has no local minimum of the fixed-weight criterion
    // near θ*; descending it shrinks the instrument towards (0.54, 0.39, 0.25).
    const std::vector<double> y =
        simulate(kTruth, kGauss, 10000, kDefaultBurnIn, derive_seed(derive_seed(9, 1), 4)).y;
    const EstimationResult res = estimate(y, kGauss, UGrid::default_grid());
    REQUIRE(res.ok());
    CHECK(res.preliminary_retained);
    CHECK((res.theta.to_vector() - kTruth.to_vector()).cwiseAbs().maxCoeff() < 0.08);
    CHECK((res.theta.to_vector() - res.theta_pre->to_vector()).cwiseAbs().maxCoeff() < 1e-4);
}
