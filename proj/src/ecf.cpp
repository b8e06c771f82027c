#include "garch_ecf/ecf.hpp"

#include "garch_ecf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace garch_ecf {

using cd = std::complex<double>;

UGrid::UGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("u-grid must not be empty");
    for (std::size_t k = 0; k < points_.size(); ++k) {
        if (!(points_[k] > 0.0) || !std::isfinite(points_[k]))
            throw std::invalid_argument("u-grid points must be positive and finite");
        if (k > 0 && !(points_[k] > points_[k - 1]))
            throw std::invalid_argument("u-grid points must be strictly increasing");
    }
}

UGrid UGrid::uniform(double step, std::size_t count) {
    if (!(step > 0.0) || count == 0) throw std::invalid_argument("uniform grid needs step > 0 and count ≥ 1");
    std::vector<double> pts(count);
    for (std::size_t k = 0; k < count; ++k) pts[k] = step * static_cast<double>(k + 1);
    return UGrid(std::move(pts));
}

std::optional<double> UGrid::arithmetic_step() const {
    const double step = points_.front();
    for (std::size_t k = 0; k < points_.size(); ++k) {
        const double expected = step * static_cast<double>(k + 1);
        if (std::abs(points_[k] - expected) > 1e-12 * expected) return std::nullopt;
    }
    return step;
}

namespace {

Eigen::MatrixXcd c_matrix_points(std::span<const double> u, const NoiseModel& noise) {
    const auto m = static_cast<Eigen::Index>(u.size());
    Eigen::MatrixXcd c(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        for (Eigen::Index l = 0; l < m; ++l) {
            // φ(−u) = conj φ(u) for real-valued noise
            c(k, l) = cf(u[k] - u[l], noise) - cf(u[k], noise) * std::conj(cf(u[l], noise));
        }
    }
    return c;
}

Eigen::VectorXcd phi_points(std::span<const double> u, const NoiseModel& noise) {
    Eigen::VectorXcd phi(static_cast<Eigen::Index>(u.size()));
    for (std::size_t k = 0; k < u.size(); ++k) phi(static_cast<Eigen::Index>(k)) = u[k] * cf_deriv(u[k], noise);
    return phi;
}

double hermitian_condition(const Eigen::MatrixXcd& a) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

double symmetric_condition(const Eigen::MatrixXd& a) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

constexpr double kSingularCondition = 1e15;

void require_positive_definite(const Eigen::MatrixXd& m, const std::string& what) {
    const double cond = symmetric_condition(m);
    if (!(cond < kSingularCondition)) throw SingularMatrix(what + " is not positive definite", cond);
}

std::string ridge_event(const std::string& what, double ridge, double condition) {
    std::ostringstream os;
    os << what << ": ridge " << ridge << " added (condition number " << condition << ")";
    return os.str();
}

ScoreSet accumulate_scores(const SeriesBundle& b, const UGrid& grid, std::span<const cd> phi,
                           std::size_t transient, bool with_jacobian, bool with_m_hat_grad = true) {
    with_m_hat_grad = with_m_hat_grad && with_jacobian;
    const std::size_t n_total = b.y.size();
    if (n_total <= transient)
        throw std::invalid_argument("series length must exceed the transient cutoff");
    const auto p = b.d_sigma2.cols();
    const auto m = static_cast<Eigen::Index>(grid.size());
    const auto& u = grid.points();
    const std::optional<double> step = grid.arithmetic_step();

    // Upper-triangle index pairs of a p × p symmetric matrix.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> upper;
    for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index c = a; c < p; ++c) upper.emplace_back(a, c);
    const auto nu = static_cast<Eigen::Index>(upper.size());

    // Per block of observations, the per-(n, k) coefficients are laid out in
    // matrices (real parts in columns 0..M−1, imaginary parts in M..2M−1) and
    // the sums over n become matrix products:
    //   h̄ ← Σ d·w,  jac ← Σ (−iuε·e − 2d)·wwᵀ + d·(∂²σ²/∂θ²)/(2σ²).
    constexpr Eigen::Index kBlock = 512;
    RowMatrix dc(kBlock, 2 * m), cw, wv(kBlock, p), wf, df, dw;
    Eigen::MatrixXd h_acc = Eigen::MatrixXd::Zero(2 * m, p), jw_acc, jd_acc, tt;
    Eigen::MatrixXd mm = Eigen::MatrixXd::Zero(p, p);
    if (with_jacobian) {
        cw.resize(kBlock, 2 * m);
        wf.resize(kBlock, nu);
        df.resize(kBlock, nu);
        jw_acc = jd_acc = Eigen::MatrixXd::Zero(2 * m, nu);
    }
    if (with_m_hat_grad) {
        dw.resize(kBlock, p * p);
        tt = Eigen::MatrixXd::Zero(p * p, p);
    }
    std::vector<double> phr(grid.size()), phi_im(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        phr[k] = phi[k].real();
        phi_im[k] = phi[k].imag();
    }

    for (std::size_t start = transient; start < n_total; start += kBlock) {
        const auto rows = static_cast<Eigen::Index>(std::min<std::size_t>(kBlock, n_total - start));
        for (Eigen::Index i = 0; i < rows; ++i) {
            const std::size_t n = start + static_cast<std::size_t>(i);
            const double eps = b.eps[n];
            const double inv = 0.5 / b.sigma2[n];
            wv.row(i) = b.d_sigma2.row(static_cast<Eigen::Index>(n)) * inv;
            double er = 0.0, ei = 0.0, cr = 0.0, ci = 0.0;
            if (step) {
                cr = std::cos(*step * eps);
                ci = std::sin(*step * eps);
                er = cr;
                ei = ci;
            }
            for (Eigen::Index k = 0; k < m; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                if (!step) {
                    er = std::cos(u[kk] * eps);
                    ei = std::sin(u[kk] * eps);
                } else if (k > 0) {
                    const double t = er * cr - ei * ci;
                    ei = er * ci + ei * cr;
                    er = t;
                }
                const double d_re = er - phr[kk];
                const double d_im = ei - phi_im[kk];
                dc(i, k) = d_re;
                dc(i, m + k) = d_im;
                if (with_jacobian) {
                    const double x = u[kk] * eps;
                    cw(i, k) = ei * x - 2.0 * d_re;
                    cw(i, m + k) = -er * x - 2.0 * d_im;
                }
            }
            if (with_jacobian) {
                for (Eigen::Index j = 0; j < nu; ++j) {
                    const auto [a, c] = upper[static_cast<std::size_t>(j)];
                    wf(i, j) = wv(i, a) * wv(i, c);
                    df(i, j) = b.d2_sigma2(n, static_cast<std::size_t>(a), static_cast<std::size_t>(c)) * inv;
                }
            }
            if (with_m_hat_grad) {
                // dw(i, c·p + a) = ∂w_a/∂θ_c = (∂²σ²/∂θ_a∂θ_c)/(2σ²) − 2 w_a w_c
                for (Eigen::Index c = 0; c < p; ++c)
                    for (Eigen::Index a = 0; a < p; ++a)
                        dw(i, c * p + a) = b.d2_sigma2(n, static_cast<std::size_t>(a), static_cast<std::size_t>(c)) * inv -
                                           2.0 * wv(i, a) * wv(i, c);
            }
        }
        const auto dcb = dc.topRows(rows);
        const auto wvb = wv.topRows(rows);
        h_acc.noalias() += dcb.transpose() * wvb;
        mm.noalias() += wvb.transpose() * wvb;
        if (with_jacobian) {
            jw_acc.noalias() += cw.topRows(rows).transpose() * wf.topRows(rows);
            jd_acc.noalias() += dcb.transpose() * df.topRows(rows);
        }
        if (with_m_hat_grad) tt.noalias() += dw.topRows(rows).transpose() * wvb;
    }

    const double scale = 1.0 / static_cast<double>(n_total - transient);
    ScoreSet out;
    out.n_used = n_total - transient;
    out.h_bar.resize(m * p);
    for (Eigen::Index k = 0; k < m; ++k)
        for (Eigen::Index a = 0; a < p; ++a) out.h_bar(k * p + a) = cd(h_acc(k, a), h_acc(m + k, a)) * scale;
    if (with_jacobian) {
        out.jac.resize(m * p, p);
        for (Eigen::Index k = 0; k < m; ++k) {
            for (Eigen::Index j = 0; j < nu; ++j) {
                const auto [a, c] = upper[static_cast<std::size_t>(j)];
                const cd v = cd(jw_acc(k, j) + jd_acc(k, j), jw_acc(m + k, j) + jd_acc(m + k, j)) * scale;
                out.jac(k * p + a, c) = v;
                out.jac(k * p + c, a) = v;
            }
        }
    }
    out.m_hat = mm * scale;
    if (with_m_hat_grad) {
        for (Eigen::Index c = 0; c < p; ++c) {
            // tt(c·p + a, b) = Σ (∂w_a/∂θ_c) w_b
            const Eigen::MatrixXd t = tt.middleRows(c * p, p) * scale;
            out.m_hat_grad.emplace_back(t + t.transpose());
        }
    }
    return out;
}

std::vector<cd> cf_values(const UGrid& grid, const NoiseModel& noise) {
    std::vector<cd> phi(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) phi[k] = cf(grid[k], noise);
    return phi;
}

LocalModel whitened_model(const ScoreSet& sc, const WeightMatrix& k) {
    const Eigen::MatrixXcd r = k.whiten(sc.h_bar);
    const Eigen::MatrixXcd jw = k.whiten(sc.jac);
    LocalModel lm;
    lm.value = r.squaredNorm();
    lm.gradient = 2.0 * (jw.adjoint() * r).real().col(0);
    lm.curvature = 2.0 * (jw.adjoint() * jw).real();
    return lm;
}

WeightMatrix cue_weighting(const ScoreSet& sc, const RegularizedMatrix& c) {
    require_positive_definite(sc.m_hat, "M̂(θ)");
    return WeightMatrix::from_matrix(Eigen::kroneckerProduct(c.matrix, sc.m_hat.cast<cd>()).eval());
}

double cue_value(const ScoreSet& sc, const RegularizedMatrix& c) {
    return cue_weighting(sc, c).whiten(sc.h_bar).squaredNorm();
}

LocalModel cue_model(const ScoreSet& sc, const RegularizedMatrix& c) {
    const WeightMatrix k = cue_weighting(sc, c);
    LocalModel lm = whitened_model(sc, k);
    // ∂/∂θ_c of h̄*K⁻¹h̄ through K: −z*(C ⊗ ∂M̂/∂θ_c)z with z = K⁻¹h̄.
    const auto p = sc.m_hat.rows();
    const auto m = c.matrix.rows();
    const Eigen::VectorXcd z = k.solve(sc.h_bar);
    Eigen::MatrixXcd zm(m, p);  // zm(k, a) = z[k·p + a]
    for (Eigen::Index kk = 0; kk < m; ++kk) zm.row(kk) = z.segment(kk * p, p).transpose();
    const Eigen::MatrixXcd cz = c.matrix * zm;
    for (Eigen::Index cc = 0; cc < p; ++cc) {
        const Eigen::MatrixXcd t = cz * sc.m_hat_grad[static_cast<std::size_t>(cc)].cast<cd>();
        lm.gradient(cc) -= (zm.conjugate().cwiseProduct(t)).sum().real();
    }
    return lm;
}

Eigen::MatrixXd average_outer(const SeriesBundle& b, std::size_t transient) {
    const auto n_total = static_cast<Eigen::Index>(b.y.size());
    const auto t = static_cast<Eigen::Index>(transient);
    if (n_total <= t) throw std::invalid_argument("series length must exceed the transient cutoff");
    const auto p = b.d_sigma2.cols();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd w(p);
    for (Eigen::Index n = t; n < n_total; ++n) {
        w = b.d_sigma2.row(n).transpose() * (0.5 / b.sigma2[static_cast<std::size_t>(n)]);
        acc.selfadjointView<Eigen::Lower>().rankUpdate(w);
    }
    Eigen::MatrixXd out = acc.selfadjointView<Eigen::Lower>();
    return out / static_cast<double>(n_total - t);
}

}  // namespace

Eigen::MatrixXcd c_matrix(const UGrid& grid, const NoiseModel& noise) {
    return c_matrix_points(grid.points(), noise);
}

RegularizedMatrix regularize(const Eigen::MatrixXcd& c, double ridge_factor) {
    if (ridge_factor < 0.0) throw std::invalid_argument("ridge must be nonnegative");
    RegularizedMatrix out{c, hermitian_condition(c), false, 0.0};
    if (out.condition > kRidgeConditionThreshold && ridge_factor > 0.0) {
        out.ridge = ridge_factor * c.trace().real() / static_cast<double>(c.rows());
        out.matrix.diagonal().array() += out.ridge;
        out.ridge_applied = true;
    }
    return out;
}

Eigen::VectorXcd phi_vector(const UGrid& grid, const NoiseModel& noise) {
    return phi_points(grid.points(), noise);
}

ScoreSet scores(const GarchParams& params, std::span<const double> y, const UGrid& grid,
                const NoiseModel& noise, std::size_t transient, bool with_jacobian) {
    const SeriesBundle b = filter_series(params, y, with_jacobian);
    const std::vector<cd> phi = cf_values(grid, noise);
    return accumulate_scores(b, grid, phi, transient, with_jacobian);
}

Eigen::MatrixXd m_hat(const GarchParams& params, std::span<const double> y, std::size_t transient) {
    return average_outer(filter_series(params, y, false), transient);
}

WeightMatrix WeightMatrix::identity(std::size_t dim) {
    WeightMatrix w;
    w.k_ = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    w.identity_ = true;
    return w;
}

WeightMatrix WeightMatrix::from_matrix(const Eigen::MatrixXcd& k) {
    if (k.rows() != k.cols()) throw std::invalid_argument("weighting matrix must be square");
    WeightMatrix w;
    w.k_ = k;
    w.condition_ = hermitian_condition(k);
    if (!(w.condition_ < kSingularCondition))
        throw SingularMatrix("weighting matrix is not positive definite", w.condition_);
    const Eigen::LLT<Eigen::MatrixXcd> llt(k);
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("weighting matrix Cholesky factorization failed", w.condition_);
    w.l_ = llt.matrixL();
    return w;
}

WeightMatrix WeightMatrix::optimal(const UGrid& grid, const NoiseModel& noise,
                                   const Eigen::MatrixXd& m_hat, double ridge_factor) {
    require_positive_definite(m_hat, "M̂");
    const RegularizedMatrix c = regularize(c_matrix(grid, noise), ridge_factor);
    const Eigen::MatrixXcd m_c = m_hat.cast<cd>();
    WeightMatrix w = from_matrix(Eigen::kroneckerProduct(c.matrix, m_c).eval());
    w.ridge_applied_ = c.ridge_applied;
    w.ridge_ = c.ridge;
    return w;
}

Eigen::MatrixXcd WeightMatrix::solve(const Eigen::MatrixXcd& x) const {
    if (identity_) return x;
    return l_.adjoint().triangularView<Eigen::Upper>().solve(whiten(x));
}

Eigen::MatrixXcd WeightMatrix::whiten(const Eigen::MatrixXcd& x) const {
    if (identity_) return x;
    return l_.triangularView<Eigen::Lower>().solve(x);
}

ObjectiveValue objective(const GarchParams& params, std::span<const double> y, const UGrid& grid,
                         const NoiseModel& noise, const WeightMatrix& k, std::size_t transient) {
    const ScoreSet sc = scores(params, y, grid, noise, transient, true);
    if (k.matrix().rows() != sc.h_bar.size())
        throw std::invalid_argument("weighting matrix dimension does not match p·M");
    const LocalModel lm = whitened_model(sc, k);
    return {lm.value, 0.5 * lm.gradient};
}

CueValue cue_objective(const GarchParams& params, std::span<const double> y, const UGrid& grid,
                       const NoiseModel& noise, double ridge_factor, std::size_t transient) {
    const ScoreSet sc = scores(params, y, grid, noise, transient, true);
    const LocalModel lm = cue_model(sc, regularize(c_matrix(grid, noise), ridge_factor));
    return {lm.value, lm.gradient};
}

AsymptoticCovariance asymptotic_covariance(const UGrid& grid, const NoiseModel& noise,
                                           const Eigen::MatrixXd& m_star, double ridge_factor) {
    require_positive_definite(m_star, "M*");
    const RegularizedMatrix c = regularize(c_matrix(grid, noise), ridge_factor);
    const Eigen::LLT<Eigen::MatrixXcd> llt(c.matrix);
    if (llt.info() != Eigen::Success) throw SingularMatrix("C is not positive definite", c.condition);
    const Eigen::VectorXcd phi = phi_vector(grid, noise);
    const double score = phi.dot(llt.solve(phi)).real();
    Eigen::MatrixXd inv = m_star.llt().solve(Eigen::MatrixXd::Identity(m_star.rows(), m_star.cols()));
    inv = 0.5 * (inv + inv.transpose()).eval();
    return {inv / score, score, c.ridge_applied};
}

std::vector<EfficiencyPoint> efficiency_bound(const NoiseModel& noise, std::span<const UGrid> grids,
                                              double ridge_factor) {
    if (grids.empty()) return {};
    auto contains = [](const std::vector<double>& pts, double u) {
        return std::any_of(pts.begin(), pts.end(), [u](double v) {
            return std::abs(v - u) <= 1e-12 * std::max(1.0, std::abs(u));
        });
    };
    // Points ordered by first appearance: each grid is then a leading block.
    std::vector<double> order = grids[0].points();
    for (std::size_t i = 1; i < grids.size(); ++i) {
        for (double u : grids[i - 1].points())
            if (!contains(grids[i].points(), u))
                throw std::invalid_argument("efficiency_bound requires nested grids");
        for (double u : grids[i].points())
            if (!contains(order, u)) order.push_back(u);
    }
    const RegularizedMatrix c = regularize(c_matrix_points(order, noise), ridge_factor);
    const Eigen::LLT<Eigen::MatrixXcd> llt(c.matrix);
    if (llt.info() != Eigen::Success) throw SingularMatrix("C is not positive definite", c.condition);
    const Eigen::VectorXcd z = llt.matrixL().solve(phi_points(order, noise));

    std::vector<EfficiencyPoint> out;
    for (const UGrid& g : grids) {
        const auto m = static_cast<Eigen::Index>(g.size());
        out.push_back({g.size(), z.head(m).squaredNorm(), c.ridge_applied, c.ridge});
    }
    return out;
}

EstimationResult estimate(std::span<const double> y, const NoiseModel& noise, const UGrid& grid,
                          const EcfOptions& opts) {
    if (y.size() < 500) throw std::invalid_argument("ECF estimation needs at least 500 observations");
    if (opts.r < 1) throw std::invalid_argument("GARCH order r must be at least 1");
    const std::size_t p = 1 + opts.r + opts.s;
    if (grid.size() < p) throw std::invalid_argument("u-grid needs at least r + s + 1 points");
    if (opts.ridge < 0.0) throw std::invalid_argument("ridge must be nonnegative");

    const std::vector<cd> phi = cf_values(grid, noise);
    auto scores_at = [&](const Eigen::VectorXd& theta, bool jacobian, bool m_hat_grad) {
        const GarchParams params = GarchParams::from_vector(theta, opts.r, opts.s);
        return accumulate_scores(filter_series(params, y, jacobian), grid, phi, opts.transient, jacobian,
                                 m_hat_grad);
    };
    auto model_for = [&](const WeightMatrix& k) -> ModelFunction {
        return [&, kp = &k](const Eigen::VectorXd& theta) {
            return whitened_model(scores_at(theta, true, false), *kp);
        };
    };
    auto value_for = [&](const WeightMatrix& k) -> ValueFunction {
        return [&, kp = &k](const Eigen::VectorXd& theta) {
            return kp->whiten(scores_at(theta, false, false).h_bar).squaredNorm();
        };
    };
    SolverOptions so;
    so.grad_tol = opts.grad_tol;
    so.gradient_scale = 0.5;
    so.max_iter = opts.max_iter;

    EstimationResult res;
    res.method = "ecf";
    res.n_obs = y.size();

    // Stage A from several moment-matched starts. With fixed K, Q can be
    // lowered by shrinking the instrument σ_θ/σ rather than by matching the
    // characteristic function, so the preliminary fit re-evaluates
    // K(θ) = C ⊗ M̂(θ) at every iterate.
    const WeightMatrix eye = WeightMatrix::identity(p * grid.size());
    const RegularizedMatrix c_reg = regularize(c_matrix(grid, noise), opts.ridge);
    if (c_reg.ridge_applied) res.ridge_events.push_back(ridge_event("C", c_reg.ridge, c_reg.condition));
    ModelFunction stage_a = model_for(eye);
    ValueFunction stage_a_value = value_for(eye);
    so.stage = "identity";
    if (opts.weighting == Weighting::Optimal) {
        stage_a = [&](const Eigen::VectorXd& theta) { return cue_model(scores_at(theta, true, true), c_reg); };
        stage_a_value = [&](const Eigen::VectorXd& theta) { return cue_value(scores_at(theta, false, false), c_reg); };
        so.stage = "preliminary";
        // θ̂_pre only has to be √N-consistent; stage B polishes to grad_tol.
        so.grad_tol = std::max(opts.grad_tol, kPreliminaryTolerance);
    }
    std::vector<SolverResult> runs;
    const std::vector<Eigen::VectorXd> starts = initial_guesses(std::vector<double>(y.begin(), y.end()),
                                                                opts.r, opts.s, std::max<std::size_t>(1, opts.multistart));
    for (const Eigen::VectorXd& start : starts) runs.push_back(minimize_projected(stage_a, start, opts.feasible, so, stage_a_value));

    const MultistartSummary ms = summarize_multistart(runs);
    const std::size_t best = ms.best;
    res.distinct_solutions = ms.distinct;
    res.uniqueness_violation = ms.distinct > 1;

    SolverResult final_run = runs[best];
    int total_iter = ms.total_iterations;
    res.trace = runs[best].trace;
    res.theta_pre = GarchParams::from_vector(runs[best].theta, opts.r, opts.s);
    res.weighting = eye.matrix();

    if (opts.weighting == Weighting::Optimal) {
        // Stage B: K = C ⊗ M̂(θ̂_pre), started at θ̂_pre.
        try {
            const Eigen::MatrixXd m_pre = m_hat(*res.theta_pre, y, opts.transient);
            const WeightMatrix k = WeightMatrix::optimal(grid, noise, m_pre, opts.ridge);
            so.stage = "optimal";
            so.grad_tol = opts.grad_tol;
            final_run = minimize_projected(model_for(k), runs[best].theta, opts.feasible, so, value_for(k));
            total_iter += final_run.iterations;
            res.trace.insert(res.trace.end(), final_run.trace.begin(), final_run.trace.end());
            res.weighting = k.matrix();

            const Eigen::VectorXd move = final_run.theta - runs[best].theta;
            const Eigen::MatrixXd cov_pre =
                asymptotic_covariance(grid, noise, m_pre, opts.ridge).sigma /
                static_cast<double>(y.size());
            if (move.dot(cov_pre.ldlt().solve(move)) > kOptimalStageRadius * kOptimalStageRadius) {
                so.stage = "preliminary-polish";
                final_run = minimize_projected(stage_a, runs[best].theta, opts.feasible, so, stage_a_value);
                total_iter += final_run.iterations;
                res.trace.insert(res.trace.end(), final_run.trace.begin(), final_run.trace.end());
                res.weighting = cue_weighting(scores_at(final_run.theta, false, false), c_reg).matrix();
                res.preliminary_retained = true;
            }
        } catch (const SingularMatrix& e) {
            res.ridge_events.push_back(std::string("optimal weighting unavailable: ") + e.what());
            final_run.status = SolverStatus::NoConvergence;
        }
    }

    res.theta = GarchParams::from_vector(final_run.theta, opts.r, opts.s);
    res.status = final_run.status;
    res.objective = final_run.model.value;
    res.gradient = 0.5 * final_run.model.gradient;
    res.iterations = total_iter;

    try {
        res.m_star_hat = m_hat(res.theta, y, opts.transient);
        const AsymptoticCovariance ac = asymptotic_covariance(grid, noise, res.m_star_hat, opts.ridge);
        res.asympt_cov = ac.sigma;
        res.covariance = ac.sigma / static_cast<double>(y.size());
        res.efficiency_score = ac.efficiency_score;
    } catch (const SingularMatrix& e) {
        res.ridge_events.push_back(std::string("covariance unavailable: ") + e.what());
    }
    return res;
}

}  // namespace garch_ecf
