#include "garch_ecf/mle.hpp"

#include "garch_ecf/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace garch_ecf {

namespace {

LocalModel nll_model(const SeriesBundle& b, const NoiseModel& noise, double mu) {
    const auto n_total = static_cast<Eigen::Index>(b.y.size());
    const auto p = b.d_sigma2.cols();
    LocalModel lm;
    lm.gradient = Eigen::VectorXd::Zero(p);
    lm.curvature = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd w(p);
    double value = 0.0;
    for (Eigen::Index n = 0; n < n_total; ++n) {
        const auto i = static_cast<std::size_t>(n);
        const LogDensityScore ls = log_density_score(b.eps[i], noise);
        value += -ls.log_density + 0.5 * std::log(b.sigma2[i]);
        w = b.d_sigma2.row(n).transpose() * (0.5 / b.sigma2[i]);
        lm.gradient += (1.0 + ls.score * b.eps[i]) * w;
        if (mu > 0.0) lm.curvature.selfadjointView<Eigen::Lower>().rankUpdate(w);
    }
    const double inv_n = 1.0 / static_cast<double>(n_total);
    lm.value = value * inv_n;
    lm.gradient *= inv_n;
    if (mu > 0.0) {
        lm.curvature = lm.curvature.selfadjointView<Eigen::Lower>();
        lm.curvature *= mu * inv_n;
    }
    return lm;
}

void require_density(const NoiseModel& noise) {
    if (!noise.has_closed_form_density())
        throw DensityUnavailable("no closed-form density for noise family " + noise.name());
}

}  // namespace

NllValue neg_log_likelihood(const GarchParams& params, std::span<const double> y,
                            const NoiseModel& noise) {
    require_density(noise);
    const LocalModel lm = nll_model(filter_series(params, y, false), noise, 0.0);
    return {lm.value, lm.gradient};
}

MlResult ml_estimate(std::span<const double> y, const NoiseModel& noise, const MlOptions& opts) {
    require_density(noise);
    if (y.size() < 500) throw std::invalid_argument("ML estimation needs at least 500 observations");
    if (opts.r < 1) throw std::invalid_argument("GARCH order r must be at least 1");

    const double mu = fisher_scale(noise);
    const ModelFunction model = [&](const Eigen::VectorXd& theta) {
        const GarchParams params = GarchParams::from_vector(theta, opts.r, opts.s);
        return nll_model(filter_series(params, y, false), noise, mu);
    };
    SolverOptions so;
    so.grad_tol = opts.grad_tol;
    so.max_iter = opts.max_iter;
    so.stage = "ml";

    std::vector<SolverResult> runs;
    for (const Eigen::VectorXd& start :
         initial_guesses(std::vector<double>(y.begin(), y.end()), opts.r, opts.s,
                         std::max<std::size_t>(1, opts.multistart)))
        runs.push_back(minimize_projected(model, start, opts.feasible, so));
    const MultistartSummary ms = summarize_multistart(runs);
    const SolverResult& best = runs[ms.best];

    MlResult res;
    res.method = "ml";
    res.n_obs = y.size();
    res.theta = GarchParams::from_vector(best.theta, opts.r, opts.s);
    res.status = best.status;
    res.objective = best.model.value;
    res.gradient = best.model.gradient;
    res.iterations = ms.total_iterations;
    res.distinct_solutions = ms.distinct;
    res.uniqueness_violation = ms.distinct > 1;
    res.trace = best.trace;
    res.efficiency_score = mu;
    try {
        res.m_star_hat = m_hat(res.theta, y, opts.transient);
        const Eigen::LLT<Eigen::MatrixXd> llt(res.m_star_hat);
        if (llt.info() != Eigen::Success) throw SingularMatrix("M̂* is not positive definite", INFINITY);
        Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(res.m_star_hat.rows(), res.m_star_hat.cols()));
        res.asympt_cov = 0.5 * (inv + inv.transpose()) / mu;
        res.covariance = res.asympt_cov / static_cast<double>(y.size());
    } catch (const SingularMatrix& e) {
        res.ridge_events.push_back(std::string("covariance unavailable: ") + e.what());
    }
    return res;
}

ScaleFisherIdentity scale_fisher_identity_check(const NoiseModel& noise) {
    ScaleFisherIdentity out;
    out.lhs = expectation(noise, [](double x, const DensityTerms& t) {
        const double v = -t.score * x - 1.0;
        return v * v;
    });
    out.rhs = expectation(noise, [](double x, const DensityTerms& t) {
        return t.score * t.score * x * x;
    }) - 1.0;
    out.mean_score_x = expectation(noise, [](double x, const DensityTerms& t) { return t.score * x; });
    // f″/f = (f′/f)′ + (f′/f)²
    out.mean_curvature_x2 = expectation(noise, [](double x, const DensityTerms& t) {
        return (t.score_slope + t.score * t.score) * x * x;
    });
    return out;
}

}  // namespace garch_ecf
