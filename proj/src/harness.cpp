#include "garch_ecf/harness.hpp"

#include "garch_ecf/errors.hpp"
#include "garch_ecf/random.hpp"

#include <boost/math/tools/minima.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace garch_ecf {

namespace {

struct MethodRun {
    std::optional<EstimationResult> result;
    std::string error;
};

ReplicationRecord make_record(std::size_t rep, const std::string& method, const MethodRun& run) {
    ReplicationRecord rec;
    rec.rep = rep;
    rec.method = method;
    if (!run.result) {
        rec.status = "error";
        rec.error = run.error;
        return rec;
    }
    rec.status = to_string(run.result->status);
    rec.converged = run.result->ok();
    rec.theta = run.result->theta.to_vector();
    rec.iterations = run.result->iterations;
    rec.objective = run.result->objective;
    return rec;
}

template <class F>
MethodRun guarded_run(F&& f) {
    MethodRun run;
    try {
        run.result = f();
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    return run;
}

struct SampleMoments {
    Eigen::VectorXd mean;
    std::optional<Eigen::MatrixXd> cov;  // unbiased; undefined for a single sample
};

SampleMoments sample_moments(const std::vector<Eigen::VectorXd>& xs, Eigen::Index p) {
    SampleMoments out;
    out.mean = Eigen::VectorXd::Zero(p);
    if (xs.empty()) return out;
    for (const auto& x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
    for (const auto& x : xs) cov += (x - out.mean) * (x - out.mean).transpose();
    out.cov = cov / static_cast<double>(xs.size() - 1);
    return out;
}

NoiseModel ml_noise_for(const NoiseModel& assumed) {
    // Families without a closed-form density fall back to Gaussian quasi-ML.
    return assumed.has_closed_form_density() ? assumed : NoiseModel::gaussian();
}

std::string format_double(double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return {buf, static_cast<std::size_t>(len)};
}

std::vector<std::string> theta_names(std::size_t r, std::size_t s) {
    std::vector<std::string> names{"alpha0"};
    for (std::size_t i = 1; i <= r; ++i) names.push_back("alpha" + std::to_string(i));
    for (std::size_t j = 1; j <= s; ++j) names.push_back("beta" + std::to_string(j));
    return names;
}

}  // namespace

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Eigen::VectorXd row = m.row(i).transpose();
        rows.push_back(to_json(row));
    }
    return rows;
}

json to_json(const EstimationResult& result, const NoiseModel& noise, const std::optional<UGrid>& grid) {
    json trace = json::array();
    for (const TraceEntry& t : result.trace)
        trace.push_back({{"stage", t.stage},
                         {"iteration", t.iteration},
                         {"value", t.value},
                         {"stationarity", t.stationarity},
                         {"damping", t.damping}});
    json j{{"method", result.method},
           {"noise", to_json(noise)},
           {"theta", to_json(result.theta)},
           {"theta_vector", to_json(result.theta.to_vector())},
           {"status", to_string(result.status)},
           {"objective", result.objective},
           {"gradient", to_json(result.gradient)},
           {"iterations", result.iterations},
           {"n_obs", result.n_obs},
           {"distinct_solutions", result.distinct_solutions},
           {"uniqueness_violation", result.uniqueness_violation},
           {"preliminary_retained", result.preliminary_retained},
           {"m_star_hat", to_json(result.m_star_hat)},
           {"asympt_cov", to_json(result.asympt_cov)},
           {"covariance", to_json(result.covariance)},
           {"efficiency_score", result.efficiency_score},
           {"ridge_events", result.ridge_events},
           {"trace", trace}};
    if (result.method == "ml") {
        j["neg_loglik"] = result.objective;
        j["mu"] = result.efficiency_score;
    }
    if (result.theta_pre) j["theta_pre"] = to_json(*result.theta_pre);
    if (grid) j["grid"] = to_json(*grid);
    return j;
}

const MethodSummary* StudyReport::find(const std::string& method) const {
    for (const MethodSummary& m : methods)
        if (m.method == method) return &m;
    return nullptr;
}

json StudyReport::to_json() const {
    using garch_ecf::to_json;
    json methods_j = json::array();
    for (const MethodSummary& m : methods) {
        methods_j.push_back({{"method", m.method},
                             {"successes", m.successes},
                             {"failures", m.failures},
                             {"mean_theta", to_json(m.mean_theta)},
                             {"bias", to_json(m.bias)},
                             {"bias_se", to_json(m.bias_se)},
                             {"covariance_defined", m.empirical_cov.has_value()},
                             {"empirical_cov", m.empirical_cov ? to_json(*m.empirical_cov) : json(nullptr)},
                             {"theoretical_cov", to_json(m.theoretical_cov)},
                             {"diag_ratio", to_json(m.diag_ratio)},
                             {"efficiency_score", m.efficiency_score}});
    }
    json estimates = json::array();
    for (const ReplicationRecord& r : records) {
        json e{{"rep", r.rep}, {"method", r.method}, {"status", r.status}, {"converged", r.converged}};
        if (r.status != "error") {
            e["theta"] = to_json(r.theta);
            e["iterations"] = r.iterations;
            e["objective"] = r.objective;
        } else {
            e["error"] = r.error;
        }
        estimates.push_back(e);
    }
    return {{"config", garch_ecf::to_json(config)},
            {"methods", methods_j},
            {"m_star", to_json(m_star)},
            {"efficiency_ratio", efficiency_ratio ? to_json(*efficiency_ratio) : json(nullptr)},
            {"estimates", estimates}};
}

StudyReport run_mc_study(const StudyConfig& cfg) {
    if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
    const auto p = static_cast<Eigen::Index>(cfg.model.dim());
    const bool do_ecf = cfg.method != StudyMethod::Ml;
    const bool do_ml = cfg.method != StudyMethod::Ecf;
    const NoiseModel ml_noise = ml_noise_for(cfg.noise_assumed);

    struct RepOut {
        MethodRun ecf;
        MethodRun ml;
        std::optional<Eigen::MatrixXd> m_truth;
    };
    std::vector<RepOut> outs(cfg.replications);
    parallel_for(cfg.replications, cfg.workers, [&](std::size_t i) {
        RepOut& out = outs[i];
        try {
            const SimulatedPath path =
                simulate(cfg.model, cfg.noise_true, cfg.n, cfg.burn_in, derive_seed(cfg.seed, i));
            out.m_truth = m_hat(cfg.model, path.y, cfg.ecf.transient);
            if (do_ecf) out.ecf = guarded_run([&] { return estimate(path.y, cfg.noise_assumed, cfg.grid, cfg.ecf); });
            if (do_ml) out.ml = guarded_run([&] { return ml_estimate(path.y, ml_noise, cfg.ml); });
        } catch (const std::exception& e) {
            out.ecf.error = out.ml.error = std::string("simulation failed: ") + e.what();
        }
    });

    StudyReport report;
    report.config = cfg;
    report.m_star = Eigen::MatrixXd::Zero(p, p);
    std::size_t m_count = 0;
    for (const RepOut& o : outs) {
        if (o.m_truth) {
            report.m_star += *o.m_truth;
            ++m_count;
        }
    }
    if (m_count == 0) throw StudyFailure("every replication failed to simulate");
    report.m_star /= static_cast<double>(m_count);

    const Eigen::VectorXd truth = cfg.model.to_vector();
    auto summarize = [&](const std::string& method, MethodRun RepOut::*member) {
        MethodSummary s;
        s.method = method;
        std::vector<Eigen::VectorXd> thetas;
        for (std::size_t i = 0; i < outs.size(); ++i) {
            const MethodRun& run = outs[i].*member;
            report.records.push_back(make_record(i, method, run));
            if (run.result && run.result->ok()) {
                thetas.push_back(run.result->theta.to_vector());
            }
        }
        s.successes = thetas.size();
        s.failures = outs.size() - thetas.size();
        if (static_cast<double>(s.failures) > 0.2 * static_cast<double>(outs.size())) {
            std::ostringstream os;
            os << method << " study: " << s.failures << " of " << outs.size() << " replications failed";
            throw StudyFailure(os.str());
        }
        const SampleMoments mom = sample_moments(thetas, p);
        s.mean_theta = mom.mean;
        s.bias = mom.mean - truth;
        if (mom.cov) {
            s.empirical_cov = *mom.cov * static_cast<double>(cfg.n);
            s.bias_se = (mom.cov->diagonal() / static_cast<double>(thetas.size())).cwiseSqrt();
        } else {
            s.bias_se = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
        }
        if (method == "ecf") {
            const AsymptoticCovariance ac = asymptotic_covariance(cfg.grid, cfg.noise_assumed, report.m_star, cfg.ecf.ridge);
            s.theoretical_cov = ac.sigma;
            s.efficiency_score = ac.efficiency_score;
        } else {
            s.efficiency_score = fisher_scale(ml_noise);
            s.theoretical_cov = report.m_star.inverse() / s.efficiency_score;
        }
        s.diag_ratio = s.empirical_cov
                           ? Eigen::VectorXd(s.empirical_cov->diagonal().cwiseQuotient(s.theoretical_cov.diagonal()))
                           : Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
        report.methods.push_back(std::move(s));
    };
    if (do_ecf) summarize("ecf", &RepOut::ecf);
    if (do_ml) summarize("ml", &RepOut::ml);

    const MethodSummary* e = report.find("ecf");
    const MethodSummary* m = report.find("ml");
    if (e && m && e->empirical_cov && m->empirical_cov)
        report.efficiency_ratio = e->empirical_cov->diagonal().cwiseQuotient(m->empirical_cov->diagonal());
    return report;
}

void write_study_outputs(const StudyReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    const std::filesystem::path csv_path = dir / "estimates.csv";
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    csv << "rep,method,converged";
    for (const std::string& name : theta_names(report.config.model.r(), report.config.model.s())) csv << ',' << name;
    csv << ",iterations,objective,status\n";
    for (const ReplicationRecord& r : report.records) {
        if (r.status == "error") continue;
        csv << r.rep << ',' << r.method << ',' << (r.converged ? 1 : 0);
        for (Eigen::Index i = 0; i < r.theta.size(); ++i) csv << ',' << format_double(r.theta(i));
        csv << ',' << r.iterations << ',' << format_double(r.objective) << ',' << r.status << '\n';
    }
    if (!csv) throw IoError("write failed for " + csv_path.string());

    const std::filesystem::path json_path = dir / "report.json";
    std::ofstream js(json_path, std::ios::binary);
    if (!js) throw IoError("cannot write " + json_path.string());
    js << report.to_json().dump(2) << '\n';
    if (!js) throw IoError("write failed for " + json_path.string());
}

std::vector<EfficiencyCurveRow> run_efficiency_curve(const NoiseModel& noise, std::span<const UGrid> grids,
                                                     const std::optional<std::filesystem::path>& out) {
    const double mu = fisher_scale(noise);
    std::vector<EfficiencyCurveRow> rows;
    for (const EfficiencyPoint& pt : efficiency_bound(noise, grids))
        rows.push_back({pt.size, pt.value, mu, pt.ridge_applied});
    if (out) {
        std::ofstream csv(*out, std::ios::binary);
        if (!csv) throw IoError("cannot write " + out->string());
        csv << "M,efficiency,mu,ridge_applied\n";
        for (const auto& r : rows)
            csv << r.m << ',' << format_double(r.value) << ',' << format_double(r.mu) << ','
                << (r.ridge_applied ? 1 : 0) << '\n';
        if (!csv) throw IoError("write failed for " + out->string());
    }
    return rows;
}

double fit_noise_shape(std::span<const double> residuals, NoiseFamily family, const UGrid& grid) {
    if (family != NoiseFamily::VarianceGamma)
        throw std::invalid_argument("noise family has no shape parameter to fit");
    if (residuals.empty()) throw std::invalid_argument("no residuals to fit");
    std::vector<std::complex<double>> ecf(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::complex<double> acc = 0.0;
        for (double e : residuals) acc += std::polar(1.0, grid[k] * e);
        ecf[k] = acc / static_cast<double>(residuals.size());
    }
    auto loss = [&](double log_nu) {
        const NoiseModel m = NoiseModel::variance_gamma(std::exp(log_nu));
        double total = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) total += std::norm(ecf[k] - cf(grid[k], m));
        return total;
    };
    const auto [arg, value] =
        boost::math::tools::brent_find_minima(loss, std::log(1e-3), std::log(50.0), 40);
    (void)value;
    return std::exp(arg);
}

json ThreeStageReport::to_json() const {
    json arms_j = json::array();
    for (const ArmSummary& a : arms) {
        json est = json::array();
        for (const auto& e : a.estimates) est.push_back(garch_ecf::to_json(e));
        arms_j.push_back({{"name", a.name},
                          {"noise_true", garch_ecf::to_json(a.noise_true)},
                          {"noise_assumed", garch_ecf::to_json(a.noise_assumed)},
                          {"successes", a.successes},
                          {"failures", a.failures},
                          {"mean_bias", garch_ecf::to_json(a.mean_bias)},
                          {"bias_se", garch_ecf::to_json(a.bias_se)},
                          {"t_stat", garch_ecf::to_json(a.t_stat)},
                          {"biased", a.biased},
                          {"shapes", a.shapes},
                          {"estimates", est}});
    }
    return {{"config", garch_ecf::to_json(config)}, {"arms", arms_j}};
}

ThreeStageReport run_three_stage_experiment(const StudyConfig& cfg) {
    ThreeStageReport report;
    report.config = cfg;
    const auto p = static_cast<Eigen::Index>(cfg.model.dim());
    const Eigen::VectorXd truth = cfg.model.to_vector();
    const bool fit_shape = cfg.noise_assumed.family() == NoiseFamily::VarianceGamma;

    const std::array<std::pair<const char*, NoiseModel>, 2> arms{
        {{"misspecified", cfg.noise_true}, {"control", cfg.noise_assumed}}};
    for (std::size_t a = 0; a < arms.size(); ++a) {
        struct RepOut {
            std::optional<Eigen::VectorXd> theta;
            std::optional<double> shape;
            std::string failure;
        };
        std::vector<RepOut> outs(cfg.replications);
        const std::int64_t arm_seed = derive_seed(cfg.seed, a);
        parallel_for(cfg.replications, cfg.workers, [&](std::size_t i) {
            RepOut& out = outs[i];
            int stage = 0;
            try {
                const SimulatedPath path = simulate(cfg.model, arms[a].second, cfg.n, cfg.burn_in, derive_seed(arm_seed, i));
                stage = 1;
                const MlResult qml = ml_estimate(path.y, NoiseModel::gaussian(), cfg.ml);
                if (!qml.ok()) throw NumericalError("quasi-ML " + to_string(qml.status));
                stage = 2;
                NoiseModel fitted = cfg.noise_assumed;
                if (fit_shape) {
                    out.shape = fit_noise_shape(residuals(qml.theta, path.y), NoiseFamily::VarianceGamma);
                    fitted = NoiseModel::variance_gamma(*out.shape);
                }
                stage = 3;
                const EstimationResult est = estimate(path.y, fitted, cfg.grid, cfg.ecf);
                if (!est.ok()) throw NumericalError("ECF " + to_string(est.status));
                out.theta = est.theta.to_vector();
            } catch (const std::exception& e) {
                out.failure = "rep " + std::to_string(i) + " stage " + std::to_string(stage) + ": " + e.what();
            }
        });

        ArmSummary s;
        s.name = arms[a].first;
        s.noise_true = arms[a].second;
        s.noise_assumed = cfg.noise_assumed;
        std::vector<Eigen::VectorXd> errors;
        for (const RepOut& o : outs) {
            if (o.shape) s.shapes.push_back(*o.shape);
            if (o.theta) {
                s.estimates.push_back(*o.theta);
                errors.push_back(*o.theta - truth);
            } else {
                s.failures.push_back(o.failure);
            }
        }
        s.successes = errors.size();
        if (static_cast<double>(s.failures.size()) > 0.2 * static_cast<double>(outs.size()))
            throw StudyFailure(std::string(s.name) + " arm: " + std::to_string(s.failures.size()) +
                               " replications failed; first: " + s.failures.front());
        const SampleMoments mom = sample_moments(errors, p);
        s.mean_bias = mom.mean;
        if (mom.cov) {
            s.bias_se = (mom.cov->diagonal() / static_cast<double>(errors.size())).cwiseSqrt();
            s.t_stat = s.mean_bias.cwiseQuotient(s.bias_se);
            s.biased = (s.t_stat.array().abs() > 3.0).any();
        } else {
            s.bias_se = s.t_stat = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
        }
        report.arms.push_back(std::move(s));
    }
    return report;
}

Eigen::VectorXd linear_error_term(const GarchParams& truth, std::span<const double> y, const UGrid& grid,
                                  const NoiseModel& noise, const WeightMatrix& k, std::size_t transient) {
    const ScoreSet sc = scores(truth, y, grid, noise, transient, true);
    const Eigen::MatrixXcd gw = k.whiten(sc.jac);
    const Eigen::MatrixXcd hw = k.whiten(sc.h_bar);
    const Eigen::MatrixXd r = (gw.adjoint() * gw).real();
    const Eigen::VectorXd rhs = (gw.adjoint() * hw).real().col(0);
    return -r.ldlt().solve(rhs);
}

json StabilitySummary::to_json() const {
    return {{"rho_q2", rho_q2},
            {"rho_q4", rho_q4},
            {"lambda2_hat", lambda2.vanished ? json(nullptr) : json(lambda2.slope)},
            {"lambda2_r_squared", lambda2.r_squared},
            {"coprime", coprime}};
}

StabilitySummary stability_summary(const GarchParams& params, const NoiseModel& noise, std::size_t n_max,
                                   std::size_t reps, std::int64_t seed) {
    const StateMatrixSpec spec = make_state_spec(state_matrix(params), noise, 4);
    StabilitySummary out;
    out.rho_q2 = spectral_radius(expected_kron_power(spec, 2));
    out.rho_q4 = spectral_radius(expected_kron_power(spec, 4));
    out.lambda2 = estimate_lambda_q(spec, noise, 2, n_max, reps, seed);
    out.coprime = check_coprime(params);
    return out;
}

}  // namespace garch_ecf
