#pragma once

#include "garch_ecf/config.hpp"
#include "garch_ecf/ecf.hpp"
#include "garch_ecf/mle.hpp"
#include "garch_ecf/stability.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace garch_ecf {

/// Calls f(i) for i in [0, count) on up to `workers` threads. Each index is
/// processed exactly once; callers store results by index so that any
/// reduction afterwards is independent of scheduling.
template <class F>
void parallel_for(std::size_t count, std::size_t workers, F&& f) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) f(i);
        });
    }
}

[[nodiscard]] json to_json(const Eigen::VectorXd& v);
[[nodiscard]] json to_json(const Eigen::MatrixXd& m);
[[nodiscard]] json to_json(const EstimationResult& result, const NoiseModel& noise,
                           const std::optional<UGrid>& grid);

struct ReplicationRecord {
    std::size_t rep = 0;
    std::string method;
    std::string status;  // solver status, or "error"
    bool converged = false;
    Eigen::VectorXd theta;
    int iterations = 0;
    double objective = 0.0;
    std::string error;
};

struct MethodSummary {
    std::string method;
    std::size_t successes = 0;
    std::size_t failures = 0;
    Eigen::VectorXd mean_theta;
    Eigen::VectorXd bias;     // mean θ̂ − θ*
    Eigen::VectorXd bias_se;  // Monte Carlo standard error of the mean
    std::optional<Eigen::MatrixXd> empirical_cov;  // N·Cov(θ̂); undefined for one replication
    Eigen::MatrixXd theoretical_cov;               // Σ_θθ or μ⁻¹M̂*⁻¹
    Eigen::VectorXd diag_ratio;                    // empirical / theoretical diagonals
    double efficiency_score = 0.0;
};

struct StudyReport {
    StudyConfig config;
    std::vector<ReplicationRecord> records;  // every replication, in index order
    std::vector<MethodSummary> methods;
    Eigen::MatrixXd m_star;  // mean over replications of M̂(θ*)
    std::optional<Eigen::VectorXd> efficiency_ratio;  // diag Cov_ECF / diag Cov_ML

    [[nodiscard]] const MethodSummary* find(const std::string& method) const;
    [[nodiscard]] json to_json() const;
};

/// Simulates independent replications (seed streams derive_seed(seed, rep)),
/// estimates each with the configured method(s) and compares N·Cov(θ̂) with
/// the theoretical covariance at the replication-averaged M̂(θ*). Throws
/// StudyFailure when more than 20% of the replications of a method fail.
[[nodiscard]] StudyReport run_mc_study(const StudyConfig& cfg);

/// estimates.csv and report.json under `dir`.
void write_study_outputs(const StudyReport& report, const std::filesystem::path& dir);

struct EfficiencyCurveRow {
    std::size_t m = 0;
    double value = 0.0;  // φ*C⁻¹φ
    double mu = 0.0;
    bool ridge_applied = false;
};

/// Efficiency bound along a nested grid family; writes `M,efficiency,mu,ridge_applied`
/// to `out` when a path is given.
[[nodiscard]] std::vector<EfficiencyCurveRow> run_efficiency_curve(
    const NoiseModel& noise, std::span<const UGrid> grids,
    const std::optional<std::filesystem::path>& out = std::nullopt);

/// i.i.d. ECF fit of the shape parameter of `family` to residuals, minimizing
/// Σ_k |(1/N)Σ_n e^{iu_kε_n} − φ(u_k)|² over the grid.
[[nodiscard]] double fit_noise_shape(std::span<const double> residuals, NoiseFamily family,
                                     const UGrid& grid = UGrid({0.5, 1.0, 1.5, 2.0}));

struct ArmSummary {
    std::string name;
    NoiseModel noise_true = NoiseModel::gaussian();
    NoiseModel noise_assumed = NoiseModel::gaussian();
    std::size_t successes = 0;
    std::vector<std::string> failures;  // "rep <i> stage <k>: message"
    std::vector<Eigen::VectorXd> estimates;
    std::vector<double> shapes;  // stage-2 shape estimates, when fitted
    Eigen::VectorXd mean_bias;
    Eigen::VectorXd bias_se;
    Eigen::VectorXd t_stat;
    bool biased = false;  // |t| > 3 on some coordinate
};

struct ThreeStageReport {
    StudyConfig config;
    std::vector<ArmSummary> arms;  // "misspecified", then "control"

    [[nodiscard]] json to_json() const;
};

/// Stage 1 Gaussian QML, stage 2 shape fit on the stage-1 residuals (skipped
/// for shape-free families), stage 3 ECF with the fitted noise. The
/// misspecified arm draws data from noise_true; the control arm draws from
/// noise_assumed, so the assumed family is correct there.
[[nodiscard]] ThreeStageReport run_three_stage_experiment(const StudyConfig& cfg);

/// −Re(Ĝ*K⁻¹Ĝ)⁻¹ Re(Ĝ*K⁻¹h̄(θ*)) with Ĝ the score Jacobian at θ*: the
/// first-order term of θ̂ − θ*.
[[nodiscard]] Eigen::VectorXd linear_error_term(const GarchParams& truth, std::span<const double> y,
                                                const UGrid& grid, const NoiseModel& noise,
                                                const WeightMatrix& k,
                                                std::size_t transient = kDefaultTransient);

struct StabilitySummary {
    double rho_q2 = 0.0;
    double rho_q4 = 0.0;
    LyapunovFit lambda2;
    bool coprime = false;

    [[nodiscard]] json to_json() const;
};

[[nodiscard]] StabilitySummary stability_summary(const GarchParams& params, const NoiseModel& noise,
                                                 std::size_t n_max, std::size_t reps,
                                                 std::int64_t seed);

}  // namespace garch_ecf
