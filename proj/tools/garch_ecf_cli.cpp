// Command-line front end: simulate, estimate, mc-study, efficiency-curve,
// three-stage, stability. Exit codes: 0 success, 2 configuration/usage
// error, 3 study-level failure, 1 anything else.

#include "garch_ecf/config.hpp"
#include "garch_ecf/ecf.hpp"
#include "garch_ecf/errors.hpp"
#include "garch_ecf/garch.hpp"
#include "garch_ecf/harness.hpp"
#include "garch_ecf/mle.hpp"
#include "garch_ecf/series_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace garch_ecf;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStudy = 3;

NoiseModel noise_in(const json& cfg) {
    for (const char* key : {"noise", "noise_assumed", "noise_true"})
        if (cfg.contains(key)) return noise_from_json(cfg.at(key));
    return NoiseModel::gaussian();
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

int cmd_simulate(const std::string& config, std::optional<std::size_t> n_override,
                 std::optional<std::int64_t> seed_override, const std::string& out) {
    const json cfg = load_json(config);
    const GarchParams params = cfg.contains("model") ? params_from_json(cfg.at("model"))
                                                     : throw ConfigError("config needs a 'model' block");
    const NoiseModel noise = cfg.contains("noise_true") ? noise_from_json(cfg.at("noise_true")) : noise_in(cfg);
    std::size_t n = n_override.value_or(cfg.value("N", cfg.value("n", std::size_t{0})));
    const std::int64_t seed = seed_override.value_or(cfg.value("seed", std::int64_t{0}));
    const std::size_t burn_in = cfg.value("burn_in", kDefaultBurnIn);
    if (n == 0) throw ConfigError("series length n must be positive");
    if (seed < 0) throw ConfigError("seed must be nonnegative");
    if (!params.is_stationary()) throw ConfigError("model must satisfy Σα + Σβ < 1");

    const SimulatedPath path = simulate(params, noise, n, burn_in, seed);
    write_series_csv(out, path.y, &path.sigma2);
    write_json(out + ".meta.json", {{"model", to_json(params)},
                                    {"noise", to_json(noise)},
                                    {"n", n},
                                    {"seed", seed},
                                    {"burn_in", burn_in},
                                    {"created", utc_timestamp()}});
    return 0;
}

int cmd_estimate(const std::string& method, const std::string& config, const std::string& data,
                 const std::string& out) {
    const json cfg = load_json(config);
    const NoiseModel noise = noise_in(cfg);
    const auto [r, s] = orders_from_json(cfg);
    const json est = cfg.value("estimator", json::object());
    const SeriesData series = read_series_csv(data);

    json result;
    if (method == "ecf") {
        const UGrid grid = cfg.contains("grid") ? grid_from_json(cfg.at("grid")) : UGrid::default_grid();
        result = to_json(estimate(series.y, noise, grid, ecf_options_from_json(est, r, s)), noise, grid);
    } else {
        result = to_json(ml_estimate(series.y, noise, ml_options_from_json(est, r, s)), noise, std::nullopt);
    }
    write_json(out, result);
    return 0;
}

int cmd_mc_study(const std::string& config, const std::string& out_dir, std::optional<std::size_t> workers) {
    StudyConfig cfg = study_config_from_json(load_json(config));
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (workers) cfg.workers = std::max<std::size_t>(1, *workers);
    const StudyReport report = run_mc_study(cfg);
    write_study_outputs(report, cfg.output_dir);
    for (const MethodSummary& m : report.methods) {
        std::cout << m.method << ": " << m.successes << " converged, " << m.failures << " failed";
        if (m.empirical_cov) std::cout << ", diag(N·Cov)/diag(theory) = " << m.diag_ratio.transpose();
        std::cout << '\n';
    }
    return 0;
}

int cmd_efficiency_curve(const std::string& config, const std::string& out) {
    json cfg = config.empty() ? json::object() : load_json(config);
    const NoiseModel noise = noise_in(cfg);
    const std::vector<UGrid> grids = cfg.contains("grid_family")
                                         ? grid_family_from_json(cfg.at("grid_family"))
                                         : grid_family_from_json({{"step", 0.25}, {"counts", {1, 2, 4, 8, 16, 24, 32, 40}}});
    for (const auto& row : run_efficiency_curve(noise, grids, out))
        std::cout << row.m << ' ' << row.value << ' ' << row.mu << '\n';
    return 0;
}

int cmd_three_stage(const std::string& config, const std::string& out, std::optional<std::size_t> workers) {
    StudyConfig cfg = study_config_from_json(load_json(config));
    if (workers) cfg.workers = std::max<std::size_t>(1, *workers);
    const ThreeStageReport report = run_three_stage_experiment(cfg);
    write_json(out, report.to_json());
    for (const ArmSummary& a : report.arms)
        std::cout << a.name << ": t = " << a.t_stat.transpose() << (a.biased ? "  (biased)" : "") << '\n';
    return 0;
}

int cmd_stability(const std::string& config, std::size_t n_max, std::size_t reps, std::int64_t seed) {
    const json cfg = load_json(config);
    if (!cfg.contains("model")) throw ConfigError("config needs a 'model' block");
    const GarchParams params = params_from_json(cfg.at("model"));
    std::cout << stability_summary(params, noise_in(cfg), n_max, reps, seed).to_json().dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECF and ML estimation for GARCH models driven by Lévy noise"};
    app.require_subcommand(1);

    std::string config, data, out, method = "ecf", out_dir;
    std::optional<std::size_t> n_override, workers;
    std::optional<std::int64_t> seed_override;
    std::size_t n_max = 400, reps = 2000;
    std::int64_t seed = 1;

    auto* sim = app.add_subcommand("simulate", "Simulate a GARCH path to CSV (with a .meta.json sidecar)");
    sim->add_option("--config", config, "JSON with model, noise_true, N, seed, burn_in")->required();
    sim->add_option("--n", n_override, "Override the series length");
    sim->add_option("--seed", seed_override, "Override the seed");
    sim->add_option("--out", out, "Output CSV path")->required();

    auto* est = app.add_subcommand("estimate", "Estimate θ from a series CSV");
    est->add_option("--method", method, "ecf or ml")->check(CLI::IsMember({"ecf", "ml"}));
    est->add_option("--config", config, "JSON with noise, grid, order, estimator")->required();
    est->add_option("--data", data, "Series CSV")->required();
    est->add_option("--out", out, "Result JSON path")->required();

    auto* mc = app.add_subcommand("mc-study", "Monte Carlo covariance study");
    mc->add_option("--config", config, "StudyConfig JSON")->required();
    mc->add_option("--out-dir", out_dir, "Override output_dir");
    mc->add_option("--workers", workers, "Worker threads");

    auto* eff = app.add_subcommand("efficiency-curve", "φ*C⁻¹φ along a nested grid family");
    eff->add_option("--config", config, "JSON with noise and grid_family");
    eff->add_option("--out", out, "Output CSV path")->required();

    auto* three = app.add_subcommand("three-stage", "Three-stage misspecification experiment");
    three->add_option("--config", config, "StudyConfig JSON")->required();
    three->add_option("--out", out, "Report JSON path")->required();
    three->add_option("--workers", workers, "Worker threads");

    auto* stab = app.add_subcommand("stability", "Moment-stability diagnostics");
    stab->add_option("--config", config, "JSON with model and noise")->required();
    stab->add_option("--n-max", n_max, "Product length for the Lyapunov fit");
    stab->add_option("--reps", reps, "Monte Carlo products");
    stab->add_option("--seed", seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(config, n_override, seed_override, out);
        if (*est) return cmd_estimate(method, config, data, out);
        if (*mc) return cmd_mc_study(config, out_dir, workers);
        if (*eff) return cmd_efficiency_curve(config, out);
        if (*three) return cmd_three_stage(config, out, workers);
        if (*stab) return cmd_stability(config, n_max, reps, seed);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const StudyFailure& e) {
        std::cerr << "study failed: " << e.what() << '\n';
        return kExitStudy;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
