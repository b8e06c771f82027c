#include "garch_ecf/errors.hpp"
#include "garch_ecf/harness.hpp"
#include "garch_ecf/random.hpp"
#include "garch_ecf/series_io.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

using namespace garch_ecf;

namespace {

const GarchParams kTruth(0.1, {0.2}, {0.7});

json base_config() {
    return json::parse(R"({
        "model": {"alpha0": 0.1, "alpha": [0.2], "beta": [0.7]},
        "noise_true": {"family": "gaussian"},
        "N": 2000, "replications": 4, "seed": 11,
        "grid": {"step": 0.5, "count": 4},
        "method": "ecf"
    })");
}

std::filesystem::path scratch_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("garch_ecf_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("study config parsing") {
    const StudyConfig cfg = study_config_from_json(base_config());
    CHECK(cfg.n == 2000);
    CHECK(cfg.replications == 4);
    CHECK(cfg.grid.size() == 4);
    CHECK(cfg.grid.points().back() == doctest::Approx(2.0));
    CHECK(cfg.method == StudyMethod::Ecf);
    CHECK(cfg.noise_assumed.family() == cfg.noise_true.family());
    CHECK(cfg.model.to_vector() == kTruth.to_vector());

    json vg = base_config();
    vg["noise_true"] = {{"family", "variance_gamma"}, {"nu", 0.5}};
    vg["noise_assumed"] = {{"family", "gaussian"}};
    vg["grid"] = {0.25, 0.5, 1.0};
    const StudyConfig c2 = study_config_from_json(vg);
    CHECK(c2.noise_true.family() == NoiseFamily::VarianceGamma);
    CHECK(c2.noise_assumed.family() == NoiseFamily::Gaussian);
    CHECK(c2.grid.size() == 3);

    const StudyConfig back = study_config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("study config errors") {
    const auto rejected = [](const std::function<void(json&)>& edit) {
        json j = base_config();
        edit(j);
        CHECK_THROWS_AS((void)study_config_from_json(j), ConfigError);
    };
    rejected([](json& j) { j["N"] = 100; });
    rejected([](json& j) { j["replications"] = 0; });
    rejected([](json& j) { j["method"] = "bayes"; });
    rejected([](json& j) { j["seed"] = -3; });
    rejected([](json& j) { j.erase("model"); });
    rejected([](json& j) { j["model"]["beta"] = {0.9}; });
    rejected([](json& j) { j["noise_true"] = {{"family", "cauchy"}}; });
    rejected([](json& j) { j["noise_true"] = {{"family", "variance_gamma"}, {"nu", -1.0}}; });
    rejected([](json& j) { j["grid"] = {1.0, 0.5}; });
    rejected([](json& j) { j["estimator"] = {{"weighting", "magic"}}; });
    CHECK_THROWS_AS((void)load_json("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("series CSV round trip is lossless") {
    const std::filesystem::path dir = scratch_dir("csv");
    const SimulatedPath path = simulate(kTruth, NoiseModel::gaussian(), 800, kDefaultBurnIn, 5);
    write_series_csv(dir / "a.csv", path.y, &path.sigma2);
    const SeriesData back = read_series_csv(dir / "a.csv");
    CHECK(back.y == path.y);
    REQUIRE(back.sigma2_true.has_value());
    CHECK(*back.sigma2_true == path.sigma2);

    write_series_csv(dir / "b.csv", path.y);
    CHECK_FALSE(read_series_csv(dir / "b.csv").sigma2_true.has_value());
    CHECK_THROWS_AS((void)read_series_csv(dir / "missing.csv"), IoError);
    std::ofstream(dir / "bad.csv") << "n,y\n0,0.5\n1,abc\n";
    CHECK_THROWS_AS((void)read_series_csv(dir / "bad.csv"), IoError);
}

TEST_CASE("same seed gives byte-identical series files") {
    const std::filesystem::path dir = scratch_dir("bytes");
    for (const char* name : {"x.csv", "y.csv"}) {
        const SimulatedPath path = simulate(kTruth, NoiseModel::variance_gamma(0.5), 1000, kDefaultBurnIn, 9);
        write_series_csv(dir / name, path.y, &path.sigma2);
    }
    CHECK(slurp(dir / "x.csv") == slurp(dir / "y.csv"));
}

TEST_CASE("a single replication leaves the covariance undefined") {
    json j = base_config();
    j["replications"] = 1;
    const StudyReport report = run_mc_study(study_config_from_json(j));
    REQUIRE(report.records.size() == 1);
    const MethodSummary* ecf = report.find("ecf");
    REQUIRE(ecf != nullptr);
    CHECK_FALSE(ecf->empirical_cov.has_value());
    const json out = report.to_json();
    CHECK(out.dump().find("\"covariance_defined\":false") != std::string::npos);
}

TEST_CASE("studies are deterministic regardless of worker count") {
    json j = base_config();
    j["method"] = "both";
    StudyConfig cfg = study_config_from_json(j);
    const StudyReport a = run_mc_study(cfg);
    cfg.workers = 3;
    const StudyReport b = run_mc_study(cfg);
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(a.records.size() == 8);
    REQUIRE(a.efficiency_ratio.has_value());
    CHECK(a.find("ml") != nullptr);

    const std::filesystem::path d1 = scratch_dir("study1"), d2 = scratch_dir("study2");
    write_study_outputs(a, d1);
    write_study_outputs(b, d2);
    CHECK(slurp(d1 / "estimates.csv") == slurp(d2 / "estimates.csv"));
    CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
    const std::string csv = slurp(d1 / "estimates.csv");
    CHECK(csv.rfind("rep,method,converged,alpha0,alpha1,beta1,iterations,objective,status\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}

TEST_CASE("replication seed streams are distinct and uncorrelated") {
    std::set<std::int64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const std::int64_t s = derive_seed(42, i);
        CHECK(s >= 0);
        seeds.insert(s);
    }
    CHECK(seeds.size() == 1000);
    CHECK(derive_seed(42, 3) != derive_seed(43, 3));

    json j = base_config();
    j["method"] = "ml";
    j["N"] = 1000;
    j["replications"] = 60;
    const StudyReport report = run_mc_study(study_config_from_json(j));
    // Lag-one correlation of consecutive replication errors, per coordinate.
    std::vector<Eigen::VectorXd> err;
    for (const ReplicationRecord& r : report.records)
        if (r.converged) err.push_back(r.theta - kTruth.to_vector());
    REQUIRE(err.size() > 50);
    const double bound = 3.0 / std::sqrt(static_cast<double>(err.size()));
    for (Eigen::Index c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (const auto& e : err) mean += e(c);
        mean /= static_cast<double>(err.size());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < err.size(); ++i) {
            den += (err[i](c) - mean) * (err[i](c) - mean);
            if (i > 0) num += (err[i](c) - mean) * (err[i - 1](c) - mean);
        }
        CHECK(std::abs(num / den) < bound);
    }
}

TEST_CASE("efficiency curve output") {
    const std::filesystem::path dir = scratch_dir("curve");
    const std::vector<UGrid> family{UGrid({1.0}), UGrid::uniform(0.5, 4), UGrid::uniform(0.5, 8)};
    const auto rows = run_efficiency_curve(NoiseModel::gaussian(), family, dir / "curve.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].value == doctest::Approx(0.581976706869326424).epsilon(1e-9));
    CHECK(rows[1].value == doctest::Approx(1.6024004945543).epsilon(1e-9));
    CHECK(rows[2].value == doctest::Approx(1.8337412510165).epsilon(1e-9));
    CHECK(rows[0].mu == doctest::Approx(2.0).epsilon(1e-8));
    const std::string csv = slurp(dir / "curve.csv");
    CHECK(csv.rfind("M,efficiency,mu,ridge_applied\n1,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("i.i.d. shape fit recovers ν from true-model residuals") {
    const NoiseModel vg = NoiseModel::variance_gamma(0.5);
    const SimulatedPath path = simulate(kTruth, vg, 50000, kDefaultBurnIn, 61);
    const std::vector<double> eps = residuals(kTruth, path.y);
    const double nu = fit_noise_shape(std::span(eps).subspan(kDefaultTransient), NoiseFamily::VarianceGamma);
    CHECK(std::abs(nu - 0.5) < 0.1);
    CHECK_THROWS_AS((void)fit_noise_shape(eps, NoiseFamily::Gaussian), std::invalid_argument);
}

TEST_CASE("stability summary") {
    const StabilitySummary s = stability_summary(kTruth, NoiseModel::gaussian(), 200, 200, 3);
    CHECK(s.rho_q2 == doctest::Approx(0.89).epsilon(1e-10));
    CHECK(s.lambda2.slope < 0.0);
    CHECK(s.coprime);
    CHECK(s.to_json().contains("rho_q4"));
}
