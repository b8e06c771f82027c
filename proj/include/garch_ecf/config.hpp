#pragma once

#include "garch_ecf/ecf.hpp"
#include "garch_ecf/garch.hpp"
#include "garch_ecf/mle.hpp"
#include "garch_ecf/noise.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace garch_ecf {

using json = nlohmann::json;

enum class StudyMethod { Ecf, Ml, Both };

[[nodiscard]] std::string to_string(StudyMethod method);

/**
 * Monte Carlo study description. JSON layout:
 *
 *   {
 *     "model": {"alpha0": 0.1, "alpha": [0.2], "beta": [0.7]},
 *     "noise_true": {"family": "variance_gamma", "nu": 0.5},
 *     "noise_assumed": {"family": "gaussian"},        // optional
 *     "N": 40000, "replications": 500, "seed": 7,
 *     "grid": {"step": 0.5, "count": 8},              // or an explicit array
 *     "method": "ecf" | "ml" | "both",
 *     "output_dir": "out", "workers": 1, "burn_in": 1000,
 *     "estimator": {"weighting": "optimal", "grad_tol": 1e-8, "max_iter": 200,
 *                   "ridge": 1e-10, "multistart": 5, "transient": 100}
 *   }
 */
struct StudyConfig {
    GarchParams model{0.1, {0.2}, {0.7}};
    NoiseModel noise_true = NoiseModel::gaussian();
    NoiseModel noise_assumed = NoiseModel::gaussian();
    std::size_t n = 0;
    std::size_t replications = 1;
    UGrid grid = UGrid::default_grid();
    StudyMethod method = StudyMethod::Ecf;
    std::int64_t seed = 0;
    std::filesystem::path output_dir = ".";
    std::size_t workers = 1;
    std::size_t burn_in = kDefaultBurnIn;
    EcfOptions ecf{};
    MlOptions ml{};
};

[[nodiscard]] NoiseModel noise_from_json(const json& j);
[[nodiscard]] json to_json(const NoiseModel& noise);

[[nodiscard]] GarchParams params_from_json(const json& j);
[[nodiscard]] json to_json(const GarchParams& params);

/// Accepts an explicit point array or {"step": Δ, "count": M}.
[[nodiscard]] UGrid grid_from_json(const json& j);
[[nodiscard]] json to_json(const UGrid& grid);

/// Nested grid family: an array of grids, or {"step": Δ, "counts": [M₁, M₂, …]}.
[[nodiscard]] std::vector<UGrid> grid_family_from_json(const json& j);

/// Reads the optional "estimator" block; orders r and s are supplied by the caller.
[[nodiscard]] EcfOptions ecf_options_from_json(const json& estimator, std::size_t r, std::size_t s);
[[nodiscard]] MlOptions ml_options_from_json(const json& estimator, std::size_t r, std::size_t s);

/// Model orders from "order": {"r", "s"}, else from "model", else GARCH(1,1).
[[nodiscard]] std::pair<std::size_t, std::size_t> orders_from_json(const json& j);

/// Throws ConfigError on any missing or invalid field.
[[nodiscard]] StudyConfig study_config_from_json(const json& j);
[[nodiscard]] json to_json(const StudyConfig& cfg);

[[nodiscard]] json load_json(const std::filesystem::path& path);

}  // namespace garch_ecf
