#include "garch_ecf/config.hpp"

#include "garch_ecf/errors.hpp"

#include <fstream>

namespace garch_ecf {

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

// Runs `f`, translating parse and validation failures into ConfigError.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid ") + what + ": " + e.what());
    }
}

}  // namespace

std::string to_string(StudyMethod method) {
    switch (method) {
        case StudyMethod::Ecf:
            return "ecf";
        case StudyMethod::Ml:
            return "ml";
        case StudyMethod::Both:
            return "both";
    }
    return "unknown";
}

NoiseModel noise_from_json(const json& j) {
    return guarded("noise", [&] {
        const std::string family = j.at("family").get<std::string>();
        if (family == "gaussian") return NoiseModel::gaussian();
        if (family == "variance_gamma" || family == "vg")
            return NoiseModel::variance_gamma(j.at("nu").get<double>());
        throw ConfigError("unknown noise family '" + family + "'");
    });
}

json to_json(const NoiseModel& noise) {
    if (noise.family() == NoiseFamily::Gaussian) return {{"family", "gaussian"}};
    return {{"family", "variance_gamma"}, {"nu", noise.shape()}};
}

GarchParams params_from_json(const json& j) {
    return guarded("model", [&] {
        return GarchParams(j.at("alpha0").get<double>(), j.at("alpha").get<std::vector<double>>(),
                           get_or(j, "beta", std::vector<double>{}));
    });
}

json to_json(const GarchParams& params) {
    return {{"alpha0", params.alpha0()},
            {"alpha", std::vector<double>(params.alpha().begin(), params.alpha().end())},
            {"beta", std::vector<double>(params.beta().begin(), params.beta().end())}};
}

UGrid grid_from_json(const json& j) {
    return guarded("grid", [&] {
        if (j.is_array()) return UGrid(j.get<std::vector<double>>());
        return UGrid::uniform(j.at("step").get<double>(), j.at("count").get<std::size_t>());
    });
}

json to_json(const UGrid& grid) { return grid.points(); }

std::vector<UGrid> grid_family_from_json(const json& j) {
    return guarded("grid family", [&] {
        std::vector<UGrid> out;
        if (j.is_array()) {
            for (const json& g : j) out.push_back(grid_from_json(g));
        } else {
            const double step = j.at("step").get<double>();
            for (std::size_t m : j.at("counts").get<std::vector<std::size_t>>())
                out.push_back(UGrid::uniform(step, m));
        }
        if (out.empty()) throw ConfigError("grid family is empty");
        return out;
    });
}

EcfOptions ecf_options_from_json(const json& estimator, std::size_t r, std::size_t s) {
    return guarded("estimator options", [&] {
        EcfOptions o;
        o.r = r;
        o.s = s;
        const std::string weighting = get_or<std::string>(estimator, "weighting", "optimal");
        if (weighting == "optimal") {
            o.weighting = Weighting::Optimal;
        } else if (weighting == "identity") {
            o.weighting = Weighting::Identity;
        } else {
            throw ConfigError("unknown weighting '" + weighting + "'");
        }
        o.grad_tol = get_or(estimator, "grad_tol", o.grad_tol);
        o.max_iter = get_or(estimator, "max_iter", o.max_iter);
        o.ridge = get_or(estimator, "ridge", o.ridge);
        o.multistart = get_or(estimator, "multistart", o.multistart);
        o.transient = get_or(estimator, "transient", o.transient);
        if (o.ridge < 0.0) throw ConfigError("ridge must be nonnegative");
        if (!(o.grad_tol > 0.0) || o.max_iter < 1) throw ConfigError("solver tolerances must be positive");
        return o;
    });
}

MlOptions ml_options_from_json(const json& estimator, std::size_t r, std::size_t s) {
    return guarded("estimator options", [&] {
        MlOptions o;
        o.r = r;
        o.s = s;
        o.grad_tol = get_or(estimator, "grad_tol", o.grad_tol);
        o.max_iter = get_or(estimator, "max_iter", o.max_iter);
        o.multistart = get_or(estimator, "multistart", o.multistart);
        o.transient = get_or(estimator, "transient", o.transient);
        if (!(o.grad_tol > 0.0) || o.max_iter < 1) throw ConfigError("solver tolerances must be positive");
        return o;
    });
}

std::pair<std::size_t, std::size_t> orders_from_json(const json& j) {
    return guarded("model order", [&] {
        if (j.contains("order"))
            return std::make_pair(j.at("order").at("r").get<std::size_t>(),
                                  get_or<std::size_t>(j.at("order"), "s", 0));
        if (j.contains("model")) {
            const GarchParams p = params_from_json(j.at("model"));
            return std::make_pair(p.r(), p.s());
        }
        return std::make_pair<std::size_t, std::size_t>(1, 1);
    });
}

StudyConfig study_config_from_json(const json& j) {
    return guarded("study config", [&] {
        StudyConfig cfg;
        cfg.model = params_from_json(j.at("model"));
        if (!cfg.model.is_stationary()) throw ConfigError("model must satisfy Σα + Σβ < 1");
        cfg.noise_true = noise_from_json(j.at("noise_true"));
        cfg.noise_assumed = j.contains("noise_assumed") ? noise_from_json(j.at("noise_assumed")) : cfg.noise_true;
        cfg.n = j.at("N").get<std::size_t>();
        cfg.replications = get_or<std::size_t>(j, "replications", 1);
        if (cfg.n < 500) throw ConfigError("N must be at least 500");
        if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
        if (j.contains("grid")) cfg.grid = grid_from_json(j.at("grid"));
        const std::string method = get_or<std::string>(j, "method", "ecf");
        if (method == "ecf") {
            cfg.method = StudyMethod::Ecf;
        } else if (method == "ml") {
            cfg.method = StudyMethod::Ml;
        } else if (method == "both") {
            cfg.method = StudyMethod::Both;
        } else {
            throw ConfigError("unknown method '" + method + "'");
        }
        cfg.seed = get_or<std::int64_t>(j, "seed", 0);
        if (cfg.seed < 0) throw ConfigError("seed must be nonnegative");
        cfg.output_dir = get_or<std::string>(j, "output_dir", ".");
        cfg.workers = std::max<std::size_t>(1, get_or<std::size_t>(j, "workers", 1));
        cfg.burn_in = get_or<std::size_t>(j, "burn_in", kDefaultBurnIn);
        const json est = get_or(j, "estimator", json::object());
        cfg.ecf = ecf_options_from_json(est, cfg.model.r(), cfg.model.s());
        cfg.ml = ml_options_from_json(est, cfg.model.r(), cfg.model.s());
        return cfg;
    });
}

json to_json(const StudyConfig& cfg) {
    return {{"model", to_json(cfg.model)},
            {"noise_true", to_json(cfg.noise_true)},
            {"noise_assumed", to_json(cfg.noise_assumed)},
            {"N", cfg.n},
            {"replications", cfg.replications},
            {"grid", to_json(cfg.grid)},
            {"method", to_string(cfg.method)},
            {"seed", cfg.seed},
            {"burn_in", cfg.burn_in},
            {"estimator",
             {{"weighting", cfg.ecf.weighting == Weighting::Optimal ? "optimal" : "identity"},
              {"grad_tol", cfg.ecf.grad_tol},
              {"max_iter", cfg.ecf.max_iter},
              {"ridge", cfg.ecf.ridge},
              {"multistart", cfg.ecf.multistart},
              {"transient", cfg.ecf.transient}}}};
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

}  // namespace garch_ecf
