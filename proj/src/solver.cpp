#include "garch_ecf/solver.hpp"

#include "garch_ecf/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace garch_ecf {

Eigen::VectorXd FeasibleSet::project(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd out = theta.cwiseMax(lower);
    const Eigen::Index k = out.size() - 1;
    if (k <= 0 || out.tail(k).sum() <= persistence_cap) return out;

    // Euclidean projection of the tail onto {x ≥ lower, Σx ≤ cap}:
    // x_i = max(θ_i − τ, lower) with τ chosen by bisection.
    const Eigen::VectorXd tail = theta.tail(k);
    auto mass = [&](double tau) { return (tail.array() - tau).cwiseMax(lower).sum(); };
    double lo = 0.0;
    double hi = tail.maxCoeff() - lower;
    for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) > persistence_cap ? lo : hi) = mid;
    }
    out.tail(k) = (tail.array() - hi).cwiseMax(lower);
    return out;
}

bool FeasibleSet::on_boundary(const Eigen::VectorXd& theta) const {
    const double floor_band = lower * (1.0 + 1e-6) + 1e-14;
    if ((theta.array() <= floor_band).any()) return true;
    const Eigen::Index k = theta.size() - 1;
    return k > 0 && theta.tail(k).sum() >= persistence_cap - 1e-12;
}

std::string to_string(SolverStatus status) {
    switch (status) {
        case SolverStatus::Converged:
            return "converged";
        case SolverStatus::NoConvergence:
            return "no_convergence";
        case SolverStatus::BoundaryStall:
            return "boundary_stall";
    }
    return "unknown";
}

namespace {

template <class F>
bool evaluate_trial(F&& f) {
    try {
        f();
        return true;
    } catch (const NonPositiveVolatility&) {
    } catch (const NonStationary&) {
    } catch (const SingularMatrix&) {
    }
    return false;
}

}  // namespace

SolverResult minimize_projected(const ModelFunction& model, Eigen::VectorXd start,
                                const FeasibleSet& feasible, const SolverOptions& options,
                                const ValueFunction& value) {
    SolverResult result;
    result.theta = feasible.project(start);
    if (!evaluate_trial([&] { result.model = model(result.theta); })) {
        // Unusable starting point: report it as a failed run.
        result.model.value = std::numeric_limits<double>::infinity();
        result.trace.push_back({options.stage, 0, result.model.value, result.model.value, 0.0});
        return result;
    }
    const Eigen::Index p = result.theta.size();
    Eigen::MatrixXd secant = Eigen::MatrixXd::Zero(p, p);
    double damping = 1e-3;

    auto stationarity = [&](const Eigen::VectorXd& theta, const LocalModel& m) {
        const Eigen::VectorXd moved = feasible.project(theta - m.gradient);
        return options.gradient_scale * (theta - moved).cwiseAbs().maxCoeff();
    };
    auto finish = [&](double stat) {
        if (stat >= options.grad_tol) return SolverStatus::NoConvergence;
        return feasible.on_boundary(result.theta) ? SolverStatus::BoundaryStall : SolverStatus::Converged;
    };

    for (int it = 0;; ++it) {
        const double stat = stationarity(result.theta, result.model);
        result.trace.push_back({options.stage, it, result.model.value, stat, damping});
        result.iterations = it;
        if (stat < options.grad_tol) {
            result.status = finish(stat);
            return result;
        }
        if (it >= options.max_iter) break;

        const Eigen::MatrixXd& b = result.model.curvature;
        const Eigen::VectorXd diag = b.diagonal().cwiseMax(1e-12 * std::max(1.0, b.diagonal().maxCoeff()));
        bool accepted = false;
        while (damping < 1e14) {
            Eigen::MatrixXd system = b + secant;
            system.diagonal() += damping * diag;
            Eigen::LLT<Eigen::MatrixXd> llt(system);
            if (llt.info() != Eigen::Success) {
                // The secant correction made the model indefinite; drop it.
                if (!secant.isZero(0.0)) {
                    secant.setZero();
                    continue;
                }
                damping *= 10.0;
                continue;
            }
            const Eigen::VectorXd step = llt.solve(-result.model.gradient);
            const Eigen::VectorXd trial = feasible.project(result.theta + step);
            if (!step.allFinite() ||
                (trial - result.theta).norm() <= 1e-15 * (1.0 + result.theta.norm())) {
                damping *= 10.0;
                continue;
            }
            double trial_value = 0.0;
            LocalModel trial_model;
            const bool has_model = !value;
            if (!evaluate_trial([&] {
                    if (value) trial_value = value(trial);
                    else {
                        trial_model = model(trial);
                        trial_value = trial_model.value;
                    }
                })) {
                damping *= 10.0;
                continue;
            }
            if (!(std::isfinite(trial_value) && trial_value < result.model.value)) {
                damping *= 5.0;
                continue;
            }
            if (!has_model && !evaluate_trial([&] { trial_model = model(trial); })) {
                damping *= 10.0;
                continue;
            }

            // Structured SR1: make B(θ⁺) + S reproduce the observed gradient change.
            const Eigen::VectorXd s = trial - result.theta;
            const Eigen::VectorXd resid =
                trial_model.gradient - result.model.gradient - (trial_model.curvature + secant) * s;
            const double denom = resid.dot(s);
            if (std::abs(denom) > 1e-8 * resid.norm() * s.norm() && resid.allFinite())
                secant += resid * resid.transpose() / denom;

            result.theta = trial;
            result.model = std::move(trial_model);
            damping = std::max(damping / 5.0, 1e-12);
            accepted = true;
            break;
        }
        if (!accepted) {
            // No descent available at machine precision; accept a point that is
            // stationary to a looser tolerance rather than reporting failure.
            const double stat_now = stationarity(result.theta, result.model);
            result.trace.push_back({options.stage, it + 1, result.model.value, stat_now, damping});
            result.iterations = it + 1;
            result.status = stat_now < 1e3 * options.grad_tol ? finish(0.0) : SolverStatus::NoConvergence;
            return result;
        }
    }
    result.status = SolverStatus::NoConvergence;
    return result;
}

MultistartSummary summarize_multistart(const std::vector<SolverResult>& runs) {
    if (runs.empty()) throw std::invalid_argument("no solver runs to summarize");
    MultistartSummary out;
    auto key = [](const SolverResult& r) {
        return std::make_pair(r.status == SolverStatus::NoConvergence ? 1 : 0, r.model.value);
    };
    for (std::size_t i = 0; i < runs.size(); ++i) {
        out.total_iterations += runs[i].iterations;
        if (key(runs[i]) < key(runs[out.best])) out.best = i;
    }
    std::vector<Eigen::VectorXd> reps;
    for (const SolverResult& r : runs) {
        if (r.status == SolverStatus::NoConvergence) continue;
        const bool seen = std::any_of(reps.begin(), reps.end(), [&](const Eigen::VectorXd& t) {
            return (r.theta - t).cwiseAbs().maxCoeff() <= 1e-3 * std::max(1e-2, t.cwiseAbs().maxCoeff());
        });
        if (!seen) reps.push_back(r.theta);
    }
    out.distinct = reps.size();
    return out;
}

std::vector<Eigen::VectorXd> initial_guesses(const std::vector<double>& y, std::size_t r,
                                             std::size_t s, std::size_t count) {
    if (y.size() < 2) throw std::invalid_argument("need at least two observations");
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size() - 1);
    if (!(var > 0.0)) var = 1.0;

    constexpr std::array<std::pair<double, double>, 5> kStarts{
        {{0.1, 0.8}, {0.05, 0.9}, {0.2, 0.6}, {0.15, 0.75}, {0.3, 0.4}}};
    const std::size_t p = 1 + r + s;
    std::vector<Eigen::VectorXd> out;
    for (std::size_t i = 0; i < count; ++i) {
        const auto [a1, b1] = kStarts[i % kStarts.size()];
        // Beyond the fixed list, shrink the persistence slightly per cycle.
        const double shrink = std::pow(0.9, static_cast<double>(i / kStarts.size()));
        Eigen::VectorXd theta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), 0.01);
        theta(1) = a1 * shrink;
        if (s > 0) theta(static_cast<Eigen::Index>(1 + r)) = b1 * shrink;
        double persistence = theta.tail(static_cast<Eigen::Index>(p - 1)).sum();
        if (persistence >= 0.99) {
            theta.tail(static_cast<Eigen::Index>(p - 1)) *= 0.95 / persistence;
            persistence = 0.95;
        }
        theta(0) = var * (1.0 - persistence);
        out.push_back(std::move(theta));
    }
    return out;
}

}  // namespace garch_ecf
