#pragma once

#include <stdexcept>
#include <string>

namespace garch_ecf {

// Σα + Σβ ≥ 1: the process has no finite stationary variance.
class NonStationary : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class NonPositiveVolatility : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The noise family has no implemented closed-form density.
class DensityUnavailable : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class MomentUnavailable : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double residual)
        : std::runtime_error(what + " (error estimate " + std::to_string(residual) + ")"),
          residual_(residual) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class SingularMatrix : public std::runtime_error {
public:
    SingularMatrix(const std::string& what, double condition)
        : std::runtime_error(what + " (condition number " + std::to_string(condition) + ")"),
          condition_(condition) {}
    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    double condition_;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A Monte Carlo study lost more replications than it tolerates.
class StudyFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace garch_ecf
