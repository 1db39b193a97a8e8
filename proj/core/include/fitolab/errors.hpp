#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace fitolab {

/// Evaluation produced a non-finite value or entered a singular region.
/// Carries the (scenario, step) location when raised inside an ensemble sweep.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}

    NumericError(const std::string& what, std::size_t scenario, std::size_t step)
        : std::runtime_error(what + " [scenario " + std::to_string(scenario) +
                             ", step " + std::to_string(step) + "]"),
          scenario_(scenario),
          step_(step) {}

    std::optional<std::size_t> scenario() const { return scenario_; }
    std::optional<std::size_t> step() const { return step_; }

private:
    std::optional<std::size_t> scenario_;
    std::optional<std::size_t> step_;
};

/// Invalid experiment configuration (bad schema, unknown keys, unknown ids).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Artifact directory or file problem.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fitolab
