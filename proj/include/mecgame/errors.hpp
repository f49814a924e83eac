#pragma once

#include <stdexcept>
#include <string>

namespace mecgame {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A queue would be saturated (utilization >= 1). `constraint` is "C3", "C4" or "C5".
class StabilityViolation : public Error {
public:
    StabilityViolation(std::string constraint, std::size_t index, double utilization)
        : Error("stability violation " + constraint + " at index " + std::to_string(index) +
                " (utilization " + std::to_string(utilization) + ")"),
          constraint_(std::move(constraint)), index_(index), utilization_(utilization) {}

    const std::string& constraint() const noexcept { return constraint_; }
    std::size_t index() const noexcept { return index_; }
    double utilization() const noexcept { return utilization_; }

private:
    std::string constraint_;
    std::size_t index_;
    double utilization_;
};

class InvalidScenario : public Error {
public:
    using Error::Error;
};

class InvalidOverride : public Error {
public:
    using Error::Error;
};

class InfeasibleSubproblem : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

class InfeasibleInitial : public Error {
public:
    using Error::Error;
};

class FollowerDiverged : public Error {
public:
    FollowerDiverged(const std::string& what, long iteration = -1)
        : Error(iteration >= 0 ? what + " (ISPA iteration " + std::to_string(iteration) + ")" : what),
          iteration_(iteration) {}

    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

}  // namespace mecgame
