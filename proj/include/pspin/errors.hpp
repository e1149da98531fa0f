#pragma once

#include <stdexcept>
#include <string>

namespace pspin {

// Requested size exceeds the configured memory budget.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input outside the domain an operation is defined on.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Argument has the wrong shape or violates a precondition.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An internal invariant broke at run time (e.g. the sphere constraint).
struct InvariantError : std::logic_error {
    using std::logic_error::logic_error;
};

struct SimulationDiverged : std::runtime_error {
    SimulationDiverged(const std::string& what, long step)
        : std::runtime_error(what), step(step) {}
    long step;
};

struct NotAGraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ControlBoundViolation : std::runtime_error {
    ControlBoundViolation(const std::string& what, double time)
        : std::runtime_error(what), time(time) {}
    double time;
};

struct OutsideWindowError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Optimization-based start searches report where they ended.
struct StartSearchError : std::runtime_error {
    StartSearchError(const std::string& what, double u, double v)
        : std::runtime_error(what), u(u), v(v) {}
    double u;
    double v;
};

struct NotConvergedError : StartSearchError {
    using StartSearchError::StartSearchError;
};

struct TargetRegionMiss : StartSearchError {
    using StartSearchError::StartSearchError;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pspin
