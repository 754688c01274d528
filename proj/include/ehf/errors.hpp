#pragma once

#include <stdexcept>
#include <string>

namespace ehf {

// Error classes map onto the CLI exit codes (see tools/ehf_cli.cpp).

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation needs state that was never produced
/// (e.g. backward without a recorded forward pass).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values during training or evaluation.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ehf
