#pragma once

#include <stdexcept>
#include <string>

namespace posauction {

// Shapes or sizes of inputs do not agree (bids vs. positions, etc.).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input lies outside the domain an operation is defined on.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Adaptive quadrature hit its depth limit before meeting the tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed experiment configuration or file artifact.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace posauction
