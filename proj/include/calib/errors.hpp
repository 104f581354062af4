#pragma once

/**
 * @file errors.hpp
 * @brief Exception types shared by every module.
 */

#include <stdexcept>
#include <string>

namespace calib {

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Invalid configuration (scheme, ladder, experiment settings).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values or non-convergent numerics.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A competitor whose graph leaves the foliated region.
struct AdmissibilityError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A field or profile failing a sampled structural check.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace calib
