#ifndef SOLARPMU_ERRORS_HPP
#define SOLARPMU_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace solarpmu {

/// Non-finite or out-of-domain numeric input.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed file or schema violation.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (e.g. windows normalized with foreign statistics).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid scenario or analysis configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Aligned data does not cover the interval an operation needs.
class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An output could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace solarpmu

#endif  // SOLARPMU_ERRORS_HPP
