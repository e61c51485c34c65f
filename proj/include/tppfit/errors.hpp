#pragma once

#include <stdexcept>
#include <string>

namespace tppfit {

// Bad numeric input (nonpositive size, out-of-bounds parameter, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class OverflowError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

class UnsupportedVariantError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidGridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmptyTrainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotSingleRayError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonSymmetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InfeasibleDesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientGridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmptySplitError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class PoolTooLargeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// CSV problems; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace tppfit
