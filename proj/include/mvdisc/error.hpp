#pragma once

#include <stdexcept>
#include <string>

namespace mvdisc {

// Errors caused by user input (bad files, bad flags, inconsistent models).
// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
public:
    using InputError::InputError;
};

class ValidationError : public InputError {
public:
    using InputError::InputError;
};

class CycleError : public InputError {
public:
    using InputError::InputError;
};

// A continuous value that falls outside the bounds of the policy applied to it.
class RangeError : public InputError {
public:
    using InputError::InputError;
};

// A policy that cannot exist for the column (more thresholds than candidates).
class InfeasiblePolicyError : public InputError {
public:
    using InputError::InputError;
};

// Broken internal invariant. The CLI maps these to exit code 3.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mvdisc
