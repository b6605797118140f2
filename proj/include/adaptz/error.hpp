#pragma once

#include <stdexcept>
#include <string>

namespace adaptz {

// Base of every error the library throws. The CLI maps UsageError and
// ConfigError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

// The fold-2 estimating equations have no unique solution.
class DegenerateDesignError : public Error {
public:
    using Error::Error;
};

// A weighted covariance built from the selection probabilities is not
// positive definite.
class DegenerateProbabilityError : public Error {
public:
    using Error::Error;
};

class RootBracketError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace adaptz
