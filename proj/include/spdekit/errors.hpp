#pragma once

#include <stdexcept>
#include <string>

namespace spdekit {

/// Bad input: scenario files, expression syntax, dimension mismatches.
/// CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Runtime numerical failure: blowup, Newton stagnation, singular Jacobian.
/// CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace spdekit
