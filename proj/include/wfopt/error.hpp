#pragma once

#include <stdexcept>
#include <string>

namespace wfopt {

/// Bad input: malformed files, violated invariants, unknown names.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string &what) : std::runtime_error(what) {}
};

/// Malformed file contents (a ValidationError with a file context).
class ParseError : public ValidationError {
public:
    explicit ParseError(const std::string &what) : ValidationError(what) {}
};

/// The optimizer never visited a point that satisfies every hard constraint.
class NoFeasibleSolution : public std::runtime_error {
public:
    explicit NoFeasibleSolution(const std::string &what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string &message) {
    if (!ok) {
        throw ValidationError(message);
    }
}

} // namespace detail
} // namespace wfopt
