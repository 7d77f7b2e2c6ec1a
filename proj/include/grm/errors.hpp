#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grm {

// Problem in an input file: malformed line, bad id, unresolvable name.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An iterative solver hit its iteration cap before reaching tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + " after "
                             + std::to_string(iterations) + " iterations)"),
          residual(residual),
          iterations(iterations) {}

    double residual;
    std::size_t iterations;
};

} // namespace grm
