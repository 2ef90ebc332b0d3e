#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dfscsn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Bad user input: malformed files, inconsistent shapes, out-of-range knobs.
/// Mapped to exit code 3 by the CLI.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical breakdown inside a computation (non-SPD matrix, failed
/// eigensolve, diverged chain). Mapped to exit code 4 by the CLI.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dfscsn
