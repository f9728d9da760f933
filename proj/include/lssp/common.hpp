#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lssp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using StateId = int;
using ActionId = int;

/// Raised when array/matrix dimensions disagree with the model.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative procedure exhausted its iteration budget.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double last_residual, std::size_t iterations)
        : std::runtime_error(what), last_residual_(last_residual), iterations_(iterations) {}

    double last_residual() const noexcept { return last_residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    std::size_t iterations_;
};

/// A policy whose cost-to-go diverges (it does not reach the goal w.p. 1).
class ImproperPolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A size limit (distinct features, grid points) was exceeded.
class CapacityError : public std::runtime_error {
public:
    CapacityError(const std::string& what, double required)
        : std::runtime_error(what), required_(required) {}

    double required() const noexcept { return required_; }

private:
    double required_;
};

class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lssp
