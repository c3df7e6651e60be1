#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sllg {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a cell has non-positive measure during assembly.
class AssemblyError : public std::runtime_error {
public:
    AssemblyError(std::size_t cell, const std::string& what)
        : std::runtime_error(what), cell_(cell) {}
    [[nodiscard]] std::size_t cell() const noexcept { return cell_; }

private:
    std::size_t cell_;
};

/// A nodal value could not be normalized or interpolated (zero or non-finite).
class NodalError : public std::runtime_error {
public:
    NodalError(std::size_t node, const std::string& what)
        : std::runtime_error(what), node_(node) {}
    [[nodiscard]] std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// Evaluation points or time indices of two objects do not line up.
class MismatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Step size too large for the stability regime of the chosen θ.
class GuardViolation : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Configuration problem. Parse errors carry a 1-based line/column, range
/// errors carry the offending field name.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::string field, int line = 0, int column = 0)
        : std::runtime_error(what), field_(std::move(field)), line_(line), column_(column) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }
    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }

private:
    std::string field_;
    int line_;
    int column_;
};

}  // namespace sllg
