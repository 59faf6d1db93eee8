#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nesslab {

/// Argument outside its documented range (grid size, negative time, ...).
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// A density vector left the model's declared validity window.
class DomainError : public std::runtime_error {
public:
    DomainError(const std::string& what, int component)
        : std::runtime_error(what), component_(component) {}
    int component() const { return component_; }

private:
    int component_;
};

/// Entropy Hessian singular or not negative definite at the probed point.
class PhaseWindowError : public std::runtime_error {
public:
    explicit PhaseWindowError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failed to converge; carries the residual history.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> residual_history)
        : std::runtime_error(what), history_(std::move(residual_history)) {}
    const std::vector<double>& residual_history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Model-level inconsistency (e.g. a noise block that is not PSD).
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace nesslab
