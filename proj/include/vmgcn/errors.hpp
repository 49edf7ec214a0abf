#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace vmgcn {

// Base for every error raised by the library. `kind()` is a short stable
// token used by the CLI for machine-readable failures.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

class InvalidConfig : public Error {
public:
    explicit InvalidConfig(const std::string& what) : Error("invalid-config", what) {}
};

class Inconsistency : public Error {
public:
    explicit Inconsistency(const std::string& what) : Error("inconsistency", what) {}
};

class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& what) : Error("shape-mismatch", what) {}
};

class UndefinedMetric : public Error {
public:
    explicit UndefinedMetric(const std::string& what) : Error("undefined-metric", what) {}
};

class AlignmentError : public Error {
public:
    explicit AlignmentError(const std::string& what) : Error("alignment", what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::vector<std::size_t> lines)
        : Error("parse", what), lines_(std::move(lines)) {}
    const std::vector<std::size_t>& lines() const noexcept { return lines_; }

private:
    std::vector<std::size_t> lines_;
};

/// A cached artifact a command depends on is absent or stale.
class MissingArtifact : public Error {
public:
    explicit MissingArtifact(const std::string& what) : Error("missing-artifact", what) {}
};

/// Power iteration failed to settle; carries the last iterate for diagnosis.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double last_value, std::vector<double> last_vector)
        : Error("non-convergence", what), last_value_(last_value),
          last_vector_(std::move(last_vector)) {}
    double last_value() const noexcept { return last_value_; }
    const std::vector<double>& last_vector() const noexcept { return last_vector_; }

private:
    double last_value_;
    std::vector<double> last_vector_;
};

/// Loss became NaN/inf during a forward or backward pass.
class NonFiniteLoss : public Error {
public:
    explicit NonFiniteLoss(const std::string& what) : Error("non-finite-loss", what) {}
};

}  // namespace vmgcn
