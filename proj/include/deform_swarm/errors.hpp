#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace deform_swarm {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DiagnosticKind {
    PartitionOverlap,
    PartitionIncomplete,
    UnknownAgent,
    CoreNotSingleton,
    CoreNotAtOrigin,
    MissingReference,
    LayerMismatch,
    NeighborOutOfOrder,
    EmptyNeighborSet,
    InfeasibleBounds,
    InvalidBounds,
    NonPositiveParameter,
};

const char* to_string(DiagnosticKind kind);

struct Diagnostic {
    DiagnosticKind kind;
    std::string message;
};

// Raised by validate_config; carries every violated invariant, not just the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Diagnostic> diagnostics);

    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
    bool has(DiagnosticKind kind) const;

private:
    std::vector<Diagnostic> diagnostics_;
};

class WeightSumViolation : public Error {
public:
    WeightSumViolation(int follower, double sum);
    int follower() const { return follower_; }
    double sum() const { return sum_; }

private:
    int follower_;
    double sum_;
};

class EmptyLayer : public Error {
public:
    EmptyLayer() : Error("last layer is empty") {}
};

class InfeasibleBounds : public Error {
public:
    InfeasibleBounds(std::size_t n, double lo, double hi);
};

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(int epoch, double value);
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

class NeverFeasible : public Error {
public:
    explicit NeverFeasible(double margin, double threshold);
};

class InvalidStep : public Error {
public:
    explicit InvalidStep(double step);
};

class EmptyLog : public Error {
public:
    EmptyLog() : Error("trajectory log is empty") {}
};

class NonFiniteState : public Error {
public:
    NonFiniteState(int agent, double time);
    int agent() const { return agent_; }
    double time() const { return time_; }

private:
    int agent_;
    double time_;
};

class ParseError : public Error {
public:
    ParseError(std::string source, int line, int column, const std::string& what);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace deform_swarm
