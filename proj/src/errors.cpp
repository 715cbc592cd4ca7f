#include "deform_swarm/errors.hpp"

#include <algorithm>
#include <sstream>

namespace deform_swarm {

const char* to_string(DiagnosticKind kind)
{
    switch (kind) {
    case DiagnosticKind::PartitionOverlap: return "PartitionOverlap";
    case DiagnosticKind::PartitionIncomplete: return "PartitionIncomplete";
    case DiagnosticKind::UnknownAgent: return "UnknownAgent";
    case DiagnosticKind::CoreNotSingleton: return "CoreNotSingleton";
    case DiagnosticKind::CoreNotAtOrigin: return "CoreNotAtOrigin";
    case DiagnosticKind::MissingReference: return "MissingReference";
    case DiagnosticKind::LayerMismatch: return "LayerMismatch";
    case DiagnosticKind::NeighborOutOfOrder: return "NeighborOutOfOrder";
    case DiagnosticKind::EmptyNeighborSet: return "EmptyNeighborSet";
    case DiagnosticKind::InfeasibleBounds: return "InfeasibleBounds";
    case DiagnosticKind::InvalidBounds: return "InvalidBounds";
    case DiagnosticKind::NonPositiveParameter: return "NonPositiveParameter";
    }
    return "Unknown";
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics)
{
    std::ostringstream out;
    out << "invalid team configuration (" << diagnostics.size() << " issue"
        << (diagnostics.size() == 1 ? "" : "s") << ")";
    for (const auto& d : diagnostics)
        out << "\n  " << to_string(d.kind) << ": " << d.message;
    return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics))
{
}

bool ValidationError::has(DiagnosticKind kind) const
{
    return std::any_of(diagnostics_.begin(), diagnostics_.end(),
                       [kind](const Diagnostic& d) { return d.kind == kind; });
}

WeightSumViolation::WeightSumViolation(int follower, double sum)
    : Error("weights of follower " + std::to_string(follower) + " sum to " +
            std::to_string(sum) + ", expected 1"),
      follower_(follower), sum_(sum)
{
}

InfeasibleBounds::InfeasibleBounds(std::size_t n, double lo, double hi)
    : Error("box [" + std::to_string(lo) + ", " + std::to_string(hi) +
            "] cannot hold a row of " + std::to_string(n) + " weights summing to 1")
{
}

NonFiniteLoss::NonFiniteLoss(int epoch, double value)
    : Error("loss became non-finite (" + std::to_string(value) + ") at epoch " +
            std::to_string(epoch) + "; reduce the learning rate"),
      epoch_(epoch)
{
}

NeverFeasible::NeverFeasible(double margin, double threshold)
    : Error("separation constraint fails at alpha = 1 (worst margin " + std::to_string(margin) +
            " <= threshold " + std::to_string(threshold) + ")")
{
}

InvalidStep::InvalidStep(double step)
    : Error("alpha step must lie in (0, 1), got " + std::to_string(step))
{
}

NonFiniteState::NonFiniteState(int agent, double time)
    : Error("vehicle " + std::to_string(agent) + " state became non-finite at t = " +
            std::to_string(time)),
      agent_(agent), time_(time)
{
}

ParseError::ParseError(std::string source, int line, int column, const std::string& what)
    : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line), column_(column)
{
}

}  // namespace deform_swarm
