#pragma once

#include <stdexcept>
#include <string>

namespace kawarada {

/// Raised by config parsing/validation; maps to exit code 3 in the CLI.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a mesh or operator cannot be constructed from its inputs.
class AssemblyError : public std::runtime_error {
public:
    explicit AssemblyError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Signal (not a failure): a state component reached the quench threshold.
class QuenchSignal : public std::runtime_error {
public:
    QuenchSignal(const std::string& msg, int index)
        : std::runtime_error(msg), index(index) {}
    int index;
};

/// A state component left the admissible range [0, 1) from below.
class DomainViolation : public std::runtime_error {
public:
    explicit DomainViolation(const std::string& msg) : std::runtime_error(msg) {}
};

/// Positivity or monotonicity monitor still failing after all tau-halving retries.
class MonitorViolation : public std::runtime_error {
public:
    explicit MonitorViolation(const std::string& msg) : std::runtime_error(msg) {}
};

/// Adaptive step fell below the hard floor.
class TimeStepUnderflow : public std::runtime_error {
public:
    explicit TimeStepUnderflow(const std::string& msg) : std::runtime_error(msg) {}
};

/// Diagnostic refused because the operator is too large for dense probing.
class SizeGuardExceeded : public std::runtime_error {
public:
    explicit SizeGuardExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller broke an API contract (e.g. propagators with mismatched tau).
class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

/// Every node of a rate surface was masked as indeterminate.
class EmptyRate : public std::runtime_error {
public:
    explicit EmptyRate(const std::string& msg) : std::runtime_error(msg) {}
};

/// A refinement run quenched before reaching a required sampling time.
class StudyAborted : public std::runtime_error {
public:
    StudyAborted(const std::string& msg, std::string run_id)
        : std::runtime_error(msg), run_id(std::move(run_id)) {}
    std::string run_id;
};

} // namespace kawarada
