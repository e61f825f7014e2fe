#pragma once
// Error taxonomy for the pipeline. Every stage failure surfaces as one of
// these; the CLI maps them to machine-readable error JSON and exit codes.

#include <stdexcept>
#include <string>

namespace mctg {

// Bad or unresolvable configuration (missing files, invalid registry, ...).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A source row could not be ingested (unmappable label, parse failure).
struct IngestError : std::runtime_error {
    explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transport/endpoint failure after retries, or a replay-mode cassette miss.
struct ServiceError : std::runtime_error {
    explicit ServiceError(const std::string& msg) : std::runtime_error(msg) {}
};

// An internal contract was violated (caller bug, not user input).
struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

// Numerical preconditions not met (zero vector, empty table, ...).
struct ComputationError : std::runtime_error {
    explicit ComputationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mctg
