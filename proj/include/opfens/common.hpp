#pragma once

#include <stdexcept>
#include <string>

namespace opfens {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// Parse-time failures (MATPOWER reader).
struct SyntaxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingTable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InconsistentRow : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CaseValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Network construction failures.
struct IslandedNetwork : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularReducedLaplacian : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// LP solver failures.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularBasis : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Statistics / parameter failures.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct InsufficientSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WindowTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Artifact I/O failures.
struct EnsembleCaseMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace opfens
