#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace iscat {

/// Invalid scenario / grid / probe configuration.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Target file could not be read or resampled.
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A pointwise contrast map hit (or came too close to) its singular set.
/// Carries the offending cell indices so callers can report them.
struct SingularMapError : std::runtime_error {
    SingularMapError(const std::string& what, std::vector<int> bad_cells)
        : std::runtime_error(what), cells(std::move(bad_cells)) {}
    std::vector<int> cells;
};

/// Linear-system solve failed (singular or numerically unusable system).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace iscat
