#pragma once

#include <stdexcept>
#include <string>

namespace stride {

// Bad or inconsistent configuration detected at load/build time.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally invalid data: corrupted genotype file, shape mismatch between
// genotype and schedule, missing sensor channel.
struct StructuralError : std::runtime_error {
    explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// The physics produced a non-finite state. Trials treat this as a fall at
// the current time.
struct BlowupError : std::runtime_error {
    explicit BlowupError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace stride
