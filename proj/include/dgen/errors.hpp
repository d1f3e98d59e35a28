#pragma once

#include <stdexcept>
#include <string>

namespace dgen {

/// A computation produced or encountered a non-finite / diverging value.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A required on-disk artifact (checkpoint, table) is missing or incompatible.
struct artifact_error : std::runtime_error {
    explicit artifact_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dgen
