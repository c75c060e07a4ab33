#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "risklat/allocation.hpp"
#include "risklat/properties.hpp"

namespace risklat {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kEngineVersion = "1.0.0";

/// Command-line settings that override the corresponding config fields.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<bool> deterministic;
    std::optional<SignVariant> sign_variant;
    std::optional<std::string> kappa; // "1/g1", "2/g1" or a number
};

/// Loads a JSON run configuration, executes the requested solves, writes the
/// report. Exit codes: 0 success, 2 configuration error, 3 numeric error.
int run_config(const std::string& path, const CliOverrides& overrides, std::ostream& log);

/// Runs the property harness ("risk" | "car" | "comparison" | "duality" |
/// "all"). Prints one line per check row, writes a JSON report when
/// report_path is nonempty. Exit 0 iff every asserted row passes.
int verify(const std::string& suite, std::uint64_t seed, int count, SignVariant variant,
           const std::string& report_path, std::ostream& log);

} // namespace risklat
