#pragma once

#include <stdexcept>
#include <string>

namespace risklat {

/// Base class for every error the engine raises on purpose.
class EngineError : public std::runtime_error {
public:
    explicit EngineError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user-supplied configuration (grid sizes, parameter ranges, schema violations).
class ConfigError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Operation not available on the requested layout (node vs path).
class LayoutError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Step/anchor indices out of range or wrongly ordered.
class IndexError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Measure tilt outside the lattice feasibility bound |theta|*sqrt(delta) <= 1.
class TiltError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Picard contraction condition C_y * delta < 1 violated.
class StepSizeError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Solver failed to converge or produced non-finite values.
class NumericError : public EngineError {
public:
    using EngineError::EngineError;
};

/// Requested operation needs structure the driver does not provide.
class CapabilityError : public EngineError {
public:
    using EngineError::EngineError;
};

/// A scenario hit an infinite conjugate value; its penalty is undefined.
class ScenarioInfeasibleError : public EngineError {
public:
    using EngineError::EngineError;
};

} // namespace risklat
