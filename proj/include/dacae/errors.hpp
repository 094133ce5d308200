#pragma once

#include <stdexcept>
#include <string>

namespace dacae {

/// Precondition of an operation was not met (bad dimensions, out-of-range index).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Operation invoked in the wrong state, e.g. backward without a recorded forward pass.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Loss or gradient became non-finite or exceeded the divergence guard.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw recordings could not be turned into a dataset.
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read or written, or its content is corrupt. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dacae
