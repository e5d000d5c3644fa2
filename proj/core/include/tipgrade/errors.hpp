#pragma once

#include <stdexcept>
#include <string>

namespace tipgrade {

/// Base class for all recoverable tipgrade failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset file could not be read or violates the record format.
class DatasetError : public Error {
public:
    using Error::Error;
};

/// Configuration file or plan is malformed or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A store file (transcripts, run records, rubrics) could not be read or written.
class StoreError : public Error {
public:
    using Error::Error;
};

/// Network-level failure after retries, or a missing replay entry.
/// Aborts the run; already-finalized cells remain valid for resume.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Replay store has no completion for the request digest.
class ReplayMissError : public TransportError {
public:
    explicit ReplayMissError(const std::string& digest)
        : TransportError("replay miss: no transcript for digest " + digest), digest_(digest) {}
    const std::string& digest() const noexcept { return digest_; }

private:
    std::string digest_;
};

/// The endpoint rejected the request because the prompt exceeded the model
/// context window. Mapped to overflow status rather than a run failure.
class ContextLengthError : public Error {
public:
    using Error::Error;
};

} // namespace tipgrade
