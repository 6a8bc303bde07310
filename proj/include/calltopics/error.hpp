#pragma once

#include <stdexcept>
#include <string>

namespace calltopics {

/// Base of every error raised by the library. Callers that only need a
/// message can catch this; the subclasses exist so policies (retry, skip,
/// exit code) can dispatch on the failure kind.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IngestError : public Error {
public:
    using Error::Error;
};

/// Duplicate identity: doc_id in a corpus, label in an ontology.
class ConflictError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class DepthError : public Error {
public:
    using Error::Error;
};

/// Malformed ontology/corpus file or an invariant broken on load.
class LoadError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// An LLM reply that does not match the expected output contract. Keeps the
/// raw reply so the caller can log or retry.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class ProviderError : public Error {
public:
    ProviderError(const std::string& what, int attempts, int status = 0, bool terminal = false)
        : Error(what), attempts_(attempts), status_(status), terminal_(terminal) {}

    /// Number of requests actually sent (max_retries + 1 when retries ran out).
    int attempts() const noexcept { return attempts_; }
    /// HTTP status of the last response, 0 for transport failures.
    int status() const noexcept { return status_; }
    /// True when the failure was not retried (auth, quota, bad request).
    bool terminal() const noexcept { return terminal_; }

private:
    int attempts_;
    int status_;
    bool terminal_;
};

/// The mock provider was asked something its script does not cover.
class UnscriptedPromptError : public ProviderError {
public:
    explicit UnscriptedPromptError(const std::string& what) : ProviderError(what, 1, 0, true) {}
};

}  // namespace calltopics
