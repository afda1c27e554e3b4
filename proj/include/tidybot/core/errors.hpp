#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tidybot {

/// Root of every error thrown by the library. `exit_class()` drives the CLI
/// exit-code contract.
class Error : public std::runtime_error {
public:
    enum class Class { Validation = 1, Usage = 2, Backend = 3 };

    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual Class exit_class() const noexcept { return Class::Usage; }
};

// --- core ---

class InvalidName : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (empty list, name not in scope, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::string message, std::size_t line, std::string field)
        : Error(std::move(message)), line_(line), field_(std::move(field)) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class ValidationError : public Error {
public:
    using Error::Error;
    [[nodiscard]] Class exit_class() const noexcept override { return Class::Validation; }
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// --- promptkit ---

class EmptySummary : public Error {
public:
    using Error::Error;
};

class DslSyntaxError : public Error {
public:
    DslSyntaxError(const std::string& message, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class StitchError : public Error {
public:
    using Error::Error;
};

class DuplicateName : public Error {
public:
    using Error::Error;
};

// --- llmbackend ---

class BackendError : public Error {
public:
    using Error::Error;
    [[nodiscard]] Class exit_class() const noexcept override { return Class::Backend; }
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class MissingReplayEntry : public BackendError {
public:
    using BackendError::BackendError;
};

class RateLimited : public BackendError {
public:
    RateLimited(const std::string& message, double retry_after_seconds)
        : BackendError(message), retry_after_(retry_after_seconds) {}
    /// Seconds suggested by the server's Retry-After header; negative when absent.
    [[nodiscard]] double retry_after() const noexcept { return retry_after_; }

private:
    double retry_after_;
};

// --- baselines ---

class Unreachable : public Error {
public:
    using Error::Error;
};

class UnmappedName : public Error {
public:
    using Error::Error;
};

class MissingEmbedding : public Error {
public:
    using Error::Error;
};

class ZeroVector : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// --- evalharness ---

class MissingAnnotations : public Error {
public:
    using Error::Error;
};

// --- simworld ---

class OutOfBounds : public Error {
public:
    using Error::Error;
};

class NoPath : public Error {
public:
    using Error::Error;
};

class BlockedEndpoint : public Error {
public:
    using Error::Error;
};

class EmptyPath : public Error {
public:
    using Error::Error;
};

class UnknownCategory : public Error {
public:
    using Error::Error;
};

class NothingGrasped : public Error {
public:
    using Error::Error;
};

} // namespace tidybot
