#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace l3det {

enum class ErrorKind {
    MalformedRecord,
    Parse,
    Io,
    Selection,
    InjectionCapacity,
    InsufficientData,
    Configuration,
    Backend,
    Evaluation,
    UndefinedMetrics,
    UndefinedCorrelation,
};

/// Stable lowercase tag used in machine-parsable CLI error lines.
std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every error raised by the library. Carries a kind so callers can
/// branch without a cascade of catch clauses.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string field, const std::string& detail);

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

class BackendError : public Error {
public:
    BackendError(const std::string& what, std::chrono::duration<double, std::milli> elapsed,
                 std::optional<std::size_t> request_index = std::nullopt)
        : Error(ErrorKind::Backend, what), elapsed_(elapsed), request_index_(request_index) {}

    std::chrono::duration<double, std::milli> elapsed() const noexcept { return elapsed_; }
    std::optional<std::size_t> request_index() const noexcept { return request_index_; }

private:
    std::chrono::duration<double, std::milli> elapsed_;
    std::optional<std::size_t> request_index_;
};

}  // namespace l3det
