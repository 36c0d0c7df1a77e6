#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace colondef {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates an operation's preconditions (wrong lengths,
/// non-finite coordinates, missing colon shapes, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Point configuration for which a rigid alignment is not unique
/// (coincident or collinear points).
class DegenerateGeometry : public Error {
public:
    explicit DegenerateGeometry(const std::string& what,
                                std::optional<std::size_t> iteration = std::nullopt,
                                std::optional<std::size_t> frame = std::nullopt)
        : Error(what), iteration_(iteration), frame_(frame) {}

    std::optional<std::size_t> iteration() const noexcept { return iteration_; }
    std::optional<std::size_t> frame() const noexcept { return frame_; }

private:
    std::optional<std::size_t> iteration_;
    std::optional<std::size_t> frame_;
};

/// Malformed file content. `record()` is the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t record)
        : Error("line " + std::to_string(record) + ": " + what), record_(record), detail_(what) {}

    std::size_t record() const noexcept { return record_; }
    /// Message without the line prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t record_;
    std::string detail_;
};

class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

/// A serialized tree whose node list does not describe a valid binary tree.
class StructuralIntegrity : public Error {
public:
    using Error::Error;
};

/// Bad configuration value; `field()` names the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace colondef
