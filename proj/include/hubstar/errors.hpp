#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hubstar {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TypeError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

class KeyError : public Error {
public:
    using Error::Error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

class IngestError : public Error {
public:
    IngestError(std::string message, std::size_t row = 0, std::string column = {})
        : Error(std::move(message)), row_(row), column_(std::move(column)) {}

    /// 1-based data row (0 when not tied to a row).
    std::size_t row() const { return row_; }
    const std::string& column() const { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

class ModelError : public Error {
public:
    using Error::Error;
};

struct SourceLocation {
    std::size_t line = 0;
    std::size_t column = 0;
    bool operator==(const SourceLocation&) const = default;
};

class ParseError : public Error {
public:
    enum class Kind { lexical, syntax, duplicate_field, duplicate_name, unknown_keyword };

    ParseError(Kind kind, SourceLocation where, const std::string& message)
        : Error(std::to_string(where.line) + ":" + std::to_string(where.column) + ": " + message),
          kind_(kind),
          where_(where) {}

    Kind kind() const { return kind_; }
    SourceLocation where() const { return where_; }

private:
    Kind kind_;
    SourceLocation where_;
};

}  // namespace hubstar
