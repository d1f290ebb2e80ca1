#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hubstar/value.hpp"

namespace hubstar {

enum class TableLayer { bronze, silver_hub, silver_star, gold };

std::string_view to_string(TableLayer layer);

struct ColumnSpec {
    std::string name;
    ColumnType type;
    bool nullable = true;
    bool operator==(const ColumnSpec&) const = default;
};

/// `column` references `key_column` of `table` in the same schema.
struct ForeignKey {
    std::string column;
    std::string table;
    std::string key_column;
    bool operator==(const ForeignKey&) const = default;
};

struct TableManifest {
    TableLayer layer = TableLayer::bronze;
    std::string schema_name;
    std::string table_name;
    std::vector<ColumnSpec> columns;
    std::vector<std::string> primary_key;
    std::vector<std::vector<std::string>> unique_constraints;
    std::vector<ForeignKey> foreign_keys;

    const ColumnSpec* find(const std::string& column) const;
    std::vector<std::string> column_names() const;

    /// Throws StorageError when a key names a missing column or a primary-key column is nullable.
    void check() const;

    std::string to_text() const;
    static TableManifest from_text(const std::string& text);

    bool operator==(const TableManifest&) const = default;
};

struct Predicate {
    enum class Op { eq, ne, lt, le, gt, ge };
    std::string column;
    Op op = Op::eq;
    Value value;

    bool matches(const Record& row) const;
};

struct UpsertCounts {
    std::size_t inserted = 0;
    std::size_t updated = 0;
};

struct ConstraintViolation {
    enum class Kind { primary_key, unique, foreign_key, null_value };
    Kind kind = Kind::primary_key;
    std::string table;
    std::string detail;
};

std::string_view to_string(ConstraintViolation::Kind kind);

struct ConstraintReport {
    std::vector<ConstraintViolation> violations;
    bool empty() const { return violations.empty(); }
    std::size_t count(ConstraintViolation::Kind kind) const;
};

/// One table directory: `manifest` plus `data` holding one JSON object per row.
class Table {
public:
    Table(std::filesystem::path dir, TableManifest manifest);

    const TableManifest& manifest() const { return manifest_; }
    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path data_path() const { return dir_ / "data"; }

    /// Rows in storage order, filtered by the conjunction of `predicates`.
    std::vector<Record> scan(std::span<const Predicate> predicates = {}) const;
    std::size_t row_count() const;

    std::size_t append_rows(std::span<const Record> rows);

    /// Rows whose `key` matches a stored row replace it in place; the rest append.
    UpsertCounts upsert_rows(std::span<const Record> rows, const std::vector<std::string>& key);

    /// Replaces the whole table contents.
    void replace_rows(std::span<const Record> rows);

    /// Maximum capture_timestamp over all rows. Throws StorageError on an empty table.
    Timestamp max_capture_timestamp() const;

private:
    Record normalize(const Record& row, std::size_t index) const;
    void write_all(std::span<const Record> rows) const;

    std::filesystem::path dir_;
    TableManifest manifest_;
};

/// Root directory holding `<schema>/<table>/` table directories.
class Warehouse {
public:
    explicit Warehouse(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path table_dir(const std::string& schema, const std::string& table) const;

    bool has_table(const std::string& schema, const std::string& table) const;
    Table create_table(const TableManifest& manifest);
    Table open_table(const std::string& schema, const std::string& table) const;
    void drop_table(const std::string& schema, const std::string& table);

    /// Audits primary-key, unique, not-null and foreign-key constraints. Nothing is enforced on write.
    ConstraintReport check_constraints(const Table& table) const;

private:
    std::filesystem::path root_;
};

/// Stable text key for a tuple of column values, usable in ordered and hashed containers.
std::string tuple_key(const Record& row, const std::vector<std::string>& columns);

/// Row serialization in the on-disk notation (one JSON object, manifest column order).
std::string encode_row(const TableManifest& manifest, const Record& row);
Record decode_row(const TableManifest& manifest, const std::string& line);

}  // namespace hubstar
