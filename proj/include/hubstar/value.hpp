#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hubstar {

/// UTC instant with microsecond resolution.
class Timestamp {
public:
    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::int64_t micros) : micros_(micros) {}

    static Timestamp from_epoch_seconds(std::int64_t seconds) { return Timestamp(seconds * 1'000'000); }
    static Timestamp epoch() { return Timestamp(0); }
    static Timestamp from_civil(int year, unsigned month, unsigned day, unsigned hour = 0,
                                unsigned minute = 0, unsigned second = 0, std::int64_t micros = 0);

    /// Accepts `YYYY-MM-DD`, optionally followed by `T` or space and `HH:MM[:SS[.ffffff]]`,
    /// optionally suffixed by `Z` or `+00:00`. Absent components are zero.
    static std::optional<Timestamp> parse(std::string_view text);

    constexpr std::int64_t micros() const { return micros_; }

    /// ISO-8601 with `Z` suffix. Fractional seconds appear only when non-zero.
    std::string iso8601() const;

    struct Civil {
        int year;
        unsigned month, day, hour, minute, second;
        std::int64_t micros;
    };
    Civil civil() const;

    constexpr auto operator<=>(const Timestamp&) const = default;

private:
    std::int64_t micros_ = 0;
};

enum class ScalarType { integer, decimal, string, boolean, timestamp };

std::string_view to_string(ScalarType type);
std::optional<ScalarType> scalar_type_from_string(std::string_view name);

struct FieldType {
    std::string name;
    ScalarType type = ScalarType::string;
    bool operator==(const FieldType&) const = default;
};

/// Column type: a scalar, or an array of structs with scalar fields.
struct ColumnType {
    bool is_collection = false;
    ScalarType scalar = ScalarType::string;
    std::vector<FieldType> fields;

    static ColumnType of(ScalarType t) { return ColumnType{false, t, {}}; }
    static ColumnType array_of(std::vector<FieldType> fields) { return ColumnType{true, ScalarType::string, std::move(fields)}; }

    std::string describe() const;
    bool operator==(const ColumnType&) const = default;
};

class Value;
using Record = std::map<std::string, Value>;
using Collection = std::vector<Record>;

/// A nullable scalar or a collection of records.
class Value {
public:
    using Storage = std::variant<std::monostate, std::int64_t, double, std::string, bool, Timestamp,
                                 std::shared_ptr<const Collection>>;

    Value() = default;
    Value(std::nullptr_t) {}
    Value(std::int64_t v) : data_(v) {}
    Value(int v) : data_(static_cast<std::int64_t>(v)) {}
    Value(double v) : data_(v) {}
    Value(std::string v) : data_(std::move(v)) {}
    Value(const char* v) : data_(std::string(v)) {}
    Value(bool v) : data_(v) {}
    Value(Timestamp v) : data_(v) {}
    Value(Collection items) : data_(std::make_shared<const Collection>(std::move(items))) {}

    bool is_null() const { return std::holds_alternative<std::monostate>(data_); }
    bool is_integer() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_decimal() const { return std::holds_alternative<double>(data_); }
    bool is_string() const { return std::holds_alternative<std::string>(data_); }
    bool is_boolean() const { return std::holds_alternative<bool>(data_); }
    bool is_timestamp() const { return std::holds_alternative<Timestamp>(data_); }
    bool is_collection() const { return std::holds_alternative<std::shared_ptr<const Collection>>(data_); }

    std::int64_t as_integer() const { return std::get<std::int64_t>(data_); }
    double as_decimal() const { return std::get<double>(data_); }
    const std::string& as_string() const { return std::get<std::string>(data_); }
    bool as_boolean() const { return std::get<bool>(data_); }
    Timestamp as_timestamp() const { return std::get<Timestamp>(data_); }
    const Collection& as_collection() const { return *std::get<std::shared_ptr<const Collection>>(data_); }

    const Storage& storage() const { return data_; }

    /// Canonical text used by casts to string and by key concatenation.
    /// Null renders as the empty string; callers that care check is_null() first.
    std::string to_text() const;

    /// Human-readable form for diagnostics; strings quoted, null as `null`.
    std::string debug() const;

    friend bool operator==(const Value& a, const Value& b);

private:
    Storage data_;
};

/// Total order over values of one type; null sorts first. Integers and decimals compare numerically.
std::strong_ordering compare_values(const Value& a, const Value& b);

/// Null-safe inequality: false iff both null, or both non-null and equal.
bool null_safe_distinct(const Value& a, const Value& b);

/// Converts `v` to `target`. Strings are parsed; numbers widen or truncate; timestamps parse
/// from ISO-8601 with zero-filled components. Throws TypeError on failure.
Value coerce(const Value& v, ScalarType target);

/// Column-level coercion. Collection items keep declared fields only, each coerced to its type.
Value coerce(const Value& v, const ColumnType& target);

/// True if `v` is null or already an instance of `type` (without conversion).
bool conforms(const Value& v, const ColumnType& type);

/// Lookup that yields a null value for a missing column.
const Value& field_or_null(const Record& record, const std::string& name);

}  // namespace hubstar
