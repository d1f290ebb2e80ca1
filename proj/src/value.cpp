#include "hubstar/value.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "hubstar/errors.hpp"

namespace hubstar {

namespace {

constexpr std::int64_t micros_per_second = 1'000'000;
constexpr std::int64_t seconds_per_day = 86'400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool parse_digits(std::string_view text, std::size_t pos, std::size_t count, unsigned& out) {
    if (pos + count > text.size()) return false;
    unsigned v = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + static_cast<unsigned>(c - '0');
    }
    out = v;
    return true;
}

std::string format_decimal(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, end);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

Timestamp Timestamp::from_civil(int year, unsigned month, unsigned day, unsigned hour, unsigned minute,
                                unsigned second, std::int64_t micros) {
    using namespace std::chrono;
    auto ymd = std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day};
    auto days = sys_days{ymd}.time_since_epoch().count();
    std::int64_t secs = static_cast<std::int64_t>(days) * seconds_per_day + hour * 3600 + minute * 60 + second;
    return Timestamp(secs * micros_per_second + micros);
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
    unsigned year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    std::int64_t micros = 0;
    if (!parse_digits(text, 0, 4, year) || text.size() < 10 || text[4] != '-' || text[7] != '-' ||
        !parse_digits(text, 5, 2, month) || !parse_digits(text, 8, 2, day)) {
        return std::nullopt;
    }
    std::size_t pos = 10;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        ++pos;
        if (!parse_digits(text, pos, 2, hour) || pos + 2 >= text.size() || text[pos + 2] != ':' ||
            !parse_digits(text, pos + 3, 2, minute)) {
            return std::nullopt;
        }
        pos += 5;
        if (pos < text.size() && text[pos] == ':') {
            if (!parse_digits(text, pos + 1, 2, second)) return std::nullopt;
            pos += 3;
            if (pos < text.size() && text[pos] == '.') {
                ++pos;
                std::int64_t scale = 100'000;
                std::size_t digits = 0;
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
                    if (digits < 6) micros += (text[pos] - '0') * scale;
                    scale /= 10;
                    ++digits;
                    ++pos;
                }
                if (digits == 0) return std::nullopt;
            }
        }
    }
    if (pos < text.size()) {
        std::string_view zone = text.substr(pos);
        if (zone != "Z" && zone != "+00:00" && zone != "+0000") return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(year)}, std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok() || year < 1 || hour > 23 || minute > 59 || second > 59) return std::nullopt;
    return from_civil(static_cast<int>(year), month, day, hour, minute, second, micros);
}

Timestamp::Civil Timestamp::civil() const {
    using namespace std::chrono;
    std::int64_t secs = floor_div(micros_, micros_per_second);
    std::int64_t frac = micros_ - secs * micros_per_second;
    std::int64_t days = floor_div(secs, seconds_per_day);
    std::int64_t rem = secs - days * seconds_per_day;
    year_month_day ymd{sys_days{std::chrono::days{days}}};
    return Civil{static_cast<int>(ymd.year()),
                 static_cast<unsigned>(ymd.month()),
                 static_cast<unsigned>(ymd.day()),
                 static_cast<unsigned>(rem / 3600),
                 static_cast<unsigned>((rem % 3600) / 60),
                 static_cast<unsigned>(rem % 60),
                 frac};
}

std::string Timestamp::iso8601() const {
    Civil c = civil();
    char buf[40];
    if (c.micros == 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:%02u:%02uZ", c.year, c.month, c.day, c.hour,
                      c.minute, c.second);
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02u:%02u:%02u.%06lldZ", c.year, c.month, c.day,
                      c.hour, c.minute, c.second, static_cast<long long>(c.micros));
    }
    return buf;
}

std::string_view to_string(ScalarType type) {
    switch (type) {
        case ScalarType::integer: return "integer";
        case ScalarType::decimal: return "decimal";
        case ScalarType::string: return "string";
        case ScalarType::boolean: return "boolean";
        case ScalarType::timestamp: return "timestamp";
    }
    return "string";
}

std::optional<ScalarType> scalar_type_from_string(std::string_view name) {
    if (name == "integer") return ScalarType::integer;
    if (name == "decimal") return ScalarType::decimal;
    if (name == "string") return ScalarType::string;
    if (name == "boolean") return ScalarType::boolean;
    if (name == "timestamp") return ScalarType::timestamp;
    return std::nullopt;
}

std::string ColumnType::describe() const {
    if (!is_collection) return std::string(to_string(scalar));
    std::string out = "array(";
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ", ";
        out += fields[i].name;
        out += ' ';
        out += to_string(fields[i].type);
    }
    return out + ")";
}

std::string Value::to_text() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return {};
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                return format_decimal(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, Timestamp>) {
                return v.iso8601();
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < v->size(); ++i) {
                    if (i) out += ", ";
                    out += "{";
                    bool first = true;
                    for (const auto& [name, field] : (*v)[i]) {
                        if (!first) out += ", ";
                        first = false;
                        out += name + ": " + field.debug();
                    }
                    out += "}";
                }
                return out + "]";
            }
        },
        data_);
}

std::string Value::debug() const {
    if (is_null()) return "null";
    if (is_string()) return "\"" + as_string() + "\"";
    return to_text();
}

bool operator==(const Value& a, const Value& b) {
    if (a.data_.index() != b.data_.index()) return false;
    if (a.is_collection()) return a.as_collection() == b.as_collection();
    return a.data_ == b.data_;
}

std::strong_ordering compare_values(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return !a.is_null() <=> !b.is_null();
    bool a_num = a.is_integer() || a.is_decimal();
    bool b_num = b.is_integer() || b.is_decimal();
    if (a_num && b_num) {
        if (a.is_integer() && b.is_integer()) return a.as_integer() <=> b.as_integer();
        double x = a.is_integer() ? static_cast<double>(a.as_integer()) : a.as_decimal();
        double y = b.is_integer() ? static_cast<double>(b.as_integer()) : b.as_decimal();
        if (x < y) return std::strong_ordering::less;
        if (x > y) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    if (a.storage().index() != b.storage().index()) return a.storage().index() <=> b.storage().index();
    if (a.is_string()) return a.as_string().compare(b.as_string()) <=> 0;
    if (a.is_boolean()) return a.as_boolean() <=> b.as_boolean();
    if (a.is_timestamp()) return a.as_timestamp() <=> b.as_timestamp();
    return a.to_text().compare(b.to_text()) <=> 0;
}

bool null_safe_distinct(const Value& a, const Value& b) {
    if (a.is_null() && b.is_null()) return false;
    if (a.is_null() != b.is_null()) return true;
    return !(a == b);
}

namespace {

[[noreturn]] void coercion_failure(const Value& v, ScalarType target) {
    throw TypeError("cannot coerce " + v.debug() + " to " + std::string(to_string(target)));
}

}  // namespace

Value coerce(const Value& v, ScalarType target) {
    if (v.is_null()) return v;
    if (v.is_collection()) coercion_failure(v, target);
    switch (target) {
        case ScalarType::integer: {
            if (v.is_integer()) return v;
            if (v.is_decimal()) {
                double d = v.as_decimal();
                if (!std::isfinite(d)) coercion_failure(v, target);
                return static_cast<std::int64_t>(d);
            }
            if (v.is_boolean()) return static_cast<std::int64_t>(v.as_boolean() ? 1 : 0);
            if (v.is_string()) {
                const std::string& s = v.as_string();
                std::int64_t out = 0;
                auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
                if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return out;
                double d = 0;
                auto [dptr, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
                if (dec == std::errc() && dptr == s.data() + s.size() && !s.empty() && std::isfinite(d))
                    return static_cast<std::int64_t>(d);
            }
            coercion_failure(v, target);
        }
        case ScalarType::decimal: {
            if (v.is_decimal()) return v;
            if (v.is_integer()) return static_cast<double>(v.as_integer());
            if (v.is_string()) {
                const std::string& s = v.as_string();
                double d = 0;
                auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
                if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) return d;
            }
            coercion_failure(v, target);
        }
        case ScalarType::string: return v.is_string() ? v : Value(v.to_text());
        case ScalarType::boolean: {
            if (v.is_boolean()) return v;
            if (v.is_integer() && (v.as_integer() == 0 || v.as_integer() == 1)) return v.as_integer() == 1;
            if (v.is_string()) {
                const std::string& s = v.as_string();
                if (s == "true" || s == "1") return true;
                if (s == "false" || s == "0") return false;
            }
            coercion_failure(v, target);
        }
        case ScalarType::timestamp: {
            if (v.is_timestamp()) return v;
            if (v.is_string()) {
                if (auto ts = Timestamp::parse(v.as_string())) return *ts;
            }
            coercion_failure(v, target);
        }
    }
    coercion_failure(v, target);
}

Value coerce(const Value& v, const ColumnType& target) {
    if (!target.is_collection) return coerce(v, target.scalar);
    if (v.is_null()) return v;
    if (!v.is_collection()) throw TypeError("expected " + target.describe() + ", got " + v.debug());
    Collection items;
    items.reserve(v.as_collection().size());
    for (const Record& item : v.as_collection()) {
        for (const auto& [name, field] : item) {
            if (std::none_of(target.fields.begin(), target.fields.end(), [&](const FieldType& f) { return f.name == name; })) {
                throw TypeError("unknown collection field " + name);
            }
        }
        Record out;
        for (const FieldType& f : target.fields) out[f.name] = coerce(field_or_null(item, f.name), f.type);
        items.push_back(std::move(out));
    }
    return Value(std::move(items));
}

bool conforms(const Value& v, const ColumnType& type) {
    if (v.is_null()) return true;
    if (type.is_collection) {
        if (!v.is_collection()) return false;
        for (const Record& item : v.as_collection()) {
            for (const auto& [name, field] : item) {
                auto it = std::find_if(type.fields.begin(), type.fields.end(),
                                       [&](const FieldType& f) { return f.name == name; });
                if (it == type.fields.end() || !conforms(field, ColumnType::of(it->type))) return false;
            }
        }
        return true;
    }
    switch (type.scalar) {
        case ScalarType::integer: return v.is_integer();
        case ScalarType::decimal: return v.is_decimal();
        case ScalarType::string: return v.is_string();
        case ScalarType::boolean: return v.is_boolean();
        case ScalarType::timestamp: return v.is_timestamp();
    }
    return false;
}

const Value& field_or_null(const Record& record, const std::string& name) {
    static const Value null_value;
    auto it = record.find(name);
    return it == record.end() ? null_value : it->second;
}

}  // namespace hubstar
