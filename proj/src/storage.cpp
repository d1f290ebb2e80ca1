#include "hubstar/storage.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "file_io.hpp"
#include "hubstar/errors.hpp"

namespace hubstar {

using json = nlohmann::ordered_json;

namespace {

json type_to_json(const ColumnType& type) {
    if (!type.is_collection) return std::string(to_string(type.scalar));
    json fields = json::array();
    for (const FieldType& f : type.fields) fields.push_back(json{{"name", f.name}, {"type", to_string(f.type)}});
    return json{{"array", fields}};
}

ScalarType scalar_from_json(const json& j) {
    auto t = scalar_type_from_string(j.get<std::string>());
    if (!t) throw StorageError("unknown column type " + j.dump());
    return *t;
}

ColumnType type_from_json(const json& j) {
    if (j.is_string()) return ColumnType::of(scalar_from_json(j));
    std::vector<FieldType> fields;
    for (const json& f : j.at("array")) fields.push_back({f.at("name").get<std::string>(), scalar_from_json(f.at("type"))});
    return ColumnType::array_of(std::move(fields));
}

TableLayer layer_from_string(const std::string& s) {
    if (s == "bronze") return TableLayer::bronze;
    if (s == "silver_hub") return TableLayer::silver_hub;
    if (s == "silver_star") return TableLayer::silver_star;
    if (s == "gold") return TableLayer::gold;
    throw StorageError("unknown layer " + s);
}

json scalar_to_json(const Value& v) {
    if (v.is_null()) return nullptr;
    if (v.is_integer()) return v.as_integer();
    if (v.is_decimal()) return v.as_decimal();
    if (v.is_string()) return v.as_string();
    if (v.is_boolean()) return v.as_boolean();
    if (v.is_timestamp()) return v.as_timestamp().iso8601();
    throw StorageError("unexpected collection value");
}

json value_to_json(const Value& v, const ColumnType& type) {
    if (!type.is_collection || v.is_null()) return scalar_to_json(v);
    json items = json::array();
    for (const Record& item : v.as_collection()) {
        json obj = json::object();
        for (const FieldType& f : type.fields) obj[f.name] = scalar_to_json(field_or_null(item, f.name));
        items.push_back(std::move(obj));
    }
    return items;
}

Value scalar_from_json_value(const json& j, ScalarType type) {
    if (j.is_null()) return {};
    switch (type) {
        case ScalarType::integer:
            if (j.is_number_integer()) return j.get<std::int64_t>();
            break;
        case ScalarType::decimal:
            if (j.is_number()) return j.get<double>();
            break;
        case ScalarType::string:
            if (j.is_string()) return j.get<std::string>();
            break;
        case ScalarType::boolean:
            if (j.is_boolean()) return j.get<bool>();
            break;
        case ScalarType::timestamp:
            if (j.is_string()) {
                if (auto ts = Timestamp::parse(j.get<std::string>())) return *ts;
            }
            break;
    }
    throw StorageError("stored value " + j.dump() + " is not a " + std::string(to_string(type)));
}

Value value_from_json(const json& j, const ColumnType& type) {
    if (!type.is_collection || j.is_null()) return scalar_from_json_value(j, type.scalar);
    Collection items;
    for (const json& obj : j) {
        Record item;
        for (const FieldType& f : type.fields) {
            auto it = obj.find(f.name);
            item[f.name] = it == obj.end() ? Value() : scalar_from_json_value(*it, f.type);
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        if (end > start) lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

}  // namespace

std::string_view to_string(TableLayer layer) {
    switch (layer) {
        case TableLayer::bronze: return "bronze";
        case TableLayer::silver_hub: return "silver_hub";
        case TableLayer::silver_star: return "silver_star";
        case TableLayer::gold: return "gold";
    }
    return "gold";
}

std::string_view to_string(ConstraintViolation::Kind kind) {
    switch (kind) {
        case ConstraintViolation::Kind::primary_key: return "primary_key";
        case ConstraintViolation::Kind::unique: return "unique";
        case ConstraintViolation::Kind::foreign_key: return "foreign_key";
        case ConstraintViolation::Kind::null_value: return "null_value";
    }
    return "null_value";
}

std::size_t ConstraintReport::count(ConstraintViolation::Kind kind) const {
    return static_cast<std::size_t>(std::count_if(violations.begin(), violations.end(),
                                                  [&](const ConstraintViolation& v) { return v.kind == kind; }));
}

// ---------------------------------------------------------------------------
// TableManifest
// ---------------------------------------------------------------------------

const ColumnSpec* TableManifest::find(const std::string& column) const {
    auto it = std::find_if(columns.begin(), columns.end(), [&](const ColumnSpec& c) { return c.name == column; });
    return it == columns.end() ? nullptr : &*it;
}

std::vector<std::string> TableManifest::column_names() const {
    std::vector<std::string> names;
    for (const ColumnSpec& c : columns) names.push_back(c.name);
    return names;
}

void TableManifest::check() const {
    if (schema_name.empty() || table_name.empty()) throw StorageError("manifest needs schema and table names");
    std::set<std::string> seen;
    for (const ColumnSpec& c : columns) {
        if (!seen.insert(c.name).second) throw StorageError(table_name + ": duplicate column " + c.name);
    }
    for (const std::string& k : primary_key) {
        const ColumnSpec* c = find(k);
        if (!c) throw StorageError(table_name + ": primary key column " + k + " does not exist");
        if (c->nullable) throw StorageError(table_name + ": primary key column " + k + " is nullable");
    }
    for (const auto& uc : unique_constraints) {
        for (const std::string& k : uc) {
            if (!find(k)) throw StorageError(table_name + ": unique constraint column " + k + " does not exist");
        }
    }
    for (const ForeignKey& fk : foreign_keys) {
        if (!find(fk.column)) throw StorageError(table_name + ": foreign key column " + fk.column + " does not exist");
    }
}

std::string TableManifest::to_text() const {
    json j;
    j["layer"] = to_string(layer);
    j["schema"] = schema_name;
    j["table"] = table_name;
    json cols = json::array();
    for (const ColumnSpec& c : columns) {
        cols.push_back(json{{"name", c.name}, {"type", type_to_json(c.type)}, {"nullable", c.nullable}});
    }
    j["columns"] = cols;
    j["primary_key"] = primary_key;
    j["unique"] = unique_constraints;
    json fks = json::array();
    for (const ForeignKey& fk : foreign_keys) {
        fks.push_back(json{{"column", fk.column}, {"table", fk.table}, {"key", fk.key_column}});
    }
    j["foreign_keys"] = fks;
    return j.dump(2) + "\n";
}

TableManifest TableManifest::from_text(const std::string& text) {
    try {
        json j = json::parse(text);
        TableManifest m;
        m.layer = layer_from_string(j.at("layer").get<std::string>());
        m.schema_name = j.at("schema").get<std::string>();
        m.table_name = j.at("table").get<std::string>();
        for (const json& c : j.at("columns")) {
            m.columns.push_back({c.at("name").get<std::string>(), type_from_json(c.at("type")), c.at("nullable").get<bool>()});
        }
        m.primary_key = j.at("primary_key").get<std::vector<std::string>>();
        m.unique_constraints = j.at("unique").get<std::vector<std::vector<std::string>>>();
        for (const json& fk : j.at("foreign_keys")) {
            m.foreign_keys.push_back(
                {fk.at("column").get<std::string>(), fk.at("table").get<std::string>(), fk.at("key").get<std::string>()});
        }
        return m;
    } catch (const json::exception& e) {
        throw StorageError(std::string("malformed manifest: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Rows
// ---------------------------------------------------------------------------

bool Predicate::matches(const Record& row) const {
    const Value& v = field_or_null(row, column);
    if (v.is_null() || value.is_null()) {
        // Comparisons against null follow SQL: only (in)equality of two nulls is decidable here.
        if (op == Op::eq) return v.is_null() && value.is_null();
        if (op == Op::ne) return v.is_null() != value.is_null();
        return false;
    }
    auto c = compare_values(v, value);
    switch (op) {
        case Op::eq: return c == 0;
        case Op::ne: return c != 0;
        case Op::lt: return c < 0;
        case Op::le: return c <= 0;
        case Op::gt: return c > 0;
        case Op::ge: return c >= 0;
    }
    return false;
}

std::string tuple_key(const Record& row, const std::vector<std::string>& columns) {
    std::string key;
    for (const std::string& c : columns) {
        const Value& v = field_or_null(row, c);
        key += static_cast<char>('0' + v.storage().index());
        key += v.to_text();
        key += '\x1f';
    }
    return key;
}

std::string encode_row(const TableManifest& manifest, const Record& row) {
    json obj = json::object();
    for (const ColumnSpec& c : manifest.columns) obj[c.name] = value_to_json(field_or_null(row, c.name), c.type);
    return obj.dump();
}

Record decode_row(const TableManifest& manifest, const std::string& line) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw StorageError(manifest.table_name + ": malformed row: " + e.what());
    }
    Record row;
    for (const ColumnSpec& c : manifest.columns) {
        auto it = obj.find(c.name);
        if (it == obj.end()) throw StorageError(manifest.table_name + ": stored row lacks column " + c.name);
        row[c.name] = value_from_json(*it, c.type);
    }
    return row;
}

// ---------------------------------------------------------------------------
// Table
// ---------------------------------------------------------------------------

Table::Table(std::filesystem::path dir, TableManifest manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {}

std::vector<Record> Table::scan(std::span<const Predicate> predicates) const {
    for (const Predicate& p : predicates) {
        if (!manifest_.find(p.column)) {
            throw StorageError(manifest_.table_name + ": unknown column in predicate: " + p.column);
        }
    }
    std::vector<Record> rows;
    for (const std::string& line : split_lines(detail::read_file(data_path()))) {
        Record row = decode_row(manifest_, line);
        if (std::all_of(predicates.begin(), predicates.end(), [&](const Predicate& p) { return p.matches(row); })) {
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::size_t Table::row_count() const { return split_lines(detail::read_file(data_path())).size(); }

Record Table::normalize(const Record& row, std::size_t index) const {
    for (const auto& [name, value] : row) {
        if (!manifest_.find(name)) {
            throw TypeError(manifest_.table_name + ": row " + std::to_string(index) + ": unknown column " + name);
        }
    }
    Record out;
    for (const ColumnSpec& c : manifest_.columns) {
        auto it = row.find(c.name);
        Value v = it == row.end() ? Value() : it->second;
        if (v.is_null() && !c.nullable) {
            throw TypeError(manifest_.table_name + ": row " + std::to_string(index) + ": column " + c.name +
                            " is not nullable");
        }
        if (!conforms(v, c.type)) {
            throw TypeError(manifest_.table_name + ": row " + std::to_string(index) + ": column " + c.name +
                            " expects " + c.type.describe() + ", got " + v.debug());
        }
        out[c.name] = std::move(v);
    }
    return out;
}

void Table::write_all(std::span<const Record> rows) const {
    std::string text;
    for (const Record& row : rows) {
        text += encode_row(manifest_, row);
        text += '\n';
    }
    detail::write_file_atomic(data_path(), text);
}

std::size_t Table::append_rows(std::span<const Record> rows) {
    if (rows.empty()) return 0;
    std::vector<Record> incoming;
    incoming.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) incoming.push_back(normalize(rows[i], i));
    std::string text = detail::read_file(data_path());
    for (const Record& row : incoming) {
        text += encode_row(manifest_, row);
        text += '\n';
    }
    detail::write_file_atomic(data_path(), text);
    return incoming.size();
}

UpsertCounts Table::upsert_rows(std::span<const Record> rows, const std::vector<std::string>& key) {
    if (key != manifest_.primary_key) throw StorageError(manifest_.table_name + ": upsert key must be the primary key");
    UpsertCounts counts;
    if (rows.empty()) return counts;
    std::vector<Record> incoming;
    std::set<std::string> batch_keys;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        incoming.push_back(normalize(rows[i], i));
        if (!batch_keys.insert(tuple_key(incoming.back(), key)).second) {
            throw StorageError(manifest_.table_name + ": duplicate key in batch at row " + std::to_string(i));
        }
    }
    std::vector<Record> stored = scan();
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < stored.size(); ++i) position.emplace(tuple_key(stored[i], key), i);
    for (Record& row : incoming) {
        auto it = position.find(tuple_key(row, key));
        if (it != position.end()) {
            stored[it->second] = std::move(row);
            ++counts.updated;
        } else {
            stored.push_back(std::move(row));
            ++counts.inserted;
        }
    }
    write_all(stored);
    return counts;
}

void Table::replace_rows(std::span<const Record> rows) {
    std::vector<Record> normalized;
    normalized.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) normalized.push_back(normalize(rows[i], i));
    write_all(normalized);
}

Timestamp Table::max_capture_timestamp() const {
    if (!manifest_.find("capture_timestamp")) {
        throw StorageError(manifest_.table_name + " has no capture_timestamp column");
    }
    std::optional<Timestamp> best;
    for (const Record& row : scan()) {
        const Value& v = field_or_null(row, "capture_timestamp");
        if (v.is_timestamp() && (!best || v.as_timestamp() > *best)) best = v.as_timestamp();
    }
    if (!best) throw StorageError(manifest_.table_name + ": no high-water mark; initialize default rows first");
    return *best;
}

// ---------------------------------------------------------------------------
// Warehouse
// ---------------------------------------------------------------------------

Warehouse::Warehouse(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path Warehouse::table_dir(const std::string& schema, const std::string& table) const {
    return root_ / schema / table;
}

bool Warehouse::has_table(const std::string& schema, const std::string& table) const {
    std::error_code ec;
    return std::filesystem::exists(table_dir(schema, table) / "manifest", ec);
}

Table Warehouse::create_table(const TableManifest& manifest) {
    manifest.check();
    if (has_table(manifest.schema_name, manifest.table_name)) {
        throw StorageError(manifest.schema_name + "." + manifest.table_name + " already exists");
    }
    auto dir = table_dir(manifest.schema_name, manifest.table_name);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StorageError("cannot create " + dir.string() + ": " + ec.message());
    detail::write_file_atomic(dir / "data", "");
    detail::write_file_atomic(dir / "manifest", manifest.to_text());
    return Table(dir, manifest);
}

Table Warehouse::open_table(const std::string& schema, const std::string& table) const {
    auto dir = table_dir(schema, table);
    if (!has_table(schema, table)) throw StorageError("no such table " + schema + "." + table);
    return Table(dir, TableManifest::from_text(detail::read_file(dir / "manifest")));
}

void Warehouse::drop_table(const std::string& schema, const std::string& table) {
    std::error_code ec;
    std::filesystem::remove_all(table_dir(schema, table), ec);
    if (ec) throw StorageError("cannot drop " + schema + "." + table + ": " + ec.message());
}

ConstraintReport Warehouse::check_constraints(const Table& table) const {
    const TableManifest& m = table.manifest();
    ConstraintReport report;
    std::vector<Record> rows = table.scan();
    auto add = [&](ConstraintViolation::Kind kind, std::string detail) {
        report.violations.push_back({kind, m.table_name, std::move(detail)});
    };
    auto describe_tuple = [](const Record& row, const std::vector<std::string>& cols) {
        std::string out = "(";
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out += ", ";
            out += cols[i] + "=" + field_or_null(row, cols[i]).debug();
        }
        return out + ")";
    };

    for (const ColumnSpec& c : m.columns) {
        if (c.nullable) continue;
        for (const Record& row : rows) {
            if (field_or_null(row, c.name).is_null()) add(ConstraintViolation::Kind::null_value, "null " + c.name);
        }
    }

    auto check_unique = [&](const std::vector<std::string>& cols, ConstraintViolation::Kind kind) {
        std::set<std::string> seen;
        for (const Record& row : rows) {
            if (!seen.insert(tuple_key(row, cols)).second) add(kind, "duplicate " + describe_tuple(row, cols));
        }
    };
    if (!m.primary_key.empty()) check_unique(m.primary_key, ConstraintViolation::Kind::primary_key);
    for (const auto& uc : m.unique_constraints) check_unique(uc, ConstraintViolation::Kind::unique);

    std::map<std::string, std::set<std::string>> referenced;
    for (const ForeignKey& fk : m.foreign_keys) {
        auto& keys = referenced[fk.table + "." + fk.key_column];
        if (keys.empty()) {
            if (!has_table(m.schema_name, fk.table)) {
                add(ConstraintViolation::Kind::foreign_key, fk.column + " references missing table " + fk.table);
                continue;
            }
            for (const Record& r : open_table(m.schema_name, fk.table).scan()) {
                keys.insert(field_or_null(r, fk.key_column).to_text());
            }
        }
        for (const Record& row : rows) {
            const Value& v = field_or_null(row, fk.column);
            if (!v.is_null() && !keys.count(v.to_text())) {
                add(ConstraintViolation::Kind::foreign_key,
                    fk.column + "=" + v.debug() + " not found in " + fk.table + "." + fk.key_column);
            }
        }
    }
    return report;
}

}  // namespace hubstar
