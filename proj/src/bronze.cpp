#include "hubstar/bronze.hpp"

#include <json.hpp>

#include <chrono>
#include <set>

#include "file_io.hpp"
#include "hubstar/errors.hpp"
#include "hubstar/layout.hpp"

namespace hubstar {

namespace {

using json = nlohmann::json;

Value from_json(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return {};
        case json::value_t::boolean: return j.get<bool>();
        case json::value_t::number_integer: return j.get<std::int64_t>();
        case json::value_t::number_unsigned: return static_cast<std::int64_t>(j.get<std::uint64_t>());
        case json::value_t::number_float: return j.get<double>();
        case json::value_t::string: return j.get<std::string>();
        case json::value_t::array: {
            Collection items;
            for (const json& element : j) {
                if (!element.is_object()) throw TypeError("collection elements must be objects");
                Record item;
                for (auto it = element.begin(); it != element.end(); ++it) item[it.key()] = from_json(it.value());
                items.push_back(std::move(item));
            }
            return Value(std::move(items));
        }
        default: throw TypeError("unsupported JSON value " + j.dump());
    }
}

Value coerce_field(const SourceColumn& column, const Value& raw, std::size_t row) {
    try {
        return coerce(raw, column.type);
    } catch (const TypeError& e) {
        throw IngestError("row " + std::to_string(row) + ", column " + column.name + ": " + e.what(), row, column.name);
    }
}

std::vector<Record> parse_csv_records(const SourceDef& source, std::string_view text) {
    std::vector<std::vector<CsvField>> rows = parse_csv(text);
    std::vector<Record> out;
    if (rows.empty()) return out;
    const std::vector<CsvField>& header = rows.front();
    std::vector<const SourceColumn*> columns;
    std::set<std::string> seen;
    for (const CsvField& h : header) {
        std::string name = h.value_or("");
        const SourceColumn* c = source.find_column(name);
        if (!c) throw IngestError("header: unknown column '" + name + "'", 0, name);
        if (!seen.insert(name).second) throw IngestError("header: column '" + name + "' repeats", 0, name);
        columns.push_back(c);
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::vector<CsvField>& fields = rows[r];
        if (fields.size() == 1 && !fields[0] && header.size() > 1) continue;  // blank line
        if (fields.size() != header.size()) {
            throw IngestError("row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(fields.size()),
                              r);
        }
        Record record;
        for (const SourceColumn& c : source.columns) record[c.name] = Value();
        for (std::size_t i = 0; i < fields.size(); ++i) {
            Value raw = fields[i] ? Value(*fields[i]) : Value();
            record[columns[i]->name] = coerce_field(*columns[i], raw, r);
        }
        out.push_back(std::move(record));
    }
    return out;
}

std::vector<Record> parse_ndjson_records(const SourceDef& source, std::string_view text) {
    std::vector<Record> out;
    std::size_t row = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        ++row;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw IngestError("row " + std::to_string(row) + ": " + e.what(), row);
        }
        if (!j.is_object()) throw IngestError("row " + std::to_string(row) + ": expected an object", row);
        Record record;
        for (const SourceColumn& c : source.columns) record[c.name] = Value();
        for (auto it = j.begin(); it != j.end(); ++it) {
            const SourceColumn* c = source.find_column(it.key());
            if (!c) throw IngestError("row " + std::to_string(row) + ": unknown column '" + it.key() + "'", row, it.key());
            Value raw;
            try {
                raw = from_json(it.value());
            } catch (const TypeError& e) {
                throw IngestError("row " + std::to_string(row) + ", column " + c->name + ": " + e.what(), row, c->name);
            }
            record[c->name] = coerce_field(*c, raw, row);
        }
        out.push_back(std::move(record));
    }
    return out;
}

}  // namespace

std::vector<std::vector<CsvField>> parse_csv(std::string_view text) {
    std::vector<std::vector<CsvField>> rows;
    if (text.empty()) return rows;
    std::vector<CsvField> row;
    std::string field;
    bool quoted = false;     // field began with a quote
    bool in_quotes = false;  // currently inside quotes
    bool any = false;        // field has content or quotes
    std::size_t line = 1;

    auto end_field = [&] {
        if (quoted || !field.empty()) {
            row.emplace_back(field);
        } else {
            row.emplace_back(std::nullopt);
        }
        field.clear();
        quoted = false;
        any = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (any) throw IngestError("line " + std::to_string(line) + ": stray quote inside unquoted field");
                quoted = in_quotes = any = true;
                break;
            case ',': end_field(); break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                end_row();
                ++line;
                break;
            case '\n':
                end_row();
                ++line;
                break;
            default:
                if (quoted) throw IngestError("line " + std::to_string(line) + ": text after closing quote");
                field += c;
                any = true;
        }
    }
    if (in_quotes) throw IngestError("line " + std::to_string(line) + ": unterminated quoted field");
    if (any || quoted || !row.empty()) end_row();
    return rows;
}

std::vector<Record> parse_source_records(const SourceDef& source, std::string_view text) {
    return source.input_format == InputFormat::csv ? parse_csv_records(source, text) : parse_ndjson_records(source, text);
}

Timestamp resolve_capture_timestamp(const SourceDef& source, const Record& record, Timestamp file_mtime, Timestamp now) {
    for (const CaptureSource& rule : source.capture_timestamp_rule) {
        switch (rule.kind) {
            case CaptureSource::Kind::cdc_column:
            case CaptureSource::Kind::last_modified_column: {
                const Value& v = field_or_null(record, rule.column);
                if (v.is_null()) break;
                Value ts;
                try {
                    ts = coerce(v, ScalarType::timestamp);
                } catch (const TypeError& e) {
                    throw IngestError("column " + rule.column + ": " + e.what(), 0, rule.column);
                }
                return ts.as_timestamp();
            }
            case CaptureSource::Kind::file_modification_time: return file_mtime;
            case CaptureSource::Kind::pipeline_now: return now;
        }
    }
    return now;
}

std::int64_t delete_flag_value(const Value& v) {
    if (v.is_integer()) return v.as_integer() == 1 ? 1 : 0;
    if (v.is_boolean()) return v.as_boolean() ? 1 : 0;
    if (v.is_string()) return v.as_string() == "1" || v.as_string() == "true" ? 1 : 0;
    if (v.is_decimal()) return v.as_decimal() == 1.0 ? 1 : 0;
    return 0;
}

Timestamp file_modification_time(const std::filesystem::path& path) {
    auto ftime = std::filesystem::last_write_time(path);
    auto sys = std::chrono::file_clock::to_sys(ftime);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(sys.time_since_epoch()).count();
    return Timestamp(micros);
}

Table ensure_bronze_table(const ModelSpec& spec, const SourceDef& source, Warehouse& warehouse) {
    TableManifest manifest = bronze_manifest(spec, source);
    if (warehouse.has_table(manifest.schema_name, manifest.table_name)) {
        Table table = warehouse.open_table(manifest.schema_name, manifest.table_name);
        if (!(table.manifest() == manifest)) {
            throw StorageError("bronze table " + manifest.table_name + " does not match source " + source.name);
        }
        return table;
    }
    return warehouse.create_table(manifest);
}

LoadResult ingest_file(const ModelSpec& spec, const SourceDef& source, Warehouse& warehouse,
                       const std::filesystem::path& input_path, std::optional<Timestamp> file_mtime, Timestamp now) {
    if (!std::filesystem::exists(input_path)) throw IngestError("input file not found: " + input_path.string());
    Timestamp mtime = file_mtime ? *file_mtime : file_modification_time(input_path);
    std::vector<Record> records = parse_source_records(source, detail::read_file(input_path));

    std::vector<Record> rows;
    rows.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        Record& record = records[i];
        Record row = record;
        try {
            row[meta::capture_timestamp] = resolve_capture_timestamp(source, record, mtime, now);
        } catch (const IngestError& e) {
            throw IngestError("row " + std::to_string(i + 1) + ", " + e.what(), i + 1, e.column());
        }
        row[meta::load_timestamp] = now;
        row[meta::extract_path] = input_path.string();
        if (source.delete_flag_column) {
            row[meta::delete_flag] = delete_flag_value(field_or_null(record, *source.delete_flag_column));
        }
        rows.push_back(std::move(row));
    }

    Table table = ensure_bronze_table(spec, source, warehouse);
    LoadResult result;
    result.scanned = records.size();
    result.inserted = table.append_rows(rows);
    for (const Record& row : rows) {
        Timestamp ts = row.at(meta::capture_timestamp).as_timestamp();
        if (!result.new_hwm || ts > *result.new_hwm) result.new_hwm = ts;
    }
    return result;
}

}  // namespace hubstar
