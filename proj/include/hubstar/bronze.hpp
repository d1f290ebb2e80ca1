#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hubstar/load_result.hpp"
#include "hubstar/model.hpp"
#include "hubstar/storage.hpp"

namespace hubstar {

/// One parsed CSV field; an unquoted empty field is null, a quoted `""` is the empty string.
using CsvField = std::optional<std::string>;

/// RFC 4180 reader: comma separator, double-quote quoting, CRLF or LF line ends.
std::vector<std::vector<CsvField>> parse_csv(std::string_view text);

/// Parses `text` under the source's format and coerces every column to its declared type.
/// Throws IngestError naming the 1-based data row and column.
std::vector<Record> parse_source_records(const SourceDef& source, std::string_view text);

/// First applicable capture rule entry: a non-null cdc or last-modified column, the file
/// modification time, then `now`.
Timestamp resolve_capture_timestamp(const SourceDef& source, const Record& record, Timestamp file_mtime, Timestamp now);

/// Coerces a delete flag source value: 1, "1", true and "true" are deletes.
std::int64_t delete_flag_value(const Value& v);

/// Modification time of `path` as a UTC timestamp.
Timestamp file_modification_time(const std::filesystem::path& path);

/// Opens the source's bronze table, creating it from the model on first use.
Table ensure_bronze_table(const ModelSpec& spec, const SourceDef& source, Warehouse& warehouse);

/// Appends every record of `input_path` to the source's bronze table. `file_mtime` overrides the
/// file system's modification time.
LoadResult ingest_file(const ModelSpec& spec, const SourceDef& source, Warehouse& warehouse,
                       const std::filesystem::path& input_path, std::optional<Timestamp> file_mtime, Timestamp now);

}  // namespace hubstar
