#pragma once

#include <string>
#include <vector>

#include "hubstar/model.hpp"
#include "hubstar/storage.hpp"

namespace hubstar {

namespace meta {
inline constexpr const char* load_source = "load_source";
inline constexpr const char* capture_timestamp = "capture_timestamp";
inline constexpr const char* load_timestamp = "load_timestamp";
inline constexpr const char* initial_capture_timestamp = "initial_capture_timestamp";
inline constexpr const char* extract_path = "extract_path";
inline constexpr const char* delete_flag = "delete_flag";
}  // namespace meta

/// Bronze: capture_timestamp, load_timestamp, extract_path, [delete_flag], then source columns.
TableManifest bronze_manifest(const ModelSpec& spec, const SourceDef& source);

/// Hub: load_source, capture_timestamp, load_timestamp, initial_capture_timestamp, [delete_flag],
/// hub key, business keys, descriptives.
TableManifest hub_manifest(const ModelSpec& spec, const HubDef& hub);

/// Star: load_source, capture_timestamp, load_timestamp, [delete_flag], participant key columns,
/// descriptives.
TableManifest star_manifest(const ModelSpec& spec, const StarDef& star);

/// Type of a star participant's key column.
ScalarType participant_type(const Participant& p);

/// Column names of a silver table as laid out by the builders above.
std::vector<std::string> hub_columns(const HubDef& hub);
std::vector<std::string> star_columns(const StarDef& star);

}  // namespace hubstar
