#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "hubstar/expr.hpp"
#include "hubstar/model.hpp"
#include "hubstar/storage.hpp"

namespace hubstar {

/// Bronze tables by source name, rows in storage order.
using BronzeHistory = std::map<std::string, std::vector<Record>>;

/// Latest version per business key over the whole history, plus the default row. Both capture
/// timestamps are taken from the surviving version, which is what one batch would store.
/// System-generated keys are not reconstructible; their key column is resolved through `lookup`
/// when given, else left null.
std::vector<Record> expected_hub_state(const ModelSpec& spec, const HubDef& hub, const BronzeHistory& history,
                                       const HubKeyLookup& lookup = {});

/// Every bronze row exploded and mapped; the last arrival per composite key wins.
std::vector<Record> expected_star_state(const ModelSpec& spec, const StarDef& star, const BronzeHistory& history,
                                        const HubKeyLookup& lookup = {});

struct ColumnDelta {
    std::string column;
    Value actual;
    Value expected;
};

struct RowDelta {
    std::string table;
    std::string key;
    std::vector<ColumnDelta> columns;
};

struct StateDiff {
    std::vector<RowDelta> missing_rows;
    std::vector<RowDelta> extra_rows;
    std::vector<RowDelta> mismatched_rows;

    bool empty() const { return missing_rows.empty() && extra_rows.empty() && mismatched_rows.empty(); }
    std::size_t size() const { return missing_rows.size() + extra_rows.size() + mismatched_rows.size(); }
};

struct DiffOptions {
    std::set<std::string> ignored_columns = {"load_timestamp"};
    /// Rows are matched on these columns; empty means the manifest's primary key.
    std::vector<std::string> key_columns;
};

/// Symmetric difference keyed by the manifest's primary key (or the override). Rows appear in
/// key order. Throws StorageError when a key repeats within one side.
StateDiff diff_states(const TableManifest& manifest, const std::vector<Record>& actual,
                      const std::vector<Record>& expected, const DiffOptions& options = {});

/// Human-readable key display used in RowDelta::key.
std::string display_key(const Record& row, const std::vector<std::string>& columns);

}  // namespace hubstar
