#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hubstar/conformance.hpp"
#include "hubstar/gold.hpp"
#include "hubstar/load_result.hpp"
#include "hubstar/model.hpp"
#include "hubstar/storage.hpp"

namespace hubstar {

struct TableLoad {
    std::string table;
    LoadResult result;
};

/// Creates every bronze and silver table the model declares and inserts hub default rows.
/// Existing tables are kept; a hub that already holds its default row is left alone.
/// Returns the number of tables created.
std::size_t init_warehouse(const ModelSpec& spec, Warehouse& warehouse);

/// Loads one silver table, or all of them in load order. Every mapping of a table is applied
/// in declaration order; results are summed per table.
std::vector<TableLoad> load_silver(const ModelSpec& spec, Warehouse& warehouse, Timestamp now,
                                   const std::optional<std::string>& table = std::nullopt);

/// Builds one gold view, or all of them with scd2 dimensions ahead of the facts that join them.
std::vector<GoldBuildResult> build_gold(const ModelSpec& spec, Warehouse& warehouse, Timestamp now,
                                        const std::optional<std::string>& view = std::nullopt);

/// Constraint audit of every silver table, in load order.
ConstraintReport check_silver(const ModelSpec& spec, const Warehouse& warehouse);

BronzeHistory read_bronze_history(const ModelSpec& spec, const Warehouse& warehouse);

struct OracleOptions {
    /// Also compare hub capture_timestamp and initial_capture_timestamp. Both depend on batch
    /// boundaries, so this only holds when all of bronze was loaded in one batch.
    bool hub_capture_timestamps = false;
};

/// Diffs every silver table against the oracle recomputed from full bronze history.
std::vector<StateDiff> check_against_oracle(const ModelSpec& spec, const Warehouse& warehouse,
                                            const OracleOptions& options = {});

}  // namespace hubstar
