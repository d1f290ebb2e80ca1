#pragma once

#include <string>
#include <vector>

#include "hubstar/model.hpp"
#include "hubstar/storage.hpp"

namespace hubstar {

struct GoldBuildResult {
    std::string view_name;
    std::size_t rows = 0;
    Timestamp built_at;
};

/// Top row per partition by `order`, dropped entirely when that row has delete_flag = 1.
/// Output keeps the input order of the surviving rows.
std::vector<Record> current_rows(const std::vector<Record>& rows, const std::vector<std::string>& partition,
                                 const std::vector<SortKey>& order);

/// Output table layout of a view: the scd2 key (if any) followed by the select list.
TableManifest gold_manifest(const ModelSpec& spec, const GoldViewDef& view);

/// Rows of a view computed from the current silver and gold tables, without writing them.
std::vector<Record> compute_view(const ModelSpec& spec, const GoldViewDef& view, const Warehouse& warehouse);

/// Recomputes a view and replaces its gold table.
GoldBuildResult build_view(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now);

GoldBuildResult build_scd1_dim(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now);
GoldBuildResult build_scd2_dim(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now);
GoldBuildResult build_fact(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now);

}  // namespace hubstar
