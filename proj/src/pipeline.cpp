#include "hubstar/pipeline.hpp"

#include <algorithm>

#include "hubstar/bronze.hpp"
#include "hubstar/errors.hpp"
#include "hubstar/keygen.hpp"
#include "hubstar/layout.hpp"
#include "hubstar/silver.hpp"
#include "hubstar/validate.hpp"

namespace hubstar {

namespace {

void accumulate(LoadResult& total, const LoadResult& r) {
    total.scanned += r.scanned;
    total.inserted += r.inserted;
    total.updated += r.updated;
    total.unchanged_skipped += r.unchanged_skipped;
    if (r.new_hwm && (!total.new_hwm || *r.new_hwm > *total.new_hwm)) total.new_hwm = r.new_hwm;
}

}  // namespace

std::size_t init_warehouse(const ModelSpec& spec, Warehouse& warehouse) {
    std::size_t created = 0;
    auto create = [&](const TableManifest& m) {
        if (warehouse.has_table(m.schema_name, m.table_name)) return;
        warehouse.create_table(m);
        ++created;
    };
    for (const SourceDef& s : spec.sources) create(bronze_manifest(spec, s));
    for (const HubDef& h : spec.hubs) create(hub_manifest(spec, h));
    for (const StarDef& s : spec.stars) create(star_manifest(spec, s));
    for (const HubDef& h : spec.hubs) {
        Table t = warehouse.open_table(spec.schema_names.silver(), h.table_name());
        Predicate p{h.key_column(), Predicate::Op::eq, std::string(default_hub_key)};
        if (t.scan(std::span<const Predicate>(&p, 1)).empty()) init_hub(spec, h, warehouse);
    }
    return created;
}

std::vector<TableLoad> load_silver(const ModelSpec& spec, Warehouse& warehouse, Timestamp now,
                                   const std::optional<std::string>& table) {
    std::vector<std::string> order = resolve_load_order(spec);
    if (table) {
        if (std::find(order.begin(), order.end(), *table) == order.end()) throw LoadError("unknown silver table " + *table);
        order = {*table};
    }
    std::vector<TableLoad> out;
    for (const std::string& name : order) {
        TableLoad load{name, {}};
        for (const HubDef& h : spec.hubs) {
            if (h.table_name() != name) continue;
            for (const HubMapping& m : h.mappings) accumulate(load.result, load_hub(spec, h, m, warehouse, now));
            if (h.mappings.empty()) {
                load.result.new_hwm = warehouse.open_table(spec.schema_names.silver(), name).max_capture_timestamp();
            }
        }
        for (const StarDef& s : spec.stars) {
            if (s.table_name() != name) continue;
            for (const StarMapping& m : s.mappings) accumulate(load.result, load_star(spec, s, m, warehouse, now));
        }
        out.push_back(std::move(load));
    }
    return out;
}

std::vector<GoldBuildResult> build_gold(const ModelSpec& spec, Warehouse& warehouse, Timestamp now,
                                        const std::optional<std::string>& view) {
    std::vector<std::string> order = resolve_gold_order(spec);
    if (view) {
        if (!spec.find_view(*view)) throw LoadError("unknown gold view " + *view);
        order = {*view};
    }
    std::vector<GoldBuildResult> out;
    for (const std::string& name : order) out.push_back(build_view(spec, *spec.find_view(name), warehouse, now));
    return out;
}

ConstraintReport check_silver(const ModelSpec& spec, const Warehouse& warehouse) {
    ConstraintReport report;
    for (const std::string& name : resolve_load_order(spec)) {
        if (!warehouse.has_table(spec.schema_names.silver(), name)) {
            throw StorageError("silver table " + name + " does not exist; run init");
        }
        ConstraintReport r = warehouse.check_constraints(warehouse.open_table(spec.schema_names.silver(), name));
        report.violations.insert(report.violations.end(), r.violations.begin(), r.violations.end());
    }
    return report;
}

BronzeHistory read_bronze_history(const ModelSpec& spec, const Warehouse& warehouse) {
    BronzeHistory history;
    for (const SourceDef& s : spec.sources) {
        if (warehouse.has_table(spec.schema_names.bronze(), s.name)) {
            history[s.name] = warehouse.open_table(spec.schema_names.bronze(), s.name).scan();
        } else {
            history[s.name] = {};
        }
    }
    return history;
}

std::vector<StateDiff> check_against_oracle(const ModelSpec& spec, const Warehouse& warehouse,
                                            const OracleOptions& options) {
    BronzeHistory history = read_bronze_history(spec, warehouse);
    HubKeyIndex index(spec, warehouse);
    HubKeyLookup lookup = index.lookup();
    const std::string& schema = spec.schema_names.silver();
    std::vector<StateDiff> diffs;
    for (const HubDef& h : spec.hubs) {
        Table table = warehouse.open_table(schema, h.table_name());
        DiffOptions opts;
        if (!options.hub_capture_timestamps) {
            opts.ignored_columns.insert(meta::capture_timestamp);
            opts.ignored_columns.insert(meta::initial_capture_timestamp);
        }
        if (h.key_type == KeyType::system_generated) {
            // Counter values are arrival-dependent; rows are matched on the business key scope.
            opts.ignored_columns.insert(h.key_column());
            if (h.bk_scope == BusinessKeyScope::local) opts.key_columns.push_back(meta::load_source);
            for (const BusinessKeyDef& bk : h.business_keys) opts.key_columns.push_back(bk.name);
        }
        std::vector<Record> expected = expected_hub_state(spec, h, history, lookup);
        diffs.push_back(diff_states(table.manifest(), table.scan(), expected, opts));
    }
    for (const StarDef& s : spec.stars) {
        Table table = warehouse.open_table(schema, s.table_name());
        std::vector<Record> expected = expected_star_state(spec, s, history, lookup);
        diffs.push_back(diff_states(table.manifest(), table.scan(), expected));
    }
    return diffs;
}

}  // namespace hubstar
