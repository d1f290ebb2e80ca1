#include "hubstar/gold.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "hubstar/errors.hpp"
#include "hubstar/layout.hpp"

namespace hubstar {

namespace {

/// A joined row: one record (or none, for an unmatched optional join) per alias.
using Binding = std::vector<const Record*>;

struct Source {
    std::string alias;
    TableManifest manifest;
    std::vector<Record> rows;
    const GoldViewDef* dim = nullptr;
};

TableManifest target_manifest(const ModelSpec& spec, JoinDef::Target target, const std::string& name) {
    switch (target) {
        case JoinDef::Target::hub: {
            const HubDef* h = spec.find_hub(name);
            if (!h) throw ModelError("unknown hub " + name);
            return hub_manifest(spec, *h);
        }
        case JoinDef::Target::star: {
            const StarDef* s = spec.find_star(name);
            if (!s) throw ModelError("unknown star " + name);
            return star_manifest(spec, *s);
        }
        case JoinDef::Target::dim: {
            const GoldViewDef* v = spec.find_view(name);
            if (!v) throw ModelError("unknown gold view " + name);
            return gold_manifest(spec, *v);
        }
    }
    throw ModelError("unknown join target " + name);
}

JoinDef::Target base_target(const GoldViewDef& view) {
    return view.kind == GoldKind::fact ? JoinDef::Target::star : JoinDef::Target::hub;
}

std::vector<Record> read_target(const TableManifest& manifest, const Warehouse& warehouse) {
    if (!warehouse.has_table(manifest.schema_name, manifest.table_name)) {
        throw LoadError("table " + manifest.schema_name + "." + manifest.table_name + " has not been built");
    }
    return warehouse.open_table(manifest.schema_name, manifest.table_name).scan();
}

std::size_t alias_index(const std::vector<Source>& sources, const std::string& alias) {
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (sources[i].alias == alias) return i;
    }
    throw ModelError("unknown alias " + alias);
}

const Value& lookup(const Binding& b, const std::vector<Source>& sources, const ColumnRef& ref) {
    static const Value null_value;
    const Record* r = b[alias_index(sources, ref.alias)];
    return r ? field_or_null(*r, ref.column) : null_value;
}

bool within(const Value& instant, const Record& dim_row, const GoldViewDef& dim) {
    if (!instant.is_timestamp() || !dim.validity) return false;
    const Value& from = field_or_null(dim_row, dim.validity->first);
    const Value& to = field_or_null(dim_row, dim.validity->second);
    if (!from.is_timestamp() || from.as_timestamp() > instant.as_timestamp()) return false;
    return to.is_null() || (to.is_timestamp() && instant.as_timestamp() <= to.as_timestamp());
}

std::string scd2_key(const Binding& b, const std::vector<Source>& sources, const std::vector<ColumnRef>& parts) {
    std::string out;
    bool first = true;
    for (const ColumnRef& part : parts) {
        const Value& v = lookup(b, sources, part);
        if (v.is_null()) continue;
        if (!first) out += '#';
        out += v.to_text();
        first = false;
    }
    return out;
}

}  // namespace

std::vector<Record> current_rows(const std::vector<Record>& rows, const std::vector<std::string>& partition,
                                 const std::vector<SortKey>& order) {
    std::unordered_map<std::string, std::size_t> best;
    auto before = [&](const Record& a, const Record& b) {
        for (const SortKey& k : order) {
            auto c = compare_values(field_or_null(a, k.column), field_or_null(b, k.column));
            if (c != 0) return k.descending ? c > 0 : c < 0;
        }
        return false;
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto [it, fresh] = best.emplace(tuple_key(rows[i], partition), i);
        if (!fresh && before(rows[i], rows[it->second])) it->second = i;
    }
    std::vector<std::size_t> keep;
    for (const auto& [key, i] : best) {
        const Value& flag = field_or_null(rows[i], meta::delete_flag);
        if (flag.is_integer() && flag.as_integer() == 1) continue;
        keep.push_back(i);
    }
    std::sort(keep.begin(), keep.end());
    std::vector<Record> out;
    out.reserve(keep.size());
    for (std::size_t i : keep) out.push_back(rows[i]);
    return out;
}

TableManifest gold_manifest(const ModelSpec& spec, const GoldViewDef& view) {
    std::map<std::string, TableManifest> aliases;
    aliases.emplace(view.base_alias(), target_manifest(spec, base_target(view), view.base));
    for (const JoinDef& j : view.joins) aliases.emplace(j.alias, target_manifest(spec, j.target, j.name));

    TableManifest m;
    m.layer = TableLayer::gold;
    m.schema_name = spec.schema_names.gold();
    m.table_name = view.name;
    if (view.scd2_key_column) {
        m.columns.push_back(ColumnSpec{*view.scd2_key_column, ColumnType::of(ScalarType::string), false});
        m.primary_key = {*view.scd2_key_column};
    }
    std::vector<std::string> base_keys;
    if (view.kind == GoldKind::scd1_dim) {
        if (const HubDef* h = spec.find_hub(view.base)) base_keys = {h->key_column()};
    } else if (view.kind == GoldKind::fact) {
        if (const StarDef* s = spec.find_star(view.base)) base_keys = s->key_columns;
    }
    std::vector<std::string> pk(base_keys.size());
    for (const SelectItem& s : view.output_columns) {
        auto it = aliases.find(s.source.alias);
        if (it == aliases.end()) throw ModelError(view.name + ": unknown alias " + s.source.alias);
        const ColumnSpec* c = it->second.find(s.source.column);
        if (!c) throw ModelError(view.name + ": unknown column " + s.source.alias + "." + s.source.column);
        bool is_key = false;
        if (s.source.alias == view.base_alias() && !view.scd2_key_column) {
            auto k = std::find(base_keys.begin(), base_keys.end(), s.source.column);
            if (k != base_keys.end() && pk[k - base_keys.begin()].empty()) {
                pk[k - base_keys.begin()] = s.output;
                is_key = true;
            }
        }
        m.columns.push_back(ColumnSpec{s.output, c->type, !is_key});
    }
    if (!view.scd2_key_column && std::none_of(pk.begin(), pk.end(), [](const std::string& k) { return k.empty(); })) {
        m.primary_key = pk;
    }
    return m;
}

std::vector<Record> compute_view(const ModelSpec& spec, const GoldViewDef& view, const Warehouse& warehouse) {
    std::vector<Source> sources;
    {
        Source base{view.base_alias(), target_manifest(spec, base_target(view), view.base), {}, nullptr};
        base.rows = read_target(base.manifest, warehouse);
        sources.push_back(std::move(base));
    }
    std::vector<Binding> bindings;
    bindings.reserve(sources[0].rows.size());
    for (const Record& r : sources[0].rows) bindings.push_back(Binding{&r});

    for (const JoinDef& j : view.joins) {
        Source s{j.alias, target_manifest(spec, j.target, j.name), {}, nullptr};
        s.rows = read_target(s.manifest, warehouse);
        if (j.rank_partition) s.rows = current_rows(s.rows, *j.rank_partition, j.rank_order);
        if (j.target == JoinDef::Target::dim) s.dim = spec.find_view(j.name);
        sources.push_back(std::move(s));
        const Source& target = sources.back();
        std::size_t slot = sources.size() - 1;

        // Each condition pairs a column of the joined alias with one already bound.
        std::vector<std::string> target_columns;
        std::vector<ColumnRef> bound_refs;
        for (const auto& [l, r] : j.on) {
            bool left_is_target = l.alias == j.alias;
            const ColumnRef& t = left_is_target ? l : r;
            const ColumnRef& o = left_is_target ? r : l;
            if (t.alias != j.alias || o.alias == j.alias) {
                throw ModelError(view.name + ": join " + j.alias + " needs one side on the joined alias");
            }
            alias_index(sources, o.alias);
            target_columns.push_back(t.column);
            bound_refs.push_back(o);
        }

        std::unordered_map<std::string, std::vector<std::size_t>> index;
        for (std::size_t i = 0; i < target.rows.size(); ++i) {
            const Record& row = target.rows[i];
            bool has_null = std::any_of(target_columns.begin(), target_columns.end(),
                                        [&](const std::string& c) { return field_or_null(row, c).is_null(); });
            if (!has_null) index[tuple_key(row, target_columns)].push_back(i);
        }

        std::vector<Binding> next;
        next.reserve(bindings.size());
        for (Binding& b : bindings) {
            b.resize(sources.size(), nullptr);
            Record probe;
            bool has_null = false;
            for (std::size_t k = 0; k < bound_refs.size(); ++k) {
                const Value& v = lookup(b, sources, bound_refs[k]);
                has_null = has_null || v.is_null();
                probe[target_columns[k]] = v;
            }
            bool matched = false;
            if (!has_null) {
                auto it = index.find(tuple_key(probe, target_columns));
                if (it != index.end()) {
                    Value instant = j.during ? lookup(b, sources, *j.during) : Value();
                    for (std::size_t i : it->second) {
                        if (j.during && !(target.dim && within(instant, target.rows[i], *target.dim))) continue;
                        Binding joined = b;
                        joined[slot] = &target.rows[i];
                        next.push_back(std::move(joined));
                        matched = true;
                    }
                }
            }
            if (!matched && j.optional) next.push_back(std::move(b));
        }
        bindings = std::move(next);
    }

    std::vector<Record> out;
    out.reserve(bindings.size());
    for (const Binding& b : bindings) {
        Record row;
        if (view.scd2_key_column) row[*view.scd2_key_column] = scd2_key(b, sources, view.scd2_key_parts);
        for (const SelectItem& s : view.output_columns) row[s.output] = lookup(b, sources, s.source);
        out.push_back(std::move(row));
    }
    return out;
}

GoldBuildResult build_view(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now) {
    TableManifest manifest = gold_manifest(spec, view);
    std::vector<Record> rows = compute_view(spec, view, warehouse);
    if (warehouse.has_table(manifest.schema_name, manifest.table_name)) {
        Table existing = warehouse.open_table(manifest.schema_name, manifest.table_name);
        if (!(existing.manifest() == manifest)) {
            warehouse.drop_table(manifest.schema_name, manifest.table_name);
            warehouse.create_table(manifest);
        }
    } else {
        warehouse.create_table(manifest);
    }
    Table table = warehouse.open_table(manifest.schema_name, manifest.table_name);
    table.replace_rows(rows);
    return GoldBuildResult{view.name, rows.size(), now};
}

GoldBuildResult build_scd1_dim(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now) {
    if (view.kind != GoldKind::scd1_dim) throw ModelError(view.name + " is not an scd1_dim");
    return build_view(spec, view, warehouse, now);
}

GoldBuildResult build_scd2_dim(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now) {
    if (view.kind != GoldKind::scd2_dim) throw ModelError(view.name + " is not an scd2_dim");
    return build_view(spec, view, warehouse, now);
}

GoldBuildResult build_fact(const ModelSpec& spec, const GoldViewDef& view, Warehouse& warehouse, Timestamp now) {
    if (view.kind != GoldKind::fact) throw ModelError(view.name + " is not a fact");
    return build_view(spec, view, warehouse, now);
}

}  // namespace hubstar
