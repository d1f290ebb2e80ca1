#include "hubstar/layout.hpp"

#include <algorithm>

namespace hubstar {

namespace {

ColumnSpec col(std::string name, ScalarType type, bool nullable) {
    return ColumnSpec{std::move(name), ColumnType::of(type), nullable};
}

}  // namespace

TableManifest bronze_manifest(const ModelSpec& spec, const SourceDef& source) {
    TableManifest m;
    m.layer = TableLayer::bronze;
    m.schema_name = spec.schema_names.bronze();
    m.table_name = source.name;
    m.columns.push_back(col(meta::capture_timestamp, ScalarType::timestamp, false));
    m.columns.push_back(col(meta::load_timestamp, ScalarType::timestamp, false));
    m.columns.push_back(col(meta::extract_path, ScalarType::string, false));
    if (source.delete_flag_column) m.columns.push_back(col(meta::delete_flag, ScalarType::integer, false));
    for (const SourceColumn& c : source.columns) m.columns.push_back(ColumnSpec{c.name, c.type, true});
    return m;
}

TableManifest hub_manifest(const ModelSpec& spec, const HubDef& hub) {
    TableManifest m;
    m.layer = TableLayer::silver_hub;
    m.schema_name = spec.schema_names.silver();
    m.table_name = hub.table_name();
    m.columns.push_back(col(meta::load_source, ScalarType::integer, false));
    m.columns.push_back(col(meta::capture_timestamp, ScalarType::timestamp, false));
    m.columns.push_back(col(meta::load_timestamp, ScalarType::timestamp, false));
    m.columns.push_back(col(meta::initial_capture_timestamp, ScalarType::timestamp, false));
    if (hub.has_delete_flag) m.columns.push_back(col(meta::delete_flag, ScalarType::integer, false));
    m.columns.push_back(col(hub.key_column(), ScalarType::string, false));
    std::vector<std::string> bks;
    for (const BusinessKeyDef& bk : hub.business_keys) {
        m.columns.push_back(col(bk.name, bk.type, false));
        bks.push_back(bk.name);
    }
    for (const DescriptiveDef& d : hub.descriptives) {
        // Foreign keys always resolve, to the default key when the source is null.
        m.columns.push_back(col(d.name, d.type, d.nullable && !d.fk_hub));
        if (d.fk_hub) {
            const HubDef* target = spec.find_hub(*d.fk_hub);
            std::string table = target ? target->table_name() : "hub_" + *d.fk_hub;
            std::string key = target ? target->key_column() : *d.fk_hub + "_key";
            m.foreign_keys.push_back({d.name, table, key});
        }
    }
    m.primary_key = {hub.key_column()};
    if (hub.bk_scope == BusinessKeyScope::local) bks.insert(bks.begin(), meta::load_source);
    if (!hub.business_keys.empty()) m.unique_constraints.push_back(bks);
    return m;
}

ScalarType participant_type(const Participant& p) {
    switch (p.kind) {
        case Participant::Kind::hub: return ScalarType::string;
        case Participant::Kind::time: return ScalarType::timestamp;
        case Participant::Kind::item:
            if (p.item_rule && p.item_rule->mode == ItemKeyRule::Mode::concat_of_attributes) return ScalarType::string;
            return ScalarType::integer;
    }
    return ScalarType::string;
}

TableManifest star_manifest(const ModelSpec& spec, const StarDef& star) {
    TableManifest m;
    m.layer = TableLayer::silver_star;
    m.schema_name = spec.schema_names.silver();
    m.table_name = star.table_name();
    m.columns.push_back(col(meta::load_source, ScalarType::integer, false));
    m.columns.push_back(col(meta::capture_timestamp, ScalarType::timestamp, false));
    m.columns.push_back(col(meta::load_timestamp, ScalarType::timestamp, false));
    if (star.has_delete_flag) m.columns.push_back(col(meta::delete_flag, ScalarType::integer, false));
    for (const Participant& p : star.participants) {
        bool in_key = std::find(star.key_columns.begin(), star.key_columns.end(), p.column) != star.key_columns.end();
        bool nullable = p.kind == Participant::Kind::time && !in_key;
        m.columns.push_back(col(p.column, participant_type(p), nullable));
        if (p.kind == Participant::Kind::hub) {
            const HubDef* target = spec.find_hub(p.hub);
            m.foreign_keys.push_back(
                {p.column, target ? target->table_name() : "hub_" + p.hub, target ? target->key_column() : p.hub + "_key"});
        }
    }
    for (const DescriptiveDef& d : star.descriptives) {
        m.columns.push_back(col(d.name, d.type, d.nullable && !d.fk_hub));
        if (d.fk_hub) {
            const HubDef* target = spec.find_hub(*d.fk_hub);
            m.foreign_keys.push_back({d.name, target ? target->table_name() : "hub_" + *d.fk_hub,
                                      target ? target->key_column() : *d.fk_hub + "_key"});
        }
    }
    m.primary_key = star.key_columns;
    return m;
}

std::vector<std::string> hub_columns(const HubDef& hub) {
    std::vector<std::string> out = {meta::load_source, meta::capture_timestamp, meta::load_timestamp,
                                    meta::initial_capture_timestamp};
    if (hub.has_delete_flag) out.push_back(meta::delete_flag);
    out.push_back(hub.key_column());
    for (const BusinessKeyDef& bk : hub.business_keys) out.push_back(bk.name);
    for (const DescriptiveDef& d : hub.descriptives) out.push_back(d.name);
    return out;
}

std::vector<std::string> star_columns(const StarDef& star) {
    std::vector<std::string> out = {meta::load_source, meta::capture_timestamp, meta::load_timestamp};
    if (star.has_delete_flag) out.push_back(meta::delete_flag);
    for (const Participant& p : star.participants) out.push_back(p.column);
    for (const DescriptiveDef& d : star.descriptives) out.push_back(d.name);
    return out;
}

}  // namespace hubstar
