#include "hubstar/conformance.hpp"

#include <algorithm>
#include <set>

#include "hubstar/errors.hpp"
#include "hubstar/keygen.hpp"
#include "hubstar/layout.hpp"

namespace hubstar {

namespace {

const std::vector<Record>& history_of(const BronzeHistory& history, const std::string& source) {
    static const std::vector<Record> none;
    auto it = history.find(source);
    return it == history.end() ? none : it->second;
}

std::string scope_of(const HubDef& hub, const Record& row) {
    std::string out;
    if (hub.bk_scope == BusinessKeyScope::local) out += field_or_null(row, meta::load_source).debug() + "|";
    for (const BusinessKeyDef& bk : hub.business_keys) out += field_or_null(row, bk.name).debug() + "|";
    return out;
}

struct Version {
    const Record* bronze;
    std::size_t position;
    Record values;
};

/// True when version `a` outranks `b`: dedup order, capture descending, later position.
bool newer(const Version& a, const Version& b, const std::vector<SortKey>& order) {
    for (const SortKey& k : order) {
        auto c = compare_values(field_or_null(*a.bronze, k.column), field_or_null(*b.bronze, k.column));
        if (c == 0) continue;
        return k.descending ? c > 0 : c < 0;
    }
    Timestamp ta = a.bronze->at(meta::capture_timestamp).as_timestamp();
    Timestamp tb = b.bronze->at(meta::capture_timestamp).as_timestamp();
    if (ta != tb) return ta > tb;
    return a.position > b.position;
}

Value neutral(ScalarType type) {
    switch (type) {
        case ScalarType::string: return Value("null");
        case ScalarType::integer: return Value(std::int64_t{-1});
        case ScalarType::decimal: return Value(0.0);
        case ScalarType::boolean: return Value(false);
        case ScalarType::timestamp: return Value(Timestamp::epoch());
    }
    return Value();
}

}  // namespace

std::vector<Record> expected_hub_state(const ModelSpec& spec, const HubDef& hub, const BronzeHistory& history,
                                       const HubKeyLookup& lookup) {
    std::vector<Record> state;
    {
        Record d;
        d[meta::load_source] = std::int64_t{0};
        d[meta::capture_timestamp] = Timestamp::epoch();
        d[meta::load_timestamp] = Timestamp::epoch();
        d[meta::initial_capture_timestamp] = Timestamp::epoch();
        if (hub.has_delete_flag) d[meta::delete_flag] = std::int64_t{0};
        d[hub.key_column()] = std::string(default_hub_key);
        for (const BusinessKeyDef& bk : hub.business_keys) {
            d[bk.name] = neutral(bk.type);
        }
        for (const DescriptiveDef& desc : hub.descriptives) {
            if (desc.fk_hub) {
                d[desc.name] = std::string(default_hub_key);
            } else if (desc.nullable) {
                d[desc.name] = Value();
            } else {
                d[desc.name] = neutral(desc.type);
            }
        }
        state.push_back(std::move(d));
    }
    std::map<std::string, std::size_t> rows_by_scope;

    for (const HubMapping& mapping : hub.mappings) {
        const SourceDef* source = spec.find_source(mapping.source);
        if (!source) throw ModelError("unknown source " + mapping.source);
        EvalContext ctx;
        ctx.model = &spec;
        ctx.load_source = source->load_source_id;
        ctx.lookup = lookup;

        std::map<std::string, Version> top;
        std::set<std::string> seen;
        std::vector<std::string> order;
        const std::vector<Record>& rows = history_of(history, mapping.source);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            ctx.row = &rows[i];
            Version v{&rows[i], i, {}};
            v.values[meta::load_source] = source->load_source_id;
            for (const ColumnMapping& cm : mapping.columns) {
                ScalarType type = ScalarType::string;
                const DescriptiveDef* d = hub.find_descriptive(cm.column);
                if (d) type = d->type;
                for (const BusinessKeyDef& bk : hub.business_keys) {
                    if (bk.name == cm.column) type = bk.type;
                }
                Value value = coerce(evaluate(cm.expr, ctx), type);
                if (d && d->fk_hub && value.is_null()) value = std::string(default_hub_key);
                v.values[cm.column] = std::move(value);
            }
            if (hub.has_delete_flag) {
                const Value& flag = field_or_null(rows[i], meta::delete_flag);
                v.values[meta::delete_flag] = flag.is_integer() ? flag : Value(std::int64_t{0});
            }
            std::string scope = scope_of(hub, v.values);
            if (seen.insert(scope).second) {
                order.push_back(scope);
                top.emplace(scope, std::move(v));
            } else {
                Version& best = top.at(scope);
                if (newer(v, best, mapping.dedup_order)) best = std::move(v);
            }
        }

        for (const std::string& scope : order) {
            const Version& v = top.at(scope);
            Timestamp captured = v.bronze->at(meta::capture_timestamp).as_timestamp();
            auto existing = rows_by_scope.find(scope);
            if (existing != rows_by_scope.end()) {
                Record& row = state[existing->second];
                for (const auto& [col, value] : v.values) {
                    if (hub.is_business_key(col) || col == meta::load_source) continue;
                    row[col] = value;
                }
                row[meta::capture_timestamp] = std::max(row[meta::capture_timestamp].as_timestamp(), captured);
                continue;
            }
            Record row = v.values;
            row[meta::capture_timestamp] = captured;
            row[meta::load_timestamp] = Value();
            row[meta::initial_capture_timestamp] = captured;
            for (const DescriptiveDef& d : hub.descriptives) {
                if (!row.count(d.name)) row[d.name] = d.fk_hub ? Value(std::string(default_hub_key)) : Value();
            }
            Record bks;
            for (const BusinessKeyDef& bk : hub.business_keys) bks[bk.name] = row.at(bk.name);
            if (hub.key_type == KeyType::computed) {
                row[hub.key_column()] = compute_hub_key(*hub.key_formula, bks, source->load_source_id);
            } else {
                std::string key = lookup ? lookup(hub, bks, source->load_source_id) : std::string();
                row[hub.key_column()] = key.empty() ? Value() : Value(key);
            }
            rows_by_scope.emplace(scope, state.size());
            state.push_back(std::move(row));
        }
    }
    return state;
}

std::vector<Record> expected_star_state(const ModelSpec& spec, const StarDef& star, const BronzeHistory& history,
                                        const HubKeyLookup& lookup) {
    std::vector<Record> state;
    std::map<std::string, std::size_t> by_key;
    const Participant* item_participant = star.item_participant();
    for (const StarMapping& mapping : star.mappings) {
        const SourceDef* source = spec.find_source(mapping.source);
        if (!source) throw ModelError("unknown source " + mapping.source);
        EvalContext ctx;
        ctx.model = &spec;
        ctx.load_source = source->load_source_id;
        ctx.lookup = lookup;
        for (const Record& b : history_of(history, mapping.source)) {
            // Items of the parent row, each with its key value; one pseudo-item without a collection.
            std::vector<std::pair<Record, Value>> items;
            if (item_participant) {
                const ItemKeyRule& rule = *item_participant->item_rule;
                const Value& coll = field_or_null(b, rule.collection_column);
                if (coll.is_collection()) {
                    std::int64_t seq = 0;
                    for (const Record& item : coll.as_collection()) {
                        ++seq;
                        Value key;
                        if (rule.mode == ItemKeyRule::Mode::positional) {
                            key = seq;
                        } else if (rule.mode == ItemKeyRule::Mode::explicit_sequence) {
                            key = coerce(field_or_null(item, rule.attributes.at(0)), ScalarType::integer);
                        } else {
                            std::string joined;
                            for (std::size_t a = 0; a < rule.attributes.size(); ++a) {
                                joined += (a ? "#" : "") + field_or_null(item, rule.attributes[a]).to_text();
                            }
                            key = rule.hashed ? Value(sha256_hex(joined)) : Value(joined);
                        }
                        items.emplace_back(item, key);
                    }
                }
            } else {
                items.emplace_back(Record{}, Value());
            }
            for (const auto& [item, item_key] : items) {
                ctx.row = &b;
                ctx.item = item_participant ? &item : nullptr;
                Record row;
                row[meta::load_source] = source->load_source_id;
                row[meta::capture_timestamp] = b.at(meta::capture_timestamp);
                row[meta::load_timestamp] = Value();
                if (star.has_delete_flag) {
                    const Value& flag = field_or_null(b, meta::delete_flag);
                    row[meta::delete_flag] = flag.is_integer() ? flag : Value(std::int64_t{0});
                }
                for (const Participant& p : star.participants) {
                    if (p.kind == Participant::Kind::item) {
                        row[p.column] = item_key;
                        continue;
                    }
                    const Expr* e = mapping.find(p.column);
                    Value v = e ? coerce(evaluate(*e, ctx), participant_type(p)) : Value();
                    if (p.kind == Participant::Kind::hub && v.is_null()) v = std::string(default_hub_key);
                    row[p.column] = std::move(v);
                }
                for (const DescriptiveDef& d : star.descriptives) {
                    const Expr* e = mapping.find(d.name);
                    Value v = e ? coerce(evaluate(*e, ctx), d.type) : Value();
                    if (d.fk_hub && v.is_null()) v = std::string(default_hub_key);
                    row[d.name] = std::move(v);
                }
                std::string key = display_key(row, star.key_columns);
                auto [it, fresh] = by_key.emplace(key, state.size());
                if (fresh) {
                    state.push_back(std::move(row));
                } else {
                    state[it->second] = std::move(row);
                }
            }
        }
    }
    return state;
}

std::string display_key(const Record& row, const std::vector<std::string>& columns) {
    std::string out = "(";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ", ";
        out += field_or_null(row, columns[i]).debug();
    }
    return out + ")";
}

StateDiff diff_states(const TableManifest& manifest, const std::vector<Record>& actual,
                      const std::vector<Record>& expected, const DiffOptions& options) {
    std::vector<std::string> key = options.key_columns.empty() ? manifest.primary_key : options.key_columns;
    if (key.empty()) throw StorageError(manifest.table_name + ": diff requires key columns");
    for (const std::string& k : key) {
        if (!manifest.find(k)) throw StorageError(manifest.table_name + ": unknown key column " + k);
    }
    auto index = [&](const std::vector<Record>& rows, const char* side) {
        std::map<std::string, const Record*> out;
        for (const Record& r : rows) {
            for (const auto& [col, v] : r) {
                if (!manifest.find(col)) throw StorageError(manifest.table_name + ": " + side + " row has unknown column " + col);
            }
            if (!out.emplace(display_key(r, key), &r).second) {
                throw StorageError(manifest.table_name + ": " + side + " repeats key " + display_key(r, key));
            }
        }
        return out;
    };
    auto a = index(actual, "actual");
    auto e = index(expected, "expected");

    StateDiff diff;
    for (const auto& [k, row] : e) {
        if (!a.count(k)) diff.missing_rows.push_back({manifest.table_name, k, {}});
    }
    for (const auto& [k, row] : a) {
        auto it = e.find(k);
        if (it == e.end()) {
            diff.extra_rows.push_back({manifest.table_name, k, {}});
            continue;
        }
        RowDelta delta{manifest.table_name, k, {}};
        for (const ColumnSpec& c : manifest.columns) {
            if (options.ignored_columns.count(c.name)) continue;
            const Value& av = field_or_null(*row, c.name);
            const Value& ev = field_or_null(*it->second, c.name);
            if (null_safe_distinct(av, ev)) delta.columns.push_back({c.name, av, ev});
        }
        if (!delta.columns.empty()) diff.mismatched_rows.push_back(std::move(delta));
    }
    return diff;
}

}  // namespace hubstar
