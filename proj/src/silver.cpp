#include "hubstar/silver.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "hubstar/errors.hpp"
#include "hubstar/keygen.hpp"
#include "hubstar/layout.hpp"

namespace hubstar {

namespace {

Value neutral_value(ScalarType type) {
    switch (type) {
        case ScalarType::integer: return std::int64_t{-1};
        case ScalarType::decimal: return 0.0;
        case ScalarType::string: return "null";
        case ScalarType::boolean: return false;
        case ScalarType::timestamp: return Timestamp::epoch();
    }
    return {};
}

Table open_source_table(const ModelSpec& spec, const std::string& source_name, const Warehouse& warehouse) {
    const SourceDef* source = spec.find_source(source_name);
    if (!source) throw LoadError("unknown source " + source_name);
    if (!warehouse.has_table(spec.schema_names.bronze(), source->name)) {
        throw LoadError("bronze table " + source->name + " does not exist; ingest first");
    }
    return warehouse.open_table(spec.schema_names.bronze(), source->name);
}

std::vector<Record> rows_above(const Table& bronze, std::optional<Timestamp> hwm) {
    if (!hwm) return bronze.scan();
    Predicate p{meta::capture_timestamp, Predicate::Op::gt, *hwm};
    return bronze.scan(std::span<const Predicate>(&p, 1));
}

Value coerce_for(const Value& v, ScalarType type, const std::string& table, const std::string& column, std::size_t row) {
    try {
        return coerce(v, type);
    } catch (const TypeError& e) {
        throw LoadError(table + ": bronze row " + std::to_string(row + 1) + ", column " + column + ": " + e.what());
    }
}

Value evaluate_at(const Expr& e, const EvalContext& ctx, const std::string& table, const std::string& column,
                  std::size_t row) {
    try {
        return evaluate(e, ctx);
    } catch (const KeyError& err) {
        throw KeyError(table + ": bronze row " + std::to_string(row + 1) + ", column " + column + ": " + err.what());
    } catch (const TypeError& err) {
        throw LoadError(table + ": bronze row " + std::to_string(row + 1) + ", column " + column + ": " + err.what());
    }
}

std::int64_t bronze_delete_flag(const Record& bronze_row) {
    const Value& v = field_or_null(bronze_row, meta::delete_flag);
    return v.is_integer() ? v.as_integer() : 0;
}

std::optional<Timestamp> table_hwm(const Table& table) {
    std::optional<Timestamp> best;
    for (const Record& row : table.scan()) {
        const Value& v = field_or_null(row, meta::capture_timestamp);
        if (v.is_timestamp() && (!best || v.as_timestamp() > *best)) best = v.as_timestamp();
    }
    return best;
}

/// Ordering for the rn = 1 survivor: dedup_order, then capture_timestamp descending, then later
/// bronze position first.
struct HubCandidate {
    Record values;
    std::vector<Value> order;
    Timestamp capture;
    std::size_t position = 0;
};

bool ranks_before(const HubCandidate& a, const HubCandidate& b, const std::vector<SortKey>& order) {
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto c = compare_values(a.order[i], b.order[i]);
        if (c != 0) return order[i].descending ? c > 0 : c < 0;
    }
    if (a.capture != b.capture) return a.capture > b.capture;
    return a.position > b.position;
}

}  // namespace

// ---------------------------------------------------------------------------
// Key lookup
// ---------------------------------------------------------------------------

std::string hub_scope_key(const HubDef& hub, const Record& row) {
    std::vector<std::string> columns;
    if (hub.bk_scope == BusinessKeyScope::local) columns.push_back(meta::load_source);
    for (const BusinessKeyDef& bk : hub.business_keys) columns.push_back(bk.name);
    return tuple_key(row, columns);
}

std::string HubKeyIndex::find(const HubDef& hub, const Record& business_keys, std::int64_t load_source) {
    auto it = keys_.find(hub.name);
    if (it == keys_.end()) {
        std::map<std::string, std::string> index;
        const std::string& schema = spec_.schema_names.silver();
        if (warehouse_.has_table(schema, hub.table_name())) {
            for (const Record& row : warehouse_.open_table(schema, hub.table_name()).scan()) {
                const Value& key = field_or_null(row, hub.key_column());
                if (key.is_string() && key.as_string() != default_hub_key) index[hub_scope_key(hub, row)] = key.as_string();
            }
        }
        it = keys_.emplace(hub.name, std::move(index)).first;
    }
    Record probe = business_keys;
    probe[meta::load_source] = load_source;
    auto found = it->second.find(hub_scope_key(hub, probe));
    return found == it->second.end() ? std::string() : found->second;
}

std::filesystem::path key_counter_path(const ModelSpec& spec, const HubDef& hub, const Warehouse& warehouse) {
    return warehouse.table_dir(spec.schema_names.silver(), hub.table_name()) / "_counter";
}

// ---------------------------------------------------------------------------
// Hubs
// ---------------------------------------------------------------------------

Record default_hub_row(const ModelSpec& spec, const HubDef& hub) {
    (void)spec;
    Record row;
    row[meta::load_source] = std::int64_t{0};
    row[meta::capture_timestamp] = Timestamp::epoch();
    row[meta::load_timestamp] = Timestamp::epoch();
    row[meta::initial_capture_timestamp] = Timestamp::epoch();
    if (hub.has_delete_flag) row[meta::delete_flag] = std::int64_t{0};
    row[hub.key_column()] = std::string(default_hub_key);
    for (const BusinessKeyDef& bk : hub.business_keys) row[bk.name] = neutral_value(bk.type);
    for (const DescriptiveDef& d : hub.descriptives) {
        if (d.fk_hub) {
            row[d.name] = std::string(default_hub_key);
        } else {
            row[d.name] = d.nullable ? Value() : neutral_value(d.type);
        }
    }
    return row;
}

void init_hub(const ModelSpec& spec, const HubDef& hub, Warehouse& warehouse) {
    Table table = warehouse.open_table(spec.schema_names.silver(), hub.table_name());
    Predicate p{hub.key_column(), Predicate::Op::eq, std::string(default_hub_key)};
    if (!table.scan(std::span<const Predicate>(&p, 1)).empty()) {
        throw LoadError(hub.table_name() + " already holds its default row");
    }
    Record row = default_hub_row(spec, hub);
    table.append_rows(std::span<const Record>(&row, 1));
}

LoadResult load_hub(const ModelSpec& spec, const HubDef& hub, const HubMapping& mapping, Warehouse& warehouse,
                    Timestamp now) {
    const std::string table_name = hub.table_name();
    const SourceDef* source = spec.find_source(mapping.source);
    if (!source) throw LoadError(table_name + ": unknown source " + mapping.source);
    Table table = warehouse.open_table(spec.schema_names.silver(), table_name);
    Table bronze = open_source_table(spec, mapping.source, warehouse);

    Timestamp hwm = table.max_capture_timestamp();
    std::vector<Record> incoming = rows_above(bronze, hwm);

    LoadResult result;
    result.scanned = incoming.size();

    HubKeyIndex index(spec, warehouse);
    EvalContext ctx;
    ctx.load_source = source->load_source_id;
    ctx.model = &spec;
    ctx.lookup = index.lookup();

    std::vector<std::string> mapped_descriptives;
    for (const ColumnMapping& cm : mapping.columns) {
        if (hub.find_descriptive(cm.column)) mapped_descriptives.push_back(cm.column);
    }

    // Steps 2 and 3: evaluate, then keep the rn = 1 survivor per scope tuple.
    std::map<std::string, HubCandidate> survivors;
    std::vector<std::string> arrival;
    for (std::size_t i = 0; i < incoming.size(); ++i) {
        const Record& b = incoming[i];
        ctx.row = &b;
        HubCandidate c;
        c.capture = b.at(meta::capture_timestamp).as_timestamp();
        c.position = i;
        c.values[meta::load_source] = source->load_source_id;
        for (const BusinessKeyDef& bk : hub.business_keys) {
            const Expr* e = mapping.find(bk.name);
            if (!e) throw LoadError(table_name + ": business key " + bk.name + " is not mapped from " + mapping.source);
            Value v = coerce_for(evaluate_at(*e, ctx, table_name, bk.name, i), bk.type, table_name, bk.name, i);
            if (v.is_null()) {
                throw LoadError(table_name + ": bronze row " + std::to_string(i + 1) + ": business key " + bk.name +
                                " must have value");
            }
            c.values[bk.name] = std::move(v);
        }
        for (const std::string& name : mapped_descriptives) {
            const DescriptiveDef* d = hub.find_descriptive(name);
            Value v = coerce_for(evaluate_at(*mapping.find(name), ctx, table_name, name, i), d->type, table_name, name, i);
            if (d->fk_hub && v.is_null()) v = std::string(default_hub_key);
            c.values[name] = std::move(v);
        }
        if (hub.has_delete_flag) c.values[meta::delete_flag] = bronze_delete_flag(b);
        for (const SortKey& k : mapping.dedup_order) c.order.push_back(field_or_null(b, k.column));

        std::string scope = hub_scope_key(hub, c.values);
        auto it = survivors.find(scope);
        if (it == survivors.end()) {
            arrival.push_back(scope);
            survivors.emplace(scope, std::move(c));
        } else if (ranks_before(c, it->second, mapping.dedup_order)) {
            it->second = std::move(c);
        }
    }
    ctx.row = nullptr;

    // Steps 4 and 5: merge.
    std::vector<Record> stored = table.scan();
    std::unordered_map<std::string, std::size_t> existing;
    for (std::size_t i = 0; i < stored.size(); ++i) {
        const Value& key = field_or_null(stored[i], hub.key_column());
        if (key.is_string() && key.as_string() == default_hub_key) continue;
        existing.emplace(hub_scope_key(hub, stored[i]), i);
    }

    std::vector<std::string> compared = mapped_descriptives;
    if (hub.has_delete_flag) compared.push_back(meta::delete_flag);

    std::optional<KeyCounter> counter;
    bool changed = false;
    for (const std::string& scope : arrival) {
        HubCandidate& c = survivors.at(scope);
        auto it = existing.find(scope);
        if (it != existing.end()) {
            Record& row = stored[it->second];
            bool differs = std::any_of(compared.begin(), compared.end(), [&](const std::string& col) {
                return null_safe_distinct(field_or_null(row, col), field_or_null(c.values, col));
            });
            if (!differs) {
                ++result.unchanged_skipped;
                continue;
            }
            for (const std::string& col : compared) row[col] = c.values[col];
            row[meta::capture_timestamp] = c.capture;
            row[meta::load_timestamp] = now;
            ++result.updated;
            changed = true;
            continue;
        }
        Record row = c.values;
        row[meta::capture_timestamp] = c.capture;
        row[meta::load_timestamp] = now;
        row[meta::initial_capture_timestamp] = c.capture;
        for (const DescriptiveDef& d : hub.descriptives) {
            if (!row.count(d.name)) row[d.name] = d.fk_hub ? Value(std::string(default_hub_key)) : Value();
        }
        if (hub.key_type == KeyType::computed) {
            Record bks;
            for (const BusinessKeyDef& bk : hub.business_keys) bks[bk.name] = row[bk.name];
            try {
                row[hub.key_column()] = compute_hub_key(*hub.key_formula, bks, source->load_source_id);
            } catch (const KeyError& e) {
                throw KeyError(table_name + ": bronze row " + std::to_string(c.position + 1) + ": " + e.what());
            }
        } else {
            if (!counter) counter.emplace(key_counter_path(spec, hub, warehouse));
            row[hub.key_column()] = counter->next();
        }
        existing.emplace(scope, stored.size());
        stored.push_back(std::move(row));
        ++result.inserted;
        changed = true;
    }

    if (changed) table.replace_rows(stored);
    result.new_hwm = table_hwm(table);
    return result;
}

// ---------------------------------------------------------------------------
// Stars
// ---------------------------------------------------------------------------

std::vector<std::pair<Record, Value>> explode_collection(const Record& parent, const ItemKeyRule& rule) {
    std::vector<std::pair<Record, Value>> out;
    const Value& column = field_or_null(parent, rule.collection_column);
    if (column.is_null()) return out;
    if (!column.is_collection()) throw LoadError(rule.collection_column + " is not a collection");
    const Collection& items = column.as_collection();
    std::set<std::int64_t> sequences;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const Record& item = items[i];
        switch (rule.mode) {
            case ItemKeyRule::Mode::positional:
                out.emplace_back(item, static_cast<std::int64_t>(i + 1));
                break;
            case ItemKeyRule::Mode::explicit_sequence: {
                const Value& raw = field_or_null(item, rule.attributes.at(0));
                if (raw.is_null()) throw LoadError("item " + std::to_string(i + 1) + ": sequence field " + rule.attributes[0] + " is null");
                Value seq = coerce(raw, ScalarType::integer);
                if (!sequences.insert(seq.as_integer()).second) {
                    throw LoadError("item " + std::to_string(i + 1) + ": duplicate sequence " + seq.to_text());
                }
                out.emplace_back(item, seq);
                break;
            }
            case ItemKeyRule::Mode::concat_of_attributes: {
                std::string key;
                for (std::size_t a = 0; a < rule.attributes.size(); ++a) {
                    const Value& v = field_or_null(item, rule.attributes[a]);
                    if (v.is_null()) throw KeyError("item " + std::to_string(i + 1) + ": attribute " + rule.attributes[a] + " must have value");
                    std::string part = v.to_text();
                    if (part.find(key_delimiter) != std::string::npos) {
                        throw KeyError("item " + std::to_string(i + 1) + ": delimiter collision in " + rule.attributes[a]);
                    }
                    if (a) key += key_delimiter;
                    key += part;
                }
                out.emplace_back(item, rule.hashed ? sha256_hex(key) : key);
                break;
            }
        }
    }
    return out;
}

LoadResult load_star(const ModelSpec& spec, const StarDef& star, const StarMapping& mapping, Warehouse& warehouse,
                     Timestamp now) {
    const std::string table_name = star.table_name();
    const SourceDef* source = spec.find_source(mapping.source);
    if (!source) throw LoadError(table_name + ": unknown source " + mapping.source);
    Table table = warehouse.open_table(spec.schema_names.silver(), table_name);
    Table bronze = open_source_table(spec, mapping.source, warehouse);

    std::vector<Record> incoming = rows_above(bronze, table_hwm(table));
    LoadResult result;
    result.scanned = incoming.size();

    HubKeyIndex index(spec, warehouse);
    EvalContext ctx;
    ctx.load_source = source->load_source_id;
    ctx.model = &spec;
    ctx.lookup = index.lookup();

    const Participant* item_participant = star.item_participant();
    const std::vector<std::string>& key = star.key_columns;
    auto in_key = [&](const std::string& c) { return std::find(key.begin(), key.end(), c) != key.end(); };

    std::vector<Record> batch;
    std::unordered_map<std::string, std::size_t> batch_index;
    for (std::size_t i = 0; i < incoming.size(); ++i) {
        const Record& b = incoming[i];
        std::vector<std::pair<Record, Value>> items;
        if (item_participant) {
            try {
                items = explode_collection(b, *item_participant->item_rule);
            } catch (const Error& e) {
                throw LoadError(table_name + ": bronze row " + std::to_string(i + 1) + ": " + e.what());
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
            row[meta::load_timestamp] = now;
            if (star.has_delete_flag) row[meta::delete_flag] = bronze_delete_flag(b);
            for (const Participant& p : star.participants) {
                if (p.kind == Participant::Kind::item) {
                    row[p.column] = item_key;
                    continue;
                }
                const Expr* e = mapping.find(p.column);
                Value v = e ? coerce_for(evaluate_at(*e, ctx, table_name, p.column, i), participant_type(p), table_name,
                                         p.column, i)
                            : Value();
                if (p.kind == Participant::Kind::hub && v.is_null()) v = std::string(default_hub_key);
                if (v.is_null() && in_key(p.column)) {
                    throw LoadError(table_name + ": bronze row " + std::to_string(i + 1) + ": key column " + p.column +
                                    " is null");
                }
                row[p.column] = std::move(v);
            }
            for (const DescriptiveDef& d : star.descriptives) {
                const Expr* e = mapping.find(d.name);
                Value v = e ? coerce_for(evaluate_at(*e, ctx, table_name, d.name, i), d.type, table_name, d.name, i) : Value();
                if (d.fk_hub && v.is_null()) v = std::string(default_hub_key);
                row[d.name] = std::move(v);
            }
            std::string k = tuple_key(row, key);
            auto [it, fresh] = batch_index.emplace(k, batch.size());
            if (fresh) {
                batch.push_back(std::move(row));
            } else {
                batch[it->second] = std::move(row);
            }
        }
    }
    ctx.row = ctx.item = nullptr;

    std::vector<Record> stored = table.scan();
    std::unordered_map<std::string, std::size_t> existing;
    for (std::size_t i = 0; i < stored.size(); ++i) existing.emplace(tuple_key(stored[i], key), i);
    bool changed = false;
    for (Record& row : batch) {
        auto it = existing.find(tuple_key(row, key));
        if (it == existing.end()) {
            existing.emplace(tuple_key(row, key), stored.size());
            stored.push_back(std::move(row));
            ++result.inserted;
            changed = true;
            continue;
        }
        Record& current = stored[it->second];
        bool same = std::all_of(row.begin(), row.end(), [&](const auto& kv) {
            return kv.first == meta::load_timestamp || !null_safe_distinct(field_or_null(current, kv.first), kv.second);
        });
        if (same) {
            ++result.unchanged_skipped;
            continue;
        }
        current = std::move(row);
        ++result.updated;
        changed = true;
    }

    if (changed) table.replace_rows(stored);
    result.new_hwm = table_hwm(table);
    return result;
}

}  // namespace hubstar
