#include "hubstar/validate.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "hubstar/errors.hpp"
#include "hubstar/layout.hpp"

namespace hubstar {

bool ValidationReport::has(const std::string& rule) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

namespace {

class Validator {
public:
    explicit Validator(const ModelSpec& spec) : spec_(spec) {}

    ValidationReport run() {
        check_schemas();
        check_names();
        for (const SourceDef& s : spec_.sources) check_source(s);
        for (const HubDef& h : spec_.hubs) check_hub(h);
        check_hub_cycles();
        for (const StarDef& s : spec_.stars) check_star(s);
        for (const GoldViewDef& v : spec_.gold_views) check_view(v);
        return std::move(report_);
    }

private:
    void add(std::string rule, std::string location, std::string message) {
        report_.violations.push_back({std::move(rule), std::move(location), std::move(message)});
    }

    void check_schemas() {
        const auto& names = spec_.schema_names.names;
        bool complete = names.size() == 3 && names.count(Layer::bronze) && names.count(Layer::silver) &&
                        names.count(Layer::gold);
        if (!complete) {
            add("schema.layers", "schemas", "schema names must cover exactly bronze, silver and gold");
            return;
        }
        std::set<std::string> distinct;
        for (const auto& [layer, name] : names) {
            if (name.empty()) add("schema.layers", "schemas", std::string(to_string(layer)) + " schema name is empty");
            distinct.insert(name);
        }
        if (distinct.size() != 3) add("schema.layers", "schemas", "layers must use distinct schema names");
    }

    void check_names() {
        std::map<std::string, std::string> seen;
        auto claim = [&](const std::string& name, const std::string& location) {
            auto [it, fresh] = seen.emplace(name, location);
            if (!fresh) add("name.duplicate", location, "name '" + name + "' already used by " + it->second);
        };
        for (const SourceDef& s : spec_.sources) claim(s.name, "source:" + s.name);
        for (const HubDef& h : spec_.hubs) claim(h.name, "hub:" + h.name);
        for (const StarDef& s : spec_.stars) claim(s.name, "star:" + s.name);
        for (const GoldViewDef& v : spec_.gold_views) claim(v.name, "gold:" + v.name);
    }

    // -- sources ------------------------------------------------------------

    void check_source(const SourceDef& s) {
        std::string loc = "source:" + s.name;
        if (s.load_source_id < 1) {
            add("source.load_source", loc, "load_source must be >= 1 (0 is reserved for default rows)");
        }
        std::set<std::string> names = {meta::capture_timestamp, meta::load_timestamp, meta::extract_path,
                                       meta::delete_flag};
        for (const SourceColumn& c : s.columns) {
            if (!names.insert(c.name).second) add("source.duplicate_column", loc, "column '" + c.name + "' repeats or shadows metadata");
            if (c.type.is_collection && s.input_format == InputFormat::csv) {
                add("source.csv_collection", loc, "collection column '" + c.name + "' requires ndjson input");
            }
        }
        if (s.capture_timestamp_rule.empty()) add("source.capture_rule", loc, "capture_timestamp rule is empty");
        for (const CaptureSource& cs : s.capture_timestamp_rule) {
            if (cs.kind != CaptureSource::Kind::cdc_column && cs.kind != CaptureSource::Kind::last_modified_column) continue;
            const SourceColumn* c = s.find_column(cs.column);
            if (!c) {
                add("source.capture_rule", loc, "capture column '" + cs.column + "' is not a declared column");
            } else if (c->type.is_collection ||
                       (c->type.scalar != ScalarType::timestamp && c->type.scalar != ScalarType::string)) {
                add("source.capture_rule", loc, "capture column '" + cs.column + "' must be a timestamp");
            }
        }
        if (s.delete_flag_column && !s.find_column(*s.delete_flag_column)) {
            add("source.delete_flag", loc, "delete_flag_column '" + *s.delete_flag_column + "' is not declared");
        }
    }

    // -- expressions --------------------------------------------------------

    /// Checks a mapping expression against source columns, item fields and hub refs.
    void check_mapping_expr(const Expr& e, const SourceDef* source, const ItemKeyRule* item, const std::string& loc) {
        switch (e.kind) {
            case Expr::Kind::literal: break;
            case Expr::Kind::column:
                if (e.item_field) {
                    if (!item) {
                        add("mapping.unknown_column", loc, "item." + e.name + " used outside a collection mapping");
                    } else if (source) {
                        const SourceColumn* coll = source->find_column(item->collection_column);
                        if (coll && coll->type.is_collection &&
                            std::none_of(coll->type.fields.begin(), coll->type.fields.end(),
                                         [&](const FieldType& f) { return f.name == e.name; })) {
                            add("mapping.unknown_column", loc, "item field '" + e.name + "' not in " + item->collection_column);
                        }
                    }
                } else if (source && !source->find_column(e.name) && e.name != meta::capture_timestamp &&
                           e.name != meta::load_timestamp && e.name != meta::extract_path &&
                           !(e.name == meta::delete_flag && source->delete_flag_column)) {
                    add("mapping.unknown_column", loc, "'" + e.name + "' is not a column of source " + source->name);
                }
                break;
            case Expr::Kind::hub_ref: {
                const HubDef* hub = spec_.find_hub(e.name);
                if (!hub) {
                    add("mapping.ref", loc, "ref to unknown hub '" + e.name + "'");
                } else if (hub->business_keys.size() != e.args.size()) {
                    add("mapping.ref", loc, "ref " + e.name + " takes " + std::to_string(hub->business_keys.size()) +
                                                " business key argument(s)");
                }
                break;
            }
            case Expr::Kind::call:
                if (e.name == "concat") check_delimiter(e, loc);
                break;
            case Expr::Kind::cast: break;
        }
        for (const Expr& a : e.args) check_mapping_expr(a, source, item, loc);
    }

    void check_delimiter(const Expr& concat, const std::string& loc) {
        const Expr* d = concat.args.empty() ? nullptr : &concat.args[0];
        if (!d || d->kind != Expr::Kind::literal || !d->value.is_string() || d->value.as_string().empty()) {
            add("key.delimiter", loc, "concat must declare a non-empty string delimiter as its first argument");
        }
    }

    void check_key_formula(const HubDef& hub, const std::string& loc) {
        if (hub.key_type == KeyType::system_generated) {
            if (hub.key_formula) add("hub.key_formula", loc, "system-generated keys take no formula");
            return;
        }
        if (!hub.key_formula) {
            add("hub.key_formula", loc, "computed key requires a formula");
            return;
        }
        const Expr& f = hub.key_formula->expression;
        for (const std::string& c : referenced_columns(f)) {
            if (!hub.is_business_key(c)) add("hub.formula_column", loc, "key formula references non-business-key '" + c + "'");
        }
        std::function<void(const Expr&)> walk = [&](const Expr& e) {
            if (e.kind == Expr::Kind::hub_ref) add("hub.formula_column", loc, "key formula may not use ref");
            if (e.kind == Expr::Kind::column && e.item_field) add("hub.formula_column", loc, "key formula may not use item fields");
            if (e.kind == Expr::Kind::call && e.name == "concat") check_delimiter(e, loc);
            for (const Expr& a : e.args) walk(a);
        };
        walk(f);
        if (hub.bk_scope == BusinessKeyScope::local && !calls_function(f, "load_source")) {
            add("hub.local_scope", loc, "local business keys require load_source() in the key formula");
        }
    }

    void check_descriptives(const std::vector<DescriptiveDef>& ds, std::set<std::string>& names, const std::string& loc) {
        for (const DescriptiveDef& d : ds) {
            if (!names.insert(d.name).second) add("table.duplicate_column", loc, "column '" + d.name + "' is declared twice");
            if (d.fk_hub) {
                if (!spec_.find_hub(*d.fk_hub)) {
                    add("fk.unknown_hub", loc, "descriptive '" + d.name + "' references unknown hub '" + *d.fk_hub + "'");
                }
                if (d.type != ScalarType::string) add("fk.type", loc, "foreign key '" + d.name + "' must be a string (hub keys are strings)");
            }
        }
    }

    // -- hubs ---------------------------------------------------------------

    void check_hub(const HubDef& hub) {
        std::string loc = "hub:" + hub.name;
        if (hub.business_keys.empty()) add("hub.business_key", loc, "hub requires business key");
        std::set<std::string> names = {meta::load_source, meta::capture_timestamp, meta::load_timestamp,
                                       meta::initial_capture_timestamp, meta::delete_flag, hub.key_column()};
        for (const BusinessKeyDef& bk : hub.business_keys) {
            if (!names.insert(bk.name).second) add("table.duplicate_column", loc, "column '" + bk.name + "' is declared twice");
        }
        check_key_formula(hub, loc);
        check_descriptives(hub.descriptives, names, loc);

        for (const HubMapping& m : hub.mappings) {
            std::string mloc = loc + "/mapping:" + m.source;
            const SourceDef* source = spec_.find_source(m.source);
            if (!source) add("mapping.unknown_source", mloc, "unknown source '" + m.source + "'");
            for (const ColumnMapping& cm : m.columns) {
                if (!hub.is_business_key(cm.column) && !hub.find_descriptive(cm.column)) {
                    add("mapping.unknown_column", mloc, "'" + cm.column + "' is not a business key or descriptive of " + hub.name);
                }
                check_mapping_expr(cm.expr, source, nullptr, mloc);
            }
            for (const BusinessKeyDef& bk : hub.business_keys) {
                if (!m.find(bk.name)) add("mapping.business_key", mloc, "business key '" + bk.name + "' is not mapped");
            }
            for (const DescriptiveDef& d : hub.descriptives) {
                if (!d.nullable && !d.fk_hub && !m.find(d.name)) {
                    add("mapping.not_null", mloc, "non-nullable descriptive '" + d.name + "' is not mapped");
                }
            }
            for (const SortKey& k : m.dedup_order) {
                if (source && !source->find_column(k.column) && k.column != meta::capture_timestamp) {
                    add("mapping.unknown_column", mloc, "order_by column '" + k.column + "' is not in source " + m.source);
                }
            }
        }
    }

    void check_hub_cycles() {
        // Colour-marking DFS over hub FK edges.
        std::map<std::string, int> state;
        std::vector<std::string> stack;
        std::set<std::string> reported;
        std::function<void(const HubDef&)> visit = [&](const HubDef& hub) {
            state[hub.name] = 1;
            stack.push_back(hub.name);
            for (const DescriptiveDef& d : hub.descriptives) {
                if (!d.fk_hub) continue;
                const HubDef* target = spec_.find_hub(*d.fk_hub);
                if (!target) continue;
                if (state[target->name] == 1) {
                    auto from = std::find(stack.begin(), stack.end(), target->name);
                    std::string cycle;
                    for (auto it = from; it != stack.end(); ++it) cycle += *it + " -> ";
                    cycle += target->name;
                    if (reported.insert(target->name).second) {
                        add("hub.fk_cycle", "hub:" + target->name, "cyclic hub foreign keys: " + cycle);
                    }
                } else if (state[target->name] == 0) {
                    visit(*target);
                }
            }
            stack.pop_back();
            state[hub.name] = 2;
        };
        for (const HubDef& h : spec_.hubs) {
            if (state[h.name] == 0) visit(h);
        }
    }

    // -- stars --------------------------------------------------------------

    void check_star(const StarDef& star) {
        std::string loc = "star:" + star.name;
        if (star.participants.empty()) add("star.participants", loc, "star requires at least one participant");
        if (star.key_columns.empty()) add("star.key_empty", loc, "star requires a composite key");

        std::set<std::string> names = {meta::load_source, meta::capture_timestamp, meta::load_timestamp, meta::delete_flag};
        std::set<std::string> participant_columns;
        std::size_t items = 0;
        for (const Participant& p : star.participants) {
            if (!names.insert(p.column).second) add("table.duplicate_column", loc, "column '" + p.column + "' is declared twice");
            participant_columns.insert(p.column);
            if (p.kind == Participant::Kind::hub && !spec_.find_hub(p.hub)) {
                add("star.unknown_hub", loc, "participant hub '" + p.hub + "' does not exist");
            }
            if (p.kind == Participant::Kind::item) {
                ++items;
                if (!p.item_rule) {
                    add("star.item", loc, "item participant '" + p.column + "' lacks a key rule");
                } else if (p.item_rule->mode != ItemKeyRule::Mode::positional && p.item_rule->attributes.empty()) {
                    add("star.item", loc, "item participant '" + p.column + "' names no attributes");
                }
            }
        }
        if (items > 1) add("star.item", loc, "a star may explode at most one collection");
        for (const std::string& k : star.key_columns) {
            if (!participant_columns.count(k) && k != meta::capture_timestamp) {
                add("star.key_subset", loc, "key not subset of participants: '" + k + "'");
            }
        }
        std::set<std::string> distinct_keys(star.key_columns.begin(), star.key_columns.end());
        if (distinct_keys.size() != star.key_columns.size()) add("star.key_subset", loc, "key repeats a column");
        check_descriptives(star.descriptives, names, loc);

        const Participant* item = star.item_participant();
        for (const StarMapping& m : star.mappings) {
            std::string mloc = loc + "/mapping:" + m.source;
            const SourceDef* source = spec_.find_source(m.source);
            if (!source) add("mapping.unknown_source", mloc, "unknown source '" + m.source + "'");
            const ItemKeyRule* rule = item && item->item_rule ? &*item->item_rule : nullptr;
            if (rule && source) {
                const SourceColumn* coll = source->find_column(rule->collection_column);
                if (!coll || !coll->type.is_collection) {
                    add("star.item", mloc, "'" + rule->collection_column + "' is not a collection column of " + m.source);
                } else {
                    for (const std::string& a : rule->attributes) {
                        if (std::none_of(coll->type.fields.begin(), coll->type.fields.end(),
                                         [&](const FieldType& f) { return f.name == a; })) {
                            add("star.item", mloc, "item attribute '" + a + "' not in " + rule->collection_column);
                        }
                    }
                }
            }
            for (const ColumnMapping& cm : m.columns) {
                const Participant* p = star.find_participant(cm.column);
                bool descriptive = std::any_of(star.descriptives.begin(), star.descriptives.end(),
                                               [&](const DescriptiveDef& d) { return d.name == cm.column; });
                if ((!p && !descriptive) || (p && p->kind == Participant::Kind::item)) {
                    add("mapping.unknown_column", mloc, "'" + cm.column + "' is not a mappable column of " + star.name);
                }
                check_mapping_expr(cm.expr, source, rule, mloc);
            }
            for (const std::string& k : star.key_columns) {
                const Participant* p = star.find_participant(k);
                if (!p || p->kind == Participant::Kind::item) continue;
                if (!m.find(k)) add("mapping.key_unmapped", mloc, "key column '" + k + "' is not mapped");
            }
        }
    }

    // -- gold ---------------------------------------------------------------

    std::optional<std::vector<std::string>> columns_of(JoinDef::Target target, const std::string& name) const {
        if (target == JoinDef::Target::hub) {
            if (const HubDef* h = spec_.find_hub(name)) return hub_columns(*h);
        } else if (target == JoinDef::Target::star) {
            if (const StarDef* s = spec_.find_star(name)) return star_columns(*s);
        } else if (const GoldViewDef* v = spec_.find_view(name)) {
            std::vector<std::string> cols;
            if (v->scd2_key_column) cols.push_back(*v->scd2_key_column);
            for (const SelectItem& s : v->output_columns) cols.push_back(s.output);
            return cols;
        }
        return std::nullopt;
    }

    void check_view(const GoldViewDef& view) {
        std::string loc = "gold:" + view.name;
        std::map<std::string, std::vector<std::string>> aliases;
        JoinDef::Target base_target = view.kind == GoldKind::fact ? JoinDef::Target::star : JoinDef::Target::hub;
        auto base_cols = columns_of(base_target, view.base);
        if (!base_cols) {
            add("gold.base", loc, std::string(view.kind == GoldKind::fact ? "fact base must be a star" : "dimension base must be a hub") +
                                      ": '" + view.base + "'");
        } else {
            aliases[view.base] = *base_cols;
        }

        auto check_ref = [&](const ColumnRef& r, const std::string& what) {
            auto it = aliases.find(r.alias);
            if (it == aliases.end()) {
                add("gold.column", loc, what + " uses unknown alias '" + r.alias + "'");
            } else if (std::find(it->second.begin(), it->second.end(), r.column) == it->second.end()) {
                add("gold.column", loc, what + " references missing column " + r.alias + "." + r.column);
            }
        };

        for (const JoinDef& j : view.joins) {
            auto cols = columns_of(j.target, j.name);
            if (!cols) {
                add("gold.join", loc, "join target '" + j.name + "' does not exist");
                continue;
            }
            if (aliases.count(j.alias)) add("gold.join", loc, "alias '" + j.alias + "' is used twice");
            aliases[j.alias] = *cols;
            for (const auto& [l, r] : j.on) {
                check_ref(l, "join condition");
                check_ref(r, "join condition");
            }
            if (j.rank_partition) {
                if (j.target != JoinDef::Target::star) add("gold.join", loc, "rank applies only to star joins");
                for (const std::string& c : *j.rank_partition) check_ref({j.alias, c}, "rank partition");
                for (const SortKey& k : j.rank_order) check_ref({j.alias, k.column}, "rank order");
                if (j.target == JoinDef::Target::star) {
                    const StarDef* s = spec_.find_star(j.name);
                    if (s && !s->has_delete_flag) {
                        // rn = 1 AND delete_flag = 0 needs the flag.
                        add("gold.join", loc, "ranked star '" + j.name + "' has no delete_flag");
                    }
                }
            }
            if (j.target == JoinDef::Target::dim) {
                const GoldViewDef* dim = spec_.find_view(j.name);
                if (dim && dim->kind != GoldKind::scd2_dim) add("gold.temporal", loc, "dim join must target an scd2_dim");
                if (!j.during) add("gold.temporal", loc, "dim join requires a during clause");
                if (view.kind != GoldKind::fact) add("gold.temporal", loc, "temporal joins belong to facts");
            }
            if (j.during) {
                if (j.target != JoinDef::Target::dim) add("gold.temporal", loc, "during applies only to dim joins");
                check_ref(*j.during, "during");
            }
        }

        std::set<std::string> outputs;
        if (view.scd2_key_column) outputs.insert(*view.scd2_key_column);
        for (const SelectItem& s : view.output_columns) {
            check_ref(s.source, "select");
            if (!outputs.insert(s.output).second) add("gold.column", loc, "output column '" + s.output + "' repeats");
        }
        if (view.output_columns.empty()) add("gold.column", loc, "view selects no columns");
        for (const ColumnRef& part : view.scd2_key_parts) check_ref(part, "scd2 key");

        if (view.kind == GoldKind::scd2_dim) {
            if (!view.scd2_key_column || view.scd2_key_parts.empty()) add("gold.scd2", loc, "scd2_dim requires scd2_key");
            if (!view.validity) {
                add("gold.scd2", loc, "scd2_dim requires a validity interval");
            } else {
                for (const std::string& c : {view.validity->first, view.validity->second}) {
                    if (!outputs.count(c)) add("gold.scd2", loc, "validity column '" + c + "' is not in the output");
                }
            }
        } else if (view.scd2_key_column || view.validity) {
            add("gold.scd2", loc, "scd2_key and validity apply only to scd2_dim");
        }

        if (view.kind == GoldKind::scd1_dim) {
            if (const HubDef* h = spec_.find_hub(view.base)) {
                bool keyed = std::any_of(view.output_columns.begin(), view.output_columns.end(), [&](const SelectItem& s) {
                    return s.source.alias == view.base && s.source.column == h->key_column();
                });
                if (!keyed) add("gold.key", loc, "scd1_dim must select the base hub key " + h->key_column());
            }
        } else if (view.kind == GoldKind::fact) {
            if (const StarDef* s = spec_.find_star(view.base)) {
                for (const std::string& k : s->key_columns) {
                    bool keyed = std::any_of(view.output_columns.begin(), view.output_columns.end(), [&](const SelectItem& item) {
                        return item.source.alias == view.base && item.source.column == k;
                    });
                    if (!keyed) add("gold.key", loc, "fact must select base key column " + k);
                }
            }
        }
    }

    const ModelSpec& spec_;
    ValidationReport report_;
};

struct Node {
    std::string name;
    std::string table;
    std::vector<std::size_t> deps;
};

std::vector<std::string> topological(const std::vector<Node>& nodes) {
    std::vector<std::size_t> indegree(nodes.size(), 0);
    std::vector<std::vector<std::size_t>> dependents(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t d : nodes[i].deps) {
            dependents[d].push_back(i);
            ++indegree[i];
        }
    }
    std::set<std::size_t> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (indegree[i] == 0) ready.insert(i);
    }
    std::vector<std::string> order;
    while (!ready.empty()) {
        std::size_t i = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(nodes[i].table);
        for (std::size_t dep : dependents[i]) {
            if (--indegree[dep] == 0) ready.insert(dep);
        }
    }
    if (order.size() != nodes.size()) {
        // Walk back along dependencies from any blocked node until a node repeats.
        std::size_t at = 0;
        while (indegree[at] == 0) ++at;
        std::vector<std::size_t> path;
        std::set<std::size_t> on_path;
        while (on_path.insert(at).second) {
            path.push_back(at);
            for (std::size_t d : nodes[at].deps) {
                if (indegree[d] != 0) {
                    at = d;
                    break;
                }
            }
        }
        std::string cycle;
        auto from = std::find(path.begin(), path.end(), at);
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            cycle += nodes[*it].name + " -> ";
            if (it.base() - 1 == from) break;
        }
        cycle += nodes[*(path.end() - 1)].name;
        throw ModelError("cyclic dependency among hubs: " + cycle);
    }
    return order;
}

}  // namespace

ValidationReport validate_model(const ModelSpec& spec) { return Validator(spec).run(); }

std::vector<std::string> resolve_load_order(const ModelSpec& spec) {
    std::vector<Node> nodes;
    std::map<std::string, std::size_t> hub_index;
    for (const HubDef& h : spec.hubs) {
        hub_index.emplace(h.name, nodes.size());
        nodes.push_back({h.name, h.table_name(), {}});
    }
    for (std::size_t i = 0; i < spec.hubs.size(); ++i) {
        for (const DescriptiveDef& d : spec.hubs[i].descriptives) {
            if (!d.fk_hub) continue;
            auto it = hub_index.find(*d.fk_hub);
            if (it != hub_index.end() && it->second != i) nodes[i].deps.push_back(it->second);
            if (it != hub_index.end() && it->second == i) {
                throw ModelError("cyclic dependency among hubs: " + d.name + " of " + spec.hubs[i].name + " references itself");
            }
        }
    }
    for (const StarDef& s : spec.stars) {
        Node n{s.name, s.table_name(), {}};
        for (const Participant& p : s.participants) {
            if (p.kind != Participant::Kind::hub) continue;
            auto it = hub_index.find(p.hub);
            if (it != hub_index.end()) n.deps.push_back(it->second);
        }
        for (const DescriptiveDef& d : s.descriptives) {
            if (!d.fk_hub) continue;
            auto it = hub_index.find(*d.fk_hub);
            if (it != hub_index.end()) n.deps.push_back(it->second);
        }
        nodes.push_back(std::move(n));
    }
    return topological(nodes);
}

std::vector<std::string> resolve_gold_order(const ModelSpec& spec) {
    std::vector<Node> nodes;
    std::map<std::string, std::size_t> index;
    for (const GoldViewDef& v : spec.gold_views) {
        index.emplace(v.name, nodes.size());
        nodes.push_back({v.name, v.name, {}});
    }
    for (std::size_t i = 0; i < spec.gold_views.size(); ++i) {
        for (const JoinDef& j : spec.gold_views[i].joins) {
            if (j.target != JoinDef::Target::dim) continue;
            auto it = index.find(j.name);
            if (it != index.end() && it->second != i) nodes[i].deps.push_back(it->second);
        }
    }
    return topological(nodes);
}

}  // namespace hubstar
