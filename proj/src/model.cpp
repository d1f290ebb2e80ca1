#include "hubstar/model.hpp"

#include <algorithm>

namespace hubstar {

Expr Expr::literal(Value v) {
    Expr e;
    e.kind = Kind::literal;
    e.value = std::move(v);
    return e;
}

Expr Expr::column(std::string name) {
    Expr e;
    e.kind = Kind::column;
    e.name = std::move(name);
    return e;
}

Expr Expr::item(std::string name) {
    Expr e = column(std::move(name));
    e.item_field = true;
    return e;
}

Expr Expr::call(std::string name, std::vector<Expr> args) {
    Expr e;
    e.kind = Kind::call;
    e.name = std::move(name);
    e.args = std::move(args);
    return e;
}

Expr Expr::cast(Expr operand, ScalarType type) {
    Expr e;
    e.kind = Kind::cast;
    e.cast_type = type;
    e.args.push_back(std::move(operand));
    return e;
}

Expr Expr::ref(std::string hub, std::vector<Expr> args) {
    Expr e;
    e.kind = Kind::hub_ref;
    e.name = std::move(hub);
    e.args = std::move(args);
    return e;
}

namespace {

void collect_columns(const Expr& e, bool item, std::vector<std::string>& out) {
    if (e.kind == Expr::Kind::column && e.item_field == item) {
        if (std::find(out.begin(), out.end(), e.name) == out.end()) out.push_back(e.name);
    }
    for (const Expr& arg : e.args) collect_columns(arg, item, out);
}

template <typename T>
const T* find_named(const std::vector<T>& items, const std::string& name) {
    auto it = std::find_if(items.begin(), items.end(), [&](const T& x) { return x.name == name; });
    return it == items.end() ? nullptr : &*it;
}

const Expr* find_mapping(const std::vector<ColumnMapping>& columns, const std::string& column) {
    auto it = std::find_if(columns.begin(), columns.end(), [&](const ColumnMapping& m) { return m.column == column; });
    return it == columns.end() ? nullptr : &it->expr;
}

}  // namespace

std::vector<std::string> referenced_columns(const Expr& e) {
    std::vector<std::string> out;
    collect_columns(e, false, out);
    return out;
}

std::vector<std::string> referenced_item_fields(const Expr& e) {
    std::vector<std::string> out;
    collect_columns(e, true, out);
    return out;
}

bool calls_function(const Expr& e, const std::string& function) {
    if (e.kind == Expr::Kind::call && e.name == function) return true;
    return std::any_of(e.args.begin(), e.args.end(), [&](const Expr& a) { return calls_function(a, function); });
}

const SourceColumn* SourceDef::find_column(const std::string& column) const { return find_named(columns, column); }

const Expr* HubMapping::find(const std::string& column) const { return find_mapping(columns, column); }
const Expr* StarMapping::find(const std::string& column) const { return find_mapping(columns, column); }

const DescriptiveDef* HubDef::find_descriptive(const std::string& column) const {
    return find_named(descriptives, column);
}

bool HubDef::is_business_key(const std::string& column) const {
    return find_named(business_keys, column) != nullptr;
}

const Participant* StarDef::find_participant(const std::string& column) const {
    auto it = std::find_if(participants.begin(), participants.end(),
                           [&](const Participant& p) { return p.column == column; });
    return it == participants.end() ? nullptr : &*it;
}

const Participant* StarDef::item_participant() const {
    auto it = std::find_if(participants.begin(), participants.end(),
                           [](const Participant& p) { return p.kind == Participant::Kind::item; });
    return it == participants.end() ? nullptr : &*it;
}

SchemaNames ModelSpec::default_schemas(const std::string& product) {
    SchemaNames s;
    s.names[Layer::bronze] = "raw_" + product;
    s.names[Layer::silver] = "hs_" + product;
    s.names[Layer::gold] = "ss_" + product;
    return s;
}

const SourceDef* ModelSpec::find_source(const std::string& name) const { return find_named(sources, name); }
const HubDef* ModelSpec::find_hub(const std::string& name) const { return find_named(hubs, name); }
const StarDef* ModelSpec::find_star(const std::string& name) const { return find_named(stars, name); }
const GoldViewDef* ModelSpec::find_view(const std::string& name) const { return find_named(gold_views, name); }

std::string_view to_string(GoldKind kind) {
    switch (kind) {
        case GoldKind::scd1_dim: return "scd1_dim";
        case GoldKind::scd2_dim: return "scd2_dim";
        case GoldKind::fact: return "fact";
    }
    return "fact";
}

std::string_view to_string(Layer layer) {
    switch (layer) {
        case Layer::bronze: return "bronze";
        case Layer::silver: return "silver";
        case Layer::gold: return "gold";
    }
    return "gold";
}

const std::vector<FunctionInfo>& known_functions() {
    static const std::vector<FunctionInfo> functions = {
        {"sha256", 1},
        {"concat", -1},
        {"format_ts_compact", 1},
        {"load_source", 0},
        {"epoch_seconds_to_timestamp", 1},
        {"coalesce", -1},
    };
    return functions;
}

}  // namespace hubstar
