#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hubstar/value.hpp"

namespace hubstar {

// ---------------------------------------------------------------------------
// Expressions shared by key formulas and source mappings.
// ---------------------------------------------------------------------------

struct Expr {
    enum class Kind {
        literal,   ///< `value`
        column,    ///< `name`; `item.name` inside a collection mapping
        call,      ///< `name(args...)`
        cast,      ///< `cast(args[0] as cast_type)`
        hub_ref,   ///< `ref name(args...)`: key of hub `name` from its business keys
    };

    Kind kind = Kind::literal;
    Value value;
    std::string name;
    bool item_field = false;
    ScalarType cast_type = ScalarType::string;
    std::vector<Expr> args;

    static Expr literal(Value v);
    static Expr column(std::string name);
    static Expr item(std::string name);
    static Expr call(std::string name, std::vector<Expr> args);
    static Expr cast(Expr operand, ScalarType type);
    static Expr ref(std::string hub, std::vector<Expr> args);

    bool operator==(const Expr&) const = default;
};

/// Column references (non-item) reachable from `e`, in first-appearance order.
std::vector<std::string> referenced_columns(const Expr& e);
std::vector<std::string> referenced_item_fields(const Expr& e);
bool calls_function(const Expr& e, const std::string& function);

// ---------------------------------------------------------------------------
// Model elements.
// ---------------------------------------------------------------------------

enum class Layer { bronze, silver, gold };
enum class InputFormat { csv, ndjson };
enum class BusinessKeyScope { global, local };
enum class KeyType { computed, system_generated };

struct CaptureSource {
    enum class Kind { cdc_column, last_modified_column, file_modification_time, pipeline_now };
    Kind kind = Kind::pipeline_now;
    std::string column;
    bool operator==(const CaptureSource&) const = default;
};

struct SourceColumn {
    std::string name;
    ColumnType type;
    bool operator==(const SourceColumn&) const = default;
};

struct SourceDef {
    std::string name;
    std::int64_t load_source_id = 1;
    InputFormat input_format = InputFormat::csv;
    std::vector<SourceColumn> columns;
    std::vector<CaptureSource> capture_timestamp_rule;
    std::optional<std::string> delete_flag_column;

    const SourceColumn* find_column(const std::string& column) const;
    bool operator==(const SourceDef&) const = default;
};

struct DescriptiveDef {
    std::string name;
    ScalarType type = ScalarType::string;
    bool nullable = true;
    std::optional<std::string> fk_hub;
    bool operator==(const DescriptiveDef&) const = default;
};

struct BusinessKeyDef {
    std::string name;
    ScalarType type = ScalarType::string;
    bool operator==(const BusinessKeyDef&) const = default;
};

struct KeyFormula {
    Expr expression;
    bool operator==(const KeyFormula&) const = default;
};

struct SortKey {
    std::string column;
    bool descending = true;
    bool operator==(const SortKey&) const = default;
};

struct ColumnMapping {
    std::string column;
    Expr expr;
    bool operator==(const ColumnMapping&) const = default;
};

struct HubMapping {
    std::string source;
    std::vector<ColumnMapping> columns;
    std::vector<SortKey> dedup_order;

    const Expr* find(const std::string& column) const;
    bool operator==(const HubMapping&) const = default;
};

struct HubDef {
    std::string name;
    std::vector<BusinessKeyDef> business_keys;
    BusinessKeyScope bk_scope = BusinessKeyScope::global;
    KeyType key_type = KeyType::computed;
    std::optional<KeyFormula> key_formula;
    std::vector<DescriptiveDef> descriptives;
    bool has_delete_flag = false;
    std::vector<HubMapping> mappings;

    std::string table_name() const { return "hub_" + name; }
    std::string key_column() const { return name + "_key"; }
    const DescriptiveDef* find_descriptive(const std::string& column) const;
    bool is_business_key(const std::string& column) const;
    bool operator==(const HubDef&) const = default;
};

struct ItemKeyRule {
    enum class Mode { explicit_sequence, positional, concat_of_attributes };
    Mode mode = Mode::positional;
    std::string collection_column;
    /// Sequence field (explicit mode) or identifying attributes (concat mode).
    std::vector<std::string> attributes;
    bool hashed = false;
    bool operator==(const ItemKeyRule&) const = default;
};

struct Participant {
    enum class Kind { hub, time, item };
    Kind kind = Kind::hub;
    /// Hub name for hub participants; unused otherwise.
    std::string hub;
    /// Key column in the star. For hubs defaults to `<hub>_key`, or the role name.
    std::string column;
    std::optional<ItemKeyRule> item_rule;
    bool operator==(const Participant&) const = default;
};

struct StarMapping {
    std::string source;
    std::vector<ColumnMapping> columns;

    const Expr* find(const std::string& column) const;
    bool operator==(const StarMapping&) const = default;
};

struct StarDef {
    std::string name;
    std::vector<Participant> participants;
    std::vector<std::string> key_columns;
    std::vector<DescriptiveDef> descriptives;
    bool has_delete_flag = false;
    std::vector<StarMapping> mappings;

    std::string table_name() const { return "star_" + name; }
    const Participant* find_participant(const std::string& column) const;
    const Participant* item_participant() const;
    bool operator==(const StarDef&) const = default;
};

enum class GoldKind { scd1_dim, scd2_dim, fact };

struct ColumnRef {
    std::string alias;
    std::string column;
    bool operator==(const ColumnRef&) const = default;
};

struct JoinDef {
    enum class Target { hub, star, dim };
    Target target = Target::hub;
    bool optional = false;
    std::string name;
    std::string alias;
    std::vector<std::pair<ColumnRef, ColumnRef>> on;
    /// Rank-then-filter rule on star joins: keep rn = 1 per partition, then drop delete_flag = 1.
    std::optional<std::vector<std::string>> rank_partition;
    std::vector<SortKey> rank_order;
    /// Temporal join into an scd2 dimension: the instant must fall within the dim's validity.
    std::optional<ColumnRef> during;
    bool operator==(const JoinDef&) const = default;
};

struct SelectItem {
    ColumnRef source;
    std::string output;
    bool operator==(const SelectItem&) const = default;
};

struct GoldViewDef {
    std::string name;
    GoldKind kind = GoldKind::scd1_dim;
    std::string base;
    std::vector<JoinDef> joins;
    std::vector<SelectItem> output_columns;
    std::optional<std::string> scd2_key_column;
    std::vector<ColumnRef> scd2_key_parts;
    /// Output column names carrying the validity interval (scd2 dims).
    std::optional<std::pair<std::string, std::string>> validity;

    std::string base_alias() const { return base; }
    bool operator==(const GoldViewDef&) const = default;
};

struct SchemaNames {
    std::map<Layer, std::string> names;

    const std::string& bronze() const { return names.at(Layer::bronze); }
    const std::string& silver() const { return names.at(Layer::silver); }
    const std::string& gold() const { return names.at(Layer::gold); }
    bool operator==(const SchemaNames&) const = default;
};

struct ModelSpec {
    std::string product_name;
    std::vector<SourceDef> sources;
    std::vector<HubDef> hubs;
    std::vector<StarDef> stars;
    std::vector<GoldViewDef> gold_views;
    SchemaNames schema_names;

    /// Schema names default to `raw_<product>`, `hs_<product>`, `ss_<product>`.
    static SchemaNames default_schemas(const std::string& product);

    const SourceDef* find_source(const std::string& name) const;
    const HubDef* find_hub(const std::string& name) const;
    const StarDef* find_star(const std::string& name) const;
    const GoldViewDef* find_view(const std::string& name) const;
    bool operator==(const ModelSpec&) const = default;
};

std::string_view to_string(GoldKind kind);
std::string_view to_string(Layer layer);

/// DSL function names and their arity (-1 = variadic, at least one argument).
struct FunctionInfo {
    std::string_view name;
    int arity;
};
const std::vector<FunctionInfo>& known_functions();

}  // namespace hubstar
