#include "hubstar/expr.hpp"

#include "hubstar/errors.hpp"
#include "hubstar/keygen.hpp"

namespace hubstar {

namespace {

Value call_function(const Expr& expr, const EvalContext& ctx) {
    const std::string& fn = expr.name;
    auto arg = [&](std::size_t i) { return evaluate(expr.args.at(i), ctx); };

    if (fn == "load_source") return ctx.load_source;

    if (fn == "sha256") {
        Value v = arg(0);
        return v.is_null() ? Value() : Value(sha256_hex(v.to_text()));
    }

    if (fn == "format_ts_compact") {
        Value v = coerce(arg(0), ScalarType::timestamp);
        return v.is_null() ? Value() : Value(format_ts_compact(v.as_timestamp()));
    }

    if (fn == "epoch_seconds_to_timestamp") {
        Value v = coerce(arg(0), ScalarType::integer);
        return v.is_null() ? Value() : Value(Timestamp::from_epoch_seconds(v.as_integer()));
    }

    if (fn == "coalesce") {
        for (std::size_t i = 0; i < expr.args.size(); ++i) {
            Value v = arg(i);
            if (!v.is_null()) return v;
        }
        return {};
    }

    if (fn == "concat") {
        if (expr.args.empty()) throw ModelError("concat requires a delimiter");
        Value delim_value = arg(0);
        std::string delim = delim_value.to_text();
        if (delim.empty()) throw ModelError("concat requires a non-empty delimiter");
        std::string out;
        bool first = true;
        for (std::size_t i = 1; i < expr.args.size(); ++i) {
            Value v = arg(i);
            if (v.is_null()) {
                if (ctx.key_mode) throw KeyError("business key must have value");
                continue;
            }
            std::string part = v.to_text();
            if (ctx.key_mode && part.find(delim) != std::string::npos) {
                throw KeyError("delimiter collision: '" + part + "' contains '" + delim + "'");
            }
            if (!first) out += delim;
            out += part;
            first = false;
        }
        return out;
    }

    throw ModelError("unknown function " + fn);
}

}  // namespace

std::string resolve_hub_reference(const HubDef& hub, const std::vector<Value>& business_keys, const EvalContext& ctx) {
    if (business_keys.size() != hub.business_keys.size()) {
        throw ModelError("ref " + hub.name + " expects " + std::to_string(hub.business_keys.size()) +
                         " business key(s), got " + std::to_string(business_keys.size()));
    }
    Record keys;
    for (std::size_t i = 0; i < business_keys.size(); ++i) {
        if (business_keys[i].is_null()) return std::string(default_hub_key);
        keys[hub.business_keys[i].name] = coerce(business_keys[i], hub.business_keys[i].type);
    }
    if (hub.key_type == KeyType::computed) {
        if (!hub.key_formula) throw ModelError("hub " + hub.name + " has no key formula");
        return compute_hub_key(*hub.key_formula, keys, ctx.load_source);
    }
    if (!ctx.lookup) throw ModelError("hub " + hub.name + " has system-generated keys and no lookup is available");
    std::string key = ctx.lookup(hub, keys, ctx.load_source);
    return key.empty() ? std::string(default_hub_key) : key;
}

Value evaluate(const Expr& expr, const EvalContext& ctx) {
    switch (expr.kind) {
        case Expr::Kind::literal: return expr.value;
        case Expr::Kind::column: {
            const Record* source = expr.item_field ? ctx.item : ctx.row;
            if (!source) {
                throw ModelError(std::string(expr.item_field ? "item." : "") + expr.name +
                                 " referenced outside its scope");
            }
            return field_or_null(*source, expr.name);
        }
        case Expr::Kind::cast: return coerce(evaluate(expr.args.at(0), ctx), expr.cast_type);
        case Expr::Kind::call: return call_function(expr, ctx);
        case Expr::Kind::hub_ref: {
            if (!ctx.model) throw ModelError("ref " + expr.name + " requires a model");
            const HubDef* hub = ctx.model->find_hub(expr.name);
            if (!hub) throw ModelError("ref to unknown hub " + expr.name);
            std::vector<Value> args;
            args.reserve(expr.args.size());
            for (const Expr& a : expr.args) args.push_back(evaluate(a, ctx));
            return resolve_hub_reference(*hub, args, ctx);
        }
    }
    return {};
}

}  // namespace hubstar
