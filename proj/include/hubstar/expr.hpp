#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hubstar/model.hpp"
#include "hubstar/value.hpp"

namespace hubstar {

/// Resolves a system-generated hub key from business-key values (a hub lookup).
/// Returns an empty string when the business key is not present in the hub.
using HubKeyLookup = std::function<std::string(const HubDef&, const Record& business_keys, std::int64_t load_source)>;

struct EvalContext {
    const Record* row = nullptr;
    const Record* item = nullptr;
    std::int64_t load_source = 0;
    const ModelSpec* model = nullptr;
    HubKeyLookup lookup;
    /// Key formulas reject concat operands containing the delimiter.
    bool key_mode = false;
};

Value evaluate(const Expr& expr, const EvalContext& ctx);

/// Hub key for `hub` from business-key arguments, as `ref hub(args...)` computes it.
/// A null argument yields the default key "-1".
std::string resolve_hub_reference(const HubDef& hub, const std::vector<Value>& business_keys,
                                  const EvalContext& ctx);

}  // namespace hubstar
