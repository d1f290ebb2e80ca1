#pragma once

#include <string>
#include <vector>

#include "hubstar/model.hpp"

namespace hubstar {

struct Violation {
    std::string rule;
    /// Element path, e.g. `hub:customer` or `star:customer_address/mapping:customers`.
    std::string location;
    std::string message;
    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool has(const std::string& rule) const;
};

/// Structural rules for hubs, stars, sources, mappings and gold views. Pure.
ValidationReport validate_model(const ModelSpec& spec);

/// Silver table names ordered so FK targets and participating hubs load first.
/// Ties follow declaration order. Throws ModelError naming the cycle when hub FKs are cyclic.
std::vector<std::string> resolve_load_order(const ModelSpec& spec);

/// Gold view names with scd2 dimensions ahead of the facts that join them.
std::vector<std::string> resolve_gold_order(const ModelSpec& spec);

}  // namespace hubstar
