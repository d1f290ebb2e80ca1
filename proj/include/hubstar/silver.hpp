#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hubstar/expr.hpp"
#include "hubstar/load_result.hpp"
#include "hubstar/model.hpp"
#include "hubstar/storage.hpp"

namespace hubstar {

/// Business-key lookup over the stored rows of system-generated hubs. Each hub is read once.
class HubKeyIndex {
public:
    HubKeyIndex(const ModelSpec& spec, const Warehouse& warehouse) : spec_(spec), warehouse_(warehouse) {}

    /// Key of the row matching `business_keys` at the hub's scope, or empty when absent.
    std::string find(const HubDef& hub, const Record& business_keys, std::int64_t load_source);

    HubKeyLookup lookup() {
        return [this](const HubDef& h, const Record& bks, std::int64_t ls) { return find(h, bks, ls); };
    }

private:
    const ModelSpec& spec_;
    const Warehouse& warehouse_;
    std::map<std::string, std::map<std::string, std::string>> keys_;
};

/// Match tuple of a hub row: business keys, preceded by load_source for local scope.
std::string hub_scope_key(const HubDef& hub, const Record& row);

/// Default row for `hub`: key "-1", load_source 0, epoch timestamps.
Record default_hub_row(const ModelSpec& spec, const HubDef& hub);

/// Inserts the default row. Throws LoadError when it is already present.
void init_hub(const ModelSpec& spec, const HubDef& hub, Warehouse& warehouse);

/// Incremental merge of one source mapping into a hub.
LoadResult load_hub(const ModelSpec& spec, const HubDef& hub, const HubMapping& mapping, Warehouse& warehouse,
                    Timestamp now);

/// Incremental upsert of one source mapping into a star.
LoadResult load_star(const ModelSpec& spec, const StarDef& star, const StarMapping& mapping, Warehouse& warehouse,
                     Timestamp now);

/// Items of the rule's collection column paired with their item key values.
std::vector<std::pair<Record, Value>> explode_collection(const Record& parent, const ItemKeyRule& rule);

/// Counter file backing a system-generated hub's keys.
std::filesystem::path key_counter_path(const ModelSpec& spec, const HubDef& hub, const Warehouse& warehouse);

}  // namespace hubstar
