#include "broken_models.hpp"

#include <stdexcept>

namespace hubstar::fixture {

namespace {

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    auto pos = text.find(from);
    if (pos == std::string::npos || text.find(from, pos + 1) != std::string::npos) {
        throw std::logic_error("fixture text does not contain exactly one '" + from + "'");
    }
    return text.replace(pos, from.size(), to);
}

}  // namespace

std::vector<BrokenModel> broken_models(const std::string& t) {
    return {
        {"star.key_subset", "star key names a column no participant provides",
         replace_once(t, "key (customer_key, valid_from, capture_timestamp)",
                      "key (customer_key, ship_to_address, capture_timestamp)")},
        {"hub.business_key", "hub without business key",
         t + "\nhub note {\n  key system_generated\n  descriptive body string\n}\n"},
        {"fk.unknown_hub", "descriptive references an undeclared hub",
         replace_once(t, "descriptive loyalty_segment_key string references loyalty_segment",
                      "descriptive loyalty_segment_key string references loyalty_tier")},
        {"hub.fk_cycle", "two hubs reference each other",
         replace_once(t, "  descriptive unit_threshold integer\n",
                      "  descriptive unit_threshold integer\n  descriptive owner_key string references customer\n")},
        {"mapping.unknown_column", "mapping reads an undeclared source column",
         replace_once(t, "tax_code = tax_code", "tax_code = tax_kode")},
        {"key.delimiter", "concatenated key without a delimiter",
         replace_once(t, "concat(\"#\", load_source(), product_id)", "concat(load_source(), product_id)")},
        {"hub.local_scope", "local business key whose key ignores the load source",
         replace_once(t, "concat(\"#\", load_source(), product_id)", "concat(\"#\", product_id)")},
        {"mapping.key_unmapped", "star key column left unmapped",
         replace_once(t, "    valid_from = valid_from\n", "")},
        {"hub.formula_column", "key formula reads a descriptive",
         replace_once(t, "sha256(cast(customer_id as string))", "sha256(cast(customer_name as string))")},
        {"mapping.business_key", "hub mapping omits a business key",
         replace_once(t, "    customer_id = customer_id\n", "")},
    };
}

}  // namespace hubstar::fixture
