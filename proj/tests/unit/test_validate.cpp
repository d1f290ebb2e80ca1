#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "broken_models.hpp"
#include "hubstar/dsl.hpp"
#include "hubstar/errors.hpp"
#include "hubstar/validate.hpp"
#include "retail_fixture.hpp"
#include "temp_dir.hpp"

using namespace hubstar;

namespace {

ModelSpec fixture_spec() { return parse_model(testing::read_file(fixture::model_path())).spec; }

std::size_t position(const std::vector<std::string>& order, const std::string& table) {
    auto it = std::find(order.begin(), order.end(), table);
    REQUIRE(it != order.end());
    return static_cast<std::size_t>(it - order.begin());
}

/// Every dependency edge of the model as (target table, dependent table).
std::vector<std::pair<std::string, std::string>> dependency_edges(const ModelSpec& spec) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (const HubDef& h : spec.hubs) {
        for (const auto& d : h.descriptives) {
            if (d.fk_hub) edges.emplace_back("hub_" + *d.fk_hub, h.table_name());
        }
    }
    for (const StarDef& s : spec.stars) {
        for (const auto& p : s.participants) {
            if (p.kind == Participant::Kind::hub) edges.emplace_back("hub_" + p.hub, s.table_name());
        }
        for (const auto& d : s.descriptives) {
            if (d.fk_hub) edges.emplace_back("hub_" + *d.fk_hub, s.table_name());
        }
    }
    return edges;
}

HubDef simple_hub(const std::string& name) {
    HubDef h;
    h.name = name;
    h.business_keys = {{"id", ScalarType::integer}};
    h.key_formula = KeyFormula{Expr::cast(Expr::column("id"), ScalarType::string)};
    return h;
}

/// Random acyclic model: hub i may reference hubs created before it; declaration order shuffled.
ModelSpec random_dag(std::uint32_t seed) {
    std::mt19937 rng(seed);
    ModelSpec spec;
    spec.product_name = "dag";
    spec.schema_names = ModelSpec::default_schemas("dag");
    int hubs = static_cast<int>(rng() % 7) + 1;
    for (int i = 0; i < hubs; ++i) {
        HubDef h = simple_hub("h" + std::to_string(i));
        for (int j = 0; j < i; ++j) {
            if (rng() % 3 == 0) h.descriptives.push_back({"f" + std::to_string(j) + "_key", ScalarType::string, true,
                                                          "h" + std::to_string(j)});
        }
        spec.hubs.push_back(std::move(h));
    }
    std::shuffle(spec.hubs.begin(), spec.hubs.end(), rng);
    int stars = static_cast<int>(rng() % 4);
    for (int s = 0; s < stars; ++s) {
        StarDef st;
        st.name = "s" + std::to_string(s);
        std::set<std::string> used;
        for (int k = 0, n = static_cast<int>(rng() % 3) + 1; k < n; ++k) {
            std::string hub = "h" + std::to_string(rng() % static_cast<unsigned>(hubs));
            if (!used.insert(hub).second) continue;
            st.participants.push_back({Participant::Kind::hub, hub, hub + "_key", std::nullopt});
            st.key_columns.push_back(hub + "_key");
        }
        spec.stars.push_back(std::move(st));
    }
    return spec;
}

}  // namespace

TEST_CASE("fixture model is valid") {
    auto report = validate_model(fixture_spec());
    for (const auto& v : report.violations) MESSAGE(v.location << ": " << v.rule << ": " << v.message);
    CHECK(report.ok());
}

TEST_CASE("each broken model reports exactly its rule") {
    auto models = fixture::broken_models(testing::read_file(fixture::model_path()));
    REQUIRE(models.size() == 10);
    std::set<std::string> rules;
    for (const auto& m : models) {
        CAPTURE(m.rule);
        auto report = validate_model(parse_model(m.text).spec);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].rule == m.rule);
        CHECK(report.has(m.rule));
        rules.insert(m.rule);
    }
    CHECK(rules.size() == 10);
}

TEST_CASE("violation messages") {
    auto models = fixture::broken_models(testing::read_file(fixture::model_path()));
    auto by_rule = [&](const std::string& rule) {
        auto it = std::find_if(models.begin(), models.end(), [&](const auto& m) { return m.rule == rule; });
        REQUIRE(it != models.end());
        return validate_model(parse_model(it->text).spec).violations.at(0);
    };
    CHECK(by_rule("star.key_subset").message.find("key not subset of participants") != std::string::npos);
    CHECK(by_rule("star.key_subset").location == "star:customer_address");
    CHECK(by_rule("hub.business_key").message == "hub requires business key");
    CHECK(by_rule("hub.business_key").location == "hub:note");
}

TEST_CASE("validate_model is pure") {
    ModelSpec spec = fixture_spec();
    spec.stars[0].key_columns.push_back("nowhere");
    auto a = validate_model(spec);
    auto b = validate_model(spec);
    CHECK_FALSE(a.ok());
    CHECK(a.violations == b.violations);
}

TEST_CASE("further rules") {
    ModelSpec base = fixture_spec();
    auto only = [](const ModelSpec& spec, const std::string& rule) {
        auto report = validate_model(spec);
        CAPTURE(rule);
        CHECK(report.has(rule));
    };
    SUBCASE("load_source must be positive") {
        ModelSpec s = base;
        s.sources[0].load_source_id = 0;
        only(s, "source.load_source");
    }
    SUBCASE("collections need ndjson") {
        ModelSpec s = base;
        for (auto& src : s.sources) {
            if (src.name == "sales_orders") src.input_format = InputFormat::csv;
        }
        only(s, "source.csv_collection");
    }
    SUBCASE("foreign keys are strings") {
        ModelSpec s = base;
        for (auto& d : s.hubs[1].descriptives) {
            if (d.fk_hub) d.type = ScalarType::integer;
        }
        only(s, "fk.type");
    }
    SUBCASE("star key must not be empty") {
        ModelSpec s = base;
        s.stars[0].key_columns.clear();
        only(s, "star.key_empty");
    }
    SUBCASE("star participants must exist") {
        ModelSpec s = base;
        s.stars[0].participants[0].hub = "shopper";
        only(s, "star.unknown_hub");
    }
    SUBCASE("unknown mapping source") {
        ModelSpec s = base;
        s.hubs[0].mappings[0].source = "segments_v2";
        only(s, "mapping.unknown_source");
    }
    SUBCASE("gold base must exist") {
        ModelSpec s = base;
        s.gold_views[0].base = "vendor";
        only(s, "gold.base");
    }
    SUBCASE("rank joins need delete flags") {
        ModelSpec s = base;
        s.stars[0].has_delete_flag = false;
        only(s, "gold.join");
    }
    SUBCASE("temporal joins target scd2 dimensions") {
        ModelSpec s = base;
        for (auto& v : s.gold_views) {
            if (v.name == "dim_customer2") v.kind = GoldKind::scd1_dim;
        }
        only(s, "gold.temporal");
    }
}

TEST_CASE("capture_timestamp is allowed in a star key") {
    ModelSpec spec = fixture_spec();
    for (const StarDef& s : spec.stars) {
        std::set<std::string> allowed{"capture_timestamp"};
        for (const auto& p : s.participants) allowed.insert(p.column);
        for (const auto& k : s.key_columns) CHECK(allowed.count(k) == 1);
    }
}

TEST_CASE("resolve_load_order") {
    SUBCASE("fixture") {
        ModelSpec spec = fixture_spec();
        auto order = resolve_load_order(spec);
        CHECK(order.size() == spec.hubs.size() + spec.stars.size());
        CHECK(position(order, "hub_loyalty_segment") < position(order, "hub_customer"));
        for (const auto& h : spec.hubs) {
            for (const auto& s : spec.stars) CHECK(position(order, h.table_name()) < position(order, s.table_name()));
        }
        CHECK(order == std::vector<std::string>{"hub_loyalty_segment", "hub_customer", "hub_product",
                                                "hub_sales_order", "star_customer_address",
                                                "star_sales_order_item"});
    }
    SUBCASE("single hub") {
        ModelSpec spec;
        spec.hubs.push_back(simple_hub("a"));
        CHECK(resolve_load_order(spec) == std::vector<std::string>{"hub_a"});
    }
    SUBCASE("cycle") {
        ModelSpec spec;
        spec.hubs = {simple_hub("a"), simple_hub("b")};
        spec.hubs[0].descriptives.push_back({"b_key", ScalarType::string, true, "b"});
        spec.hubs[1].descriptives.push_back({"a_key", ScalarType::string, true, "a"});
        CHECK_THROWS_WITH_AS(resolve_load_order(spec), doctest::Contains("cyclic dependency among hubs"), ModelError);
    }
    SUBCASE("self reference") {
        ModelSpec spec;
        spec.hubs = {simple_hub("a")};
        spec.hubs[0].descriptives.push_back({"parent_key", ScalarType::string, true, "a"});
        CHECK_THROWS_AS(resolve_load_order(spec), ModelError);
    }
}

TEST_CASE("resolve_load_order respects every edge of random acyclic models") {
    for (std::uint32_t seed = 1; seed <= 200; ++seed) {
        CAPTURE(seed);
        ModelSpec spec = random_dag(seed);
        auto order = resolve_load_order(spec);
        std::vector<std::string> expected;
        for (const auto& h : spec.hubs) expected.push_back(h.table_name());
        for (const auto& s : spec.stars) expected.push_back(s.table_name());
        auto sorted_order = order;
        std::sort(sorted_order.begin(), sorted_order.end());
        std::sort(expected.begin(), expected.end());
        CHECK(sorted_order == expected);
        for (const auto& [target, dependent] : dependency_edges(spec)) {
            CHECK(position(order, target) < position(order, dependent));
        }
        CHECK(resolve_load_order(spec) == order);
    }
}

TEST_CASE("resolve_gold_order puts scd2 dimensions before facts") {
    auto order = resolve_gold_order(fixture_spec());
    CHECK(position(order, "dim_customer2") < position(order, "fact_order_item"));
    CHECK(order.size() == 4);
}
