#include <doctest.h>

#include <algorithm>

#include "bench.hpp"
#include "hubstar/errors.hpp"
#include "hubstar/keygen.hpp"

using namespace hubstar;
using testing::at;
using testing::Bench;

namespace {

const char* customer_header =
    "customer_id,customer_name,tax_id,tax_code,loyalty_segment,ship_to_address,valid_from,valid_to,deleted\n";

std::string customer(int id, const std::string& name, const std::string& segment, const std::string& address,
                     const std::string& valid_from, const std::string& valid_to = "", int deleted = 0) {
    return std::to_string(id) + "," + name + ",T" + std::to_string(id) + ",A," + segment + "," + address + "," +
           valid_from + "," + valid_to + "," + std::to_string(deleted) + "\n";
}

std::string order(int number, const std::string& epoch, const std::string& customer_id, int items) {
    std::string line = "{\"order_number\": " + std::to_string(number) + ", \"order_datetime\": \"" + epoch +
                       "\", \"customer_id\": " + customer_id + ", \"ordered_products\": [";
    for (int i = 0; i < items; ++i) {
        if (i) line += ", ";
        line += "{\"id\": \"p" + std::to_string(i) + "\", \"name\": \"n\", \"price\": " + std::to_string(10 + i) +
                ", \"curr\": \"USD\", \"qty\": \"" + std::to_string(i + 1) + "\", \"unit\": \"pcs\"}";
    }
    return line + "]}\n";
}

std::string key_of(int customer_id) { return sha256_hex(std::to_string(customer_id)); }

Record find_row(const std::vector<Record>& rows, const std::string& column, const Value& v) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const Record& r) { return r.at(column) == v; });
    REQUIRE(it != rows.end());
    return *it;
}

}  // namespace

TEST_CASE("default rows") {
    Bench b;
    SUBCASE("hub_customer") {
        auto rows = b.rows("hub_customer");
        REQUIRE(rows.size() == 1);
        const Record& d = rows[0];
        CHECK(d.at("load_source") == Value(0));
        for (const char* ts : {"capture_timestamp", "load_timestamp", "initial_capture_timestamp"}) {
            CHECK(d.at(ts) == Value(Timestamp::epoch()));
        }
        CHECK(d.at("customer_key") == Value("-1"));
        CHECK(d.at("customer_id") == Value(-1));
        CHECK(d.at("customer_name") == Value("null"));
        CHECK(d.at("loyalty_segment_key") == Value("-1"));
        CHECK(d.at("tax_id").is_null());
    }
    SUBCASE("string business keys and delete flags") {
        Record d = b.rows("hub_product").at(0);
        CHECK(d.at("product_id") == Value("null"));
        CHECK(d.at("delete_flag") == Value(0));
        Record so = b.rows("hub_sales_order").at(0);
        CHECK(so.at("order_datetime") == Value(Timestamp::epoch()));
    }
    SUBCASE("second init is an error") {
        CHECK_THROWS_AS(init_hub(b.spec, *b.spec.find_hub("customer"), b.wh), LoadError);
        CHECK(init_warehouse(b.spec, b.wh) == 0);
        CHECK(b.rows("hub_customer").size() == 1);
    }
}

TEST_CASE("system-generated keys") {
    std::string model = testing::read_file(fixture::model_path());
    auto pos = model.find("key computed cast(loyalty_segment_id as string)");
    model.replace(pos, std::string("key computed cast(loyalty_segment_id as string)").size(), "key system_generated");
    Bench b(model);
    CHECK(b.rows("hub_loyalty_segment").at(0).at("loyalty_segment_key") == Value("-1"));
    b.deliver("loyalty_segments", "loyalty_segment_id,loyalty_segment_description,unit_threshold\n7,a,1\n9,b,2\n",
              at(1));
    auto r = b.load("hub_loyalty_segment", at(2));
    CHECK(r.inserted == 2);
    auto rows = b.rows("hub_loyalty_segment");
    CHECK(find_row(rows, "loyalty_segment_id", 7).at("loyalty_segment_key") == Value("1"));
    CHECK(find_row(rows, "loyalty_segment_id", 9).at("loyalty_segment_key") == Value("2"));
    b.deliver("loyalty_segments", "loyalty_segment_id,loyalty_segment_description,unit_threshold\n7,c,1\n8,d,1\n",
              at(3));
    r = b.load("hub_loyalty_segment", at(4));
    CHECK(r.inserted == 1);
    CHECK(r.updated == 1);
    rows = b.rows("hub_loyalty_segment");
    CHECK(find_row(rows, "loyalty_segment_id", 7).at("loyalty_segment_key") == Value("1"));
    CHECK(find_row(rows, "loyalty_segment_id", 8).at("loyalty_segment_key") == Value("3"));
    CHECK(KeyCounter(key_counter_path(b.spec, *b.spec.find_hub("loyalty_segment"), b.wh)).last_issued() == 3);

    SUBCASE("references resolve through the hub") {
        b.deliver("customers", std::string(customer_header) + customer(1, "ada", "8", "x", "2019-01-01"), at(5));
        b.load("hub_customer", at(6));
        CHECK(find_row(b.rows("hub_customer"), "customer_id", 1).at("loyalty_segment_key") == Value("3"));
    }
}

TEST_CASE("load_hub") {
    Bench b;
    std::string five = customer_header;
    for (int id = 1; id <= 5; ++id) five += customer(id, "c" + std::to_string(id), "1", "a", "2019-01-01");
    b.deliver("customers", five, at(1));

    SUBCASE("fresh load then a rerun") {
        auto r = b.load("hub_customer", at(2));
        CHECK(r.scanned == 5);
        CHECK(r.inserted == 5);
        CHECK(r.updated == 0);
        REQUIRE(r.new_hwm.has_value());
        CHECK(*r.new_hwm == at(1));
        std::string bytes = b.bytes("hub_customer");
        auto again = b.load("hub_customer", at(3));
        CHECK(again.inserted == 0);
        CHECK(again.updated == 0);
        CHECK(b.bytes("hub_customer") == bytes);
        Record row = find_row(b.rows("hub_customer"), "customer_id", 3);
        CHECK(row.at("customer_key") == Value(key_of(3)));
        CHECK(row.at("loyalty_segment_key") == Value("1"));
        CHECK(row.at("load_source") == Value(1));
        CHECK(row.at("initial_capture_timestamp") == Value(at(1)));
        CHECK(row.at("load_timestamp") == Value(at(2)));
    }
    SUBCASE("latest version wins within a batch") {
        b.deliver("customers",
                  std::string(customer_header) + customer(7, "old", "1", "a", "2019-01-01") +
                      customer(7, "new", "2", "b", "2019-06-01") + customer(7, "older", "1", "a", "2018-01-01"),
                  at(2));
        b.load("hub_customer", at(3));
        Record row = find_row(b.rows("hub_customer"), "customer_id", 7);
        CHECK(row.at("customer_name") == Value("new"));
        CHECK(row.at("loyalty_segment_key") == Value("2"));
    }
    SUBCASE("identical re-delivery is skipped") {
        b.load("hub_customer", at(2));
        std::string bytes = b.bytes("hub_customer");
        b.deliver("customers", std::string(customer_header) + customer(2, "c2", "1", "a", "2019-01-01"), at(5));
        auto r = b.load("hub_customer", at(6));
        CHECK(r.unchanged_skipped == 1);
        CHECK(r.inserted == 0);
        CHECK(r.updated == 0);
        CHECK(b.bytes("hub_customer") == bytes);
    }
    SUBCASE("changed version updates in place") {
        b.load("hub_customer", at(2));
        b.deliver("customers", std::string(customer_header) + customer(2, "renamed", "", "a", "2019-02-01"), at(5));
        auto r = b.load("hub_customer", at(6));
        CHECK(r.updated == 1);
        CHECK(r.inserted + r.updated <= r.scanned);
        auto rows = b.rows("hub_customer");
        CHECK(rows.size() == 6);
        Record row = find_row(rows, "customer_id", 2);
        CHECK(row.at("customer_name") == Value("renamed"));
        CHECK(row.at("loyalty_segment_key") == Value("-1"));
        CHECK(row.at("capture_timestamp") == Value(at(5)));
        CHECK(row.at("load_timestamp") == Value(at(6)));
        CHECK(row.at("initial_capture_timestamp") == Value(at(1)));
        CHECK(r.new_hwm == at(5));
    }
    SUBCASE("rows at or below the high-water mark are ignored") {
        b.load("hub_customer", at(2));
        b.deliver("customers", std::string(customer_header) + customer(9, "late", "1", "a", "2019-01-01"), at(1));
        auto r = b.load("hub_customer", at(3));
        CHECK(r.scanned == 0);
        CHECK(b.rows("hub_customer").size() == 6);
    }
    SUBCASE("null business key") {
        b.deliver("customers", std::string(customer_header) + ",nobody,T,A,1,a,2019-01-01,,0\n", at(4));
        CHECK_THROWS_AS(b.load("hub_customer", at(5)), LoadError);
    }
}

TEST_CASE("hub deletes are logical") {
    Bench b;
    const char* header = "product_id,product_name,product_category,product_unit,updated_at,discontinued\n";
    b.deliver("products", std::string(header) + "p1,a,c,u,2019-01-01,0\np2,b,c,u,2019-01-01,0\n", at(1));
    b.load("hub_product", at(2));
    b.deliver("products", std::string(header) + "p1,a,c,u,2019-02-01,1\n", at(3));
    auto r = b.load("hub_product", at(4));
    CHECK(r.updated == 1);
    auto rows = b.rows("hub_product");
    CHECK(rows.size() == 3);
    Record p1 = find_row(rows, "product_id", "p1");
    CHECK(p1.at("delete_flag") == Value(1));
    CHECK(p1.at("product_key") == Value("1#p1"));
    CHECK(p1.at("capture_timestamp") == Value(Timestamp::from_civil(2019, 2, 1)));
}

TEST_CASE("load_star") {
    Bench b;
    SUBCASE("items explode with sequences 1..n") {
        b.deliver("sales_orders", order(12345, "1557153000", "1", 3) + order(12346, "1557153060", "null", 0), at(1));
        auto r = b.load("star_sales_order_item", at(2));
        CHECK(r.inserted == 3);
        auto rows = b.rows("star_sales_order_item");
        REQUIRE(rows.size() == 3);
        for (int i = 0; i < 3; ++i) {
            CHECK(rows[static_cast<std::size_t>(i)].at("sales_order_item_seq") == Value(i + 1));
            CHECK(rows[static_cast<std::size_t>(i)].at("sales_order_key") == Value("12345#20190506143000"));
            CHECK(rows[static_cast<std::size_t>(i)].at("qty") == Value(i + 1));
        }
        CHECK(rows[0].at("product_key") == Value("1#p0"));
        CHECK(rows[0].at("order_datetime") == Value(Timestamp::from_civil(2019, 5, 6, 14, 30)));
        auto again = b.load("star_sales_order_item", at(3));
        CHECK(again.inserted == 0);
        CHECK(again.updated == 0);
    }
    SUBCASE("null hub reference becomes the default key") {
        b.deliver("sales_orders", order(1, "1557153000", "null", 1), at(1));
        b.load("hub_sales_order", at(2));
        CHECK(find_row(b.rows("hub_sales_order"), "order_number", 1).at("customer_key") == Value("-1"));
    }
    SUBCASE("empty qualifying bronze") {
        auto r = b.load("star_customer_address", at(2));
        CHECK(r.scanned == 0);
        CHECK(r.inserted == 0);
        CHECK(r.updated == 0);
        CHECK(r.unchanged_skipped == 0);
    }
    SUBCASE("versions accumulate when capture_timestamp is keyed") {
        std::string v1 = std::string(customer_header) + customer(1, "ada", "1", "first", "2019-01-01");
        b.deliver("customers", v1, at(1));
        b.load("star_customer_address", at(2));
        b.deliver("customers", v1, at(3));
        auto r = b.load("star_customer_address", at(4));
        CHECK(r.inserted == 1);
        CHECK(b.rows("star_customer_address").size() == 2);
    }
    SUBCASE("delete then reactivation") {
        b.deliver("customers", std::string(customer_header) + customer(1, "ada", "1", "home", "2019-01-01"), at(1));
        b.deliver("customers", std::string(customer_header) + customer(1, "ada", "1", "home", "2019-01-01", "", 1),
                  at(2));
        b.load("star_customer_address", at(3));
        b.deliver("customers", std::string(customer_header) + customer(1, "ada", "1", "home", "2019-01-01"), at(4));
        b.load("star_customer_address", at(5));
        auto rows = b.rows("star_customer_address");
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].at("delete_flag") == Value(0));
        CHECK(rows[1].at("delete_flag") == Value(1));
        CHECK(rows[2].at("delete_flag") == Value(0));
        CHECK(rows[2].at("capture_timestamp") == Value(at(4)));
        CHECK(rows[2].at("customer_key") == Value(key_of(1)));
    }
    SUBCASE("null key column") {
        b.deliver("customers", std::string(customer_header) + customer(1, "ada", "1", "home", ""), at(1));
        CHECK_THROWS_WITH_AS(b.load("star_customer_address", at(2)), doctest::Contains("valid_from"), LoadError);
    }
}

TEST_CASE("stars without capture_timestamp in the key replace rows") {
    std::string model = testing::read_file(fixture::model_path());
    const std::string from = "key (customer_key, valid_from, capture_timestamp)";
    model.replace(model.find(from), from.size(), "key (customer_key, valid_from)");
    Bench b(model);
    b.deliver("customers", std::string(customer_header) + customer(1, "ada", "1", "home", "2019-01-01"), at(1));
    b.load("star_customer_address", at(2));
    b.deliver("customers",
              std::string(customer_header) + customer(1, "ada", "1", "moved", "2019-01-01") +
                  customer(1, "ada", "1", "moved again", "2019-01-01"),
              at(3));
    auto r = b.load("star_customer_address", at(4));
    CHECK(r.updated == 1);
    auto rows = b.rows("star_customer_address");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].at("ship_to_address") == Value("moved again"));
}

TEST_CASE("explode_collection") {
    Collection items{Record{{"id", "X"}, {"n", 3}}, Record{{"id", "Y"}, {"n", 1}}, Record{{"id", "Z"}, {"n", 2}}};
    Record parent{{"items", Value(items)}};
    SUBCASE("positional") {
        auto out = explode_collection(parent, {ItemKeyRule::Mode::positional, "items", {}, false});
        REQUIRE(out.size() == 3);
        CHECK(out[0].second == Value(1));
        CHECK(out[2].second == Value(3));
        CHECK(out[1].first.at("id") == Value("Y"));
    }
    SUBCASE("empty array") {
        Record empty{{"items", Value(Collection{})}};
        CHECK(explode_collection(empty, {ItemKeyRule::Mode::positional, "items", {}, false}).empty());
    }
    SUBCASE("explicit sequence") {
        auto out = explode_collection(parent, {ItemKeyRule::Mode::explicit_sequence, "items", {"n"}, false});
        CHECK(out[0].second == Value(3));
        Record dup{{"items", Value(Collection{Record{{"n", 1}}, Record{{"n", 1}}})}};
        CHECK_THROWS_AS(explode_collection(dup, {ItemKeyRule::Mode::explicit_sequence, "items", {"n"}, false}),
                        LoadError);
        Record null_seq{{"items", Value(Collection{Record{{"n", Value()}}})}};
        CHECK_THROWS_AS(explode_collection(null_seq, {ItemKeyRule::Mode::explicit_sequence, "items", {"n"}, false}),
                        LoadError);
    }
    SUBCASE("concat of attributes") {
        auto out = explode_collection(parent, {ItemKeyRule::Mode::concat_of_attributes, "items", {"id"}, false});
        CHECK(out[0].second == Value("X"));
        CHECK(out[1].second == Value("Y"));
        auto two = explode_collection(parent, {ItemKeyRule::Mode::concat_of_attributes, "items", {"id", "n"}, false});
        CHECK(two[0].second == Value("X#3"));
        auto hashed = explode_collection(parent, {ItemKeyRule::Mode::concat_of_attributes, "items", {"id"}, true});
        CHECK(hashed[0].second == Value(sha256_hex("X")));
    }
}
