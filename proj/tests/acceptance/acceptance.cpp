// Acceptance run over the retail fixture: one line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "broken_models.hpp"
#include "hubstar/cli.hpp"
#include "hubstar/dsl.hpp"
#include "hubstar/keygen.hpp"
#include "hubstar/layout.hpp"
#include "hubstar/pipeline.hpp"
#include "hubstar/validate.hpp"
#include "random_model.hpp"
#include "retail_fixture.hpp"
#include "temp_dir.hpp"

using namespace hubstar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt_seconds(double s) {
    std::ostringstream o;
    o.precision(3);
    o << std::fixed << s << " s";
    return o.str();
}

const std::string now_text = fixture::fixture_now().iso8601();

/// Ingests the deliveries in `batches` order, loading silver after each batch.
Outcome run_batches(const fs::path& root, const std::vector<std::vector<fixture::Delivery>>& batches) {
    Outcome o;
    std::string r = root.string();
    CliRun init = cli({"--root", r, "--model", fixture::model_path().string(), "init"});
    o.require(init.code == exit_ok, "init failed: " + init.err);
    for (const auto& batch : batches) {
        for (const auto& d : batch) {
            CliRun in = cli({"--root", r, "ingest", "--source", d.source, "--input", d.path.string(), "--mtime",
                             d.mtime.iso8601(), "--now", now_text});
            o.require(in.code == exit_ok, "ingest failed: " + in.err);
        }
        CliRun load = cli({"--root", r, "load-silver", "--now", now_text});
        o.require(load.code == exit_ok, "load-silver failed: " + load.err);
    }
    return o;
}

std::vector<std::vector<fixture::Delivery>> split(const std::vector<fixture::Delivery>& all, std::size_t parts,
                                                  std::mt19937& rng) {
    std::vector<std::size_t> cuts(all.size() - 1);
    std::iota(cuts.begin(), cuts.end(), 1);
    std::shuffle(cuts.begin(), cuts.end(), rng);
    cuts.resize(parts - 1);
    cuts.push_back(0);
    cuts.push_back(all.size());
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::vector<fixture::Delivery>> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        out.emplace_back(all.begin() + static_cast<long>(cuts[i]), all.begin() + static_cast<long>(cuts[i + 1]));
    }
    return out;
}

std::map<std::string, std::string> data_files(const fs::path& schema_dir) {
    std::map<std::string, std::string> files;
    if (!fs::is_directory(schema_dir)) return files;
    for (const auto& e : fs::directory_iterator(schema_dir)) {
        if (fs::exists(e.path() / "data")) files[e.path().filename().string()] = testing::read_file(e.path() / "data");
    }
    return files;
}

/// Shared clean end-to-end run: every delivery in arrival order, silver after each, then gold.
struct World {
    testing::TempDir dir;
    fixture::Dataset ds;
    ModelSpec spec;
    fs::path root;
    Outcome setup;

    World() {
        ds = fixture::generate(dir / "deliveries");
        spec = parse_model(testing::read_file(fixture::model_path())).spec;
        root = dir / "clean";
        std::vector<std::vector<fixture::Delivery>> batches;
        for (const auto& d : ds.deliveries) batches.push_back({d});
        setup = run_batches(root, batches);
        CliRun gold = cli({"--root", root.string(), "build-gold", "--now", now_text});
        setup.require(gold.code == exit_ok, "build-gold failed: " + gold.err);
    }

    Warehouse warehouse() const { return Warehouse(root); }
    std::vector<Record> silver(const std::string& table) const {
        return warehouse().open_table(spec.schema_names.silver(), table).scan();
    }
    std::vector<Record> gold(const std::string& view) const {
        return warehouse().open_table(spec.schema_names.gold(), view).scan();
    }
};

Outcome ac1(const World&) {
    Outcome o;
    auto start = std::chrono::steady_clock::now();
    std::string text = testing::read_file(fixture::model_path());
    auto report = validate_model(parse_model(text).spec);
    o.require(report.ok(), "fixture model has " + std::to_string(report.violations.size()) + " violations");
    auto broken = fixture::broken_models(text);
    o.require(broken.size() == 10, "expected 10 broken models");
    for (const auto& m : broken) {
        auto r = validate_model(parse_model(m.text).spec);
        o.require(r.violations.size() == 1 && r.violations[0].rule == m.rule,
                  m.rule + ": got " + std::to_string(r.violations.size()) + " violations");
    }
    double t = seconds_since(start);
    o.require(t < 1.0, "took " + fmt_seconds(t));
    if (o.pass) o.detail = "fixture clean, 10/10 broken models flagged, " + fmt_seconds(t);
    return o;
}

/// Business key tuple to hub key, for every computed-key hub.
std::map<std::string, std::string> hub_keys(const ModelSpec& spec, const Warehouse& wh) {
    std::map<std::string, std::string> keys;
    for (const HubDef& h : spec.hubs) {
        if (h.key_type != KeyType::computed) continue;
        std::vector<std::string> bk = {meta::load_source};
        for (const auto& b : h.business_keys) bk.push_back(b.name);
        for (const Record& r : wh.open_table(spec.schema_names.silver(), h.table_name()).scan()) {
            keys[h.name + "|" + tuple_key(r, bk)] = r.at(h.key_column()).as_string();
        }
    }
    return keys;
}

Outcome ac2(const World& w) {
    Outcome o;
    fs::path copy = w.dir / "reload";
    fs::copy(w.root, copy, fs::copy_options::recursive);
    Warehouse wh(copy);
    auto before = hub_keys(w.spec, wh);
    for (const std::string& table : resolve_load_order(w.spec)) wh.drop_table(w.spec.schema_names.silver(), table);
    init_warehouse(w.spec, wh);
    load_silver(w.spec, wh, fixture::fixture_now());
    auto after = hub_keys(w.spec, wh);
    o.require(before.size() > 4, "no hub rows to compare");
    o.require(before == after, "hub keys differ after reload");
    if (o.pass) o.detail = std::to_string(before.size()) + " hub keys identical after drop and reload";
    return o;
}

Outcome ac3(const World& w) {
    Outcome o;
    fs::path copy = w.dir / "idempotent";
    fs::copy(w.root, copy, fs::copy_options::recursive);
    auto before = data_files(copy / w.spec.schema_names.silver());
    CliRun load = cli({"--root", copy.string(), "load-silver", "--now", now_text});
    o.require(load.code == exit_ok, "load-silver failed: " + load.err);
    std::istringstream lines(load.out);
    std::size_t tables = 0;
    for (std::string line; std::getline(lines, line);) {
        ++tables;
        o.require(line.find(" inserted=0 updated=0 ") != std::string::npos, "not a no-op: " + line);
    }
    o.require(tables == w.spec.hubs.size() + w.spec.stars.size(), "unexpected load report");
    o.require(data_files(copy / w.spec.schema_names.silver()) == before, "silver data files changed");
    if (o.pass) o.detail = std::to_string(tables) + " tables: inserted=0 updated=0, data files byte-identical";
    return o;
}

Outcome ac4(const World& w) {
    Outcome o;
    auto start = std::chrono::steady_clock::now();
    std::mt19937 rng(fixture::default_seed);
    std::vector<std::string> notes;
    for (std::size_t parts : {1u, 2u, 7u}) {
        fs::path root = w.dir / ("split" + std::to_string(parts));
        auto batches = split(w.ds.deliveries, parts, rng);
        Outcome run = run_batches(root, batches);
        o.require(run.pass, run.detail);
        std::vector<std::string> args = {"--root", root.string(), "check", "--against-oracle"};
        if (parts == 1) args.push_back("--strict-timestamps");
        CliRun check = cli(args);
        bool clean = check.code == exit_ok && check.out.find("\n0 oracle differences\n") != std::string::npos;
        o.require(clean, std::to_string(parts) + " batches: " + check.out.substr(0, 300));
        notes.push_back(std::to_string(batches.size()));
    }
    double t = seconds_since(start);
    o.require(t < 10.0, "took " + fmt_seconds(t));
    if (o.pass) o.detail = "empty diff for " + notes[0] + ", " + notes[1] + " and " + notes[2] + " batches, " + fmt_seconds(t);
    return o;
}

Outcome ac5(const World& w) {
    Outcome o;
    ConstraintReport report = check_silver(w.spec, w.warehouse());
    using K = ConstraintViolation::Kind;
    for (K k : {K::primary_key, K::unique, K::foreign_key, K::null_value}) {
        o.require(report.count(k) == 0, std::to_string(report.count(k)) + " " + std::string(to_string(k)) + " violations");
    }
    o.require(report.empty(), "violations reported");
    if (o.pass) o.detail = "0 primary_key, unique, foreign_key and null violations";
    return o;
}

Outcome ac6(const World& w) {
    Outcome o;
    for (const HubDef& h : w.spec.hubs) {
        auto rows = w.silver(h.table_name());
        auto defaults = std::count_if(rows.begin(), rows.end(),
                                      [&](const Record& r) { return r.at(h.key_column()) == Value("-1"); });
        o.require(defaults == 1, h.table_name() + " has " + std::to_string(defaults) + " default rows");
        for (const Record& r : rows) {
            if (r.at(h.key_column()) != Value("-1")) continue;
            o.require(r.at(meta::load_source) == Value(0), h.table_name() + " default load_source");
            for (const char* ts : {meta::capture_timestamp, meta::load_timestamp, meta::initial_capture_timestamp}) {
                o.require(field_or_null(r, ts).is_timestamp() &&
                              r.at(ts).as_timestamp().iso8601() == "1970-01-01T00:00:00Z",
                          h.table_name() + " default " + ts);
            }
        }
    }
    // Weak keys: every FK column in silver is non-null; sourced nulls hold "-1".
    std::size_t fk_columns = 0;
    for (const std::string& table : resolve_load_order(w.spec)) {
        TableManifest m = w.warehouse().open_table(w.spec.schema_names.silver(), table).manifest();
        for (const auto& fk : m.foreign_keys) {
            ++fk_columns;
            for (const Record& r : w.silver(table)) {
                o.require(!field_or_null(r, fk.column).is_null(), table + "." + fk.column + " holds null");
            }
        }
    }
    std::set<std::int64_t> no_segment(w.ds.customers_without_segment.begin(), w.ds.customers_without_segment.end());
    std::size_t seg_defaults = 0;
    for (const Record& r : w.silver("hub_customer")) {
        bool expected_default = no_segment.count(r.at("customer_id").as_integer()) == 1;
        if (expected_default) {
            ++seg_defaults;
            o.require(r.at("loyalty_segment_key") == Value("-1"), "customer without segment not defaulted");
        }
    }
    o.require(seg_defaults == no_segment.size(), "customers without segment missing");
    auto orders = w.silver("hub_sales_order");
    auto orphan = std::count_if(orders.begin(), orders.end(), [](const Record& r) {
        return r.at("customer_key") == Value("-1") && r.at("sales_order_key") != Value("-1");
    });
    o.require(static_cast<std::size_t>(orphan) == w.ds.orders_without_customer,
              std::to_string(orphan) + " orders reference the default customer");
    if (o.pass) {
        o.detail = std::to_string(w.spec.hubs.size()) + " hubs with one epoch default row, " +
                   std::to_string(fk_columns) + " FK columns null-free, " + std::to_string(seg_defaults + orphan) +
                   " sourced nulls hold -1";
    }
    return o;
}

Outcome ac7(const World& w) {
    Outcome o;
    BronzeHistory history = read_bronze_history(w.spec, w.warehouse());
    std::map<std::int64_t, std::size_t> lengths;
    std::size_t total = 0;
    for (const Record& r : history.at("sales_orders")) {
        std::size_t n = r.at("ordered_products").is_collection() ? r.at("ordered_products").as_collection().size() : 0;
        lengths[r.at("order_number").as_integer()] = n;
        total += n;
    }
    auto star = w.silver("star_sales_order_item");
    o.require(star.size() == total, std::to_string(star.size()) + " star rows vs " + std::to_string(total) + " items");
    std::map<std::string, std::vector<std::int64_t>> seqs;
    std::map<std::string, std::int64_t> order_of;
    for (const Record& h : w.silver("hub_sales_order")) order_of[h.at("sales_order_key").as_string()] = h.at("order_number").as_integer();
    for (const Record& r : star) seqs[r.at("sales_order_key").as_string()].push_back(r.at("sales_order_item_seq").as_integer());
    o.require(seqs.size() == lengths.size(), "orders missing from the star");
    for (auto& [key, list] : seqs) {
        std::sort(list.begin(), list.end());
        std::size_t expected = lengths[order_of[key]];
        bool ok = list.size() == expected;
        for (std::size_t i = 0; ok && i < list.size(); ++i) ok = list[i] == static_cast<std::int64_t>(i + 1);
        o.require(ok, "order " + key + " sequence is not 1..n");
    }
    if (o.pass) o.detail = std::to_string(total) + " items over " + std::to_string(seqs.size()) + " orders, sequences 1..n";
    return o;
}

Outcome ac8(const World& w) {
    Outcome o;
    std::string ckey = sha256_hex(std::to_string(w.ds.scripted_customer_id));
    std::vector<Record> versions;
    for (const Record& r : w.silver("star_customer_address")) {
        if (r.at("customer_key") == Value(ckey)) versions.push_back(r);
    }
    o.require(versions.size() >= 4, std::to_string(versions.size()) + " star versions");
    std::set<std::string> addresses;
    bool deleted = false, reactivated = false;
    std::sort(versions.begin(), versions.end(), [](const Record& a, const Record& b) {
        return a.at(meta::capture_timestamp).as_timestamp() < b.at(meta::capture_timestamp).as_timestamp();
    });
    for (std::size_t i = 0; i < versions.size(); ++i) {
        addresses.insert(versions[i].at("ship_to_address").as_string());
        if (versions[i].at(meta::delete_flag) == Value(1)) {
            deleted = true;
            for (std::size_t j = i + 1; j < versions.size(); ++j) {
                reactivated = reactivated || (versions[j].at(meta::delete_flag) == Value(0) &&
                                              versions[j].at("valid_from") == versions[i].at("valid_from") &&
                                              versions[j].at("ship_to_address") == versions[i].at("ship_to_address"));
            }
        }
    }
    o.require(addresses == std::set<std::string>(w.ds.scripted_addresses.begin(), w.ds.scripted_addresses.end()),
              "star does not hold all three addresses");
    o.require(deleted && reactivated, "delete and reactivation not both kept");

    std::vector<Record> scd1;
    for (const Record& r : w.gold("dim_customer")) {
        if (r.at("customer_key") == Value(ckey)) scd1.push_back(r);
    }
    o.require(scd1.size() == 1, "dim_customer rows for the scripted customer: " + std::to_string(scd1.size()));
    if (scd1.size() == 1) {
        o.require(scd1[0].at("ship_to_address") == Value(w.ds.scripted_addresses.back()), "dim_customer address");
    }

    // Retained versions: latest capture per valid_from, kept when not deleted.
    std::map<Timestamp, const Record*> latest;
    for (const Record& r : versions) latest[r.at("valid_from").as_timestamp()] = &r;
    std::set<std::string> expected_keys;
    for (const auto& [from, r] : latest) {
        if (r->at(meta::delete_flag) == Value(0)) expected_keys.insert(ckey + "#" + from.iso8601());
    }
    std::set<std::string> scd2_keys;
    for (const Record& r : w.gold("dim_customer2")) {
        if (r.at("customer_key") == Value(ckey)) scd2_keys.insert(r.at("customer2_key").as_string());
    }
    o.require(expected_keys.size() == w.ds.scripted_addresses.size(), "scripted history does not retain 3 versions");
    o.require(scd2_keys == expected_keys, "dim_customer2 keys differ from the retained versions");
    if (o.pass) {
        o.detail = std::to_string(versions.size()) + " star versions, 1 scd1 row, " + std::to_string(scd2_keys.size()) +
                   " scd2 rows keyed " + *scd2_keys.begin();
    }
    return o;
}

Outcome ac9(const World& w) {
    Outcome o;
    std::map<std::string, Record> dim;
    std::map<std::string, std::vector<const Record*>> by_customer;
    auto dim_rows = w.gold("dim_customer2");
    for (const Record& r : dim_rows) {
        dim.emplace(r.at("customer2_key").as_string(), r);
        by_customer[r.at("customer_key").as_string()].push_back(&r);
    }
    auto inside = [](const Record& d, Timestamp t) {
        const Value& from = d.at("valid_from");
        const Value& to = d.at("valid_to");
        return from.is_timestamp() && from.as_timestamp() <= t && (to.is_null() || t <= to.as_timestamp());
    };
    std::size_t joined = 0, facts = 0;
    for (const Record& f : w.gold("fact_order_item")) {
        ++facts;
        Timestamp t = f.at("order_datetime").as_timestamp();
        std::size_t matches = 0;
        for (const Record* d : by_customer[f.at("customer_key").as_string()]) matches += inside(*d, t) ? 1 : 0;
        o.require(matches <= 1, "fact matches " + std::to_string(matches) + " versions");
        if (f.at("customer2_key").is_null()) {
            o.require(matches == 0, "unjoined fact has a covering version");
            continue;
        }
        ++joined;
        auto it = dim.find(f.at("customer2_key").as_string());
        o.require(it != dim.end(), "fact references an unknown scd2 key");
        if (it != dim.end()) o.require(inside(it->second, t), "order_datetime outside the joined version");
    }
    o.require(joined > 0, "no fact joined a version");
    if (o.pass) o.detail = std::to_string(joined) + " of " + std::to_string(facts) + " facts joined, each inside exactly one version";
    return o;
}

Outcome ac10(const World& w) {
    Outcome o;
    fs::path copy = w.dir / "regold";
    fs::copy(w.root, copy, fs::copy_options::recursive);
    CliRun first = cli({"--root", copy.string(), "build-gold", "--now", now_text});
    auto a = data_files(copy / w.spec.schema_names.gold());
    CliRun second = cli({"--root", copy.string(), "build-gold", "--now", now_text});
    auto b = data_files(copy / w.spec.schema_names.gold());
    o.require(first.code == exit_ok && second.code == exit_ok, "build-gold failed");
    o.require(a.size() == w.spec.gold_views.size(), "gold tables missing");
    o.require(a == b, "gold bytes differ between builds");
    if (o.pass) o.detail = std::to_string(a.size()) + " gold tables byte-identical";
    return o;
}

Outcome ac11(const World&) {
    Outcome o;
    o.require(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855", "sha256 of empty");
    o.require(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad", "sha256 of abc");
    if (o.pass) o.detail = "empty and \"abc\" digests match";
    return o;
}

Outcome ac12(const World&) {
    Outcome o;
    auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ModelSpec spec = fixture::random_model(seed * 7919);
        ModelSpec once = parse_model(render_model(spec)).spec;
        ModelSpec twice = parse_model(render_model(once)).spec;
        o.require(once == spec && twice == once, "seed " + std::to_string(seed * 7919) + " does not round-trip");
    }
    double t = seconds_since(start);
    o.require(t < 5.0, "took " + fmt_seconds(t));
    if (o.pass) o.detail = "100 random models round-trip, " + fmt_seconds(t);
    return o;
}

}  // namespace

int main() {
    World world;
    if (!world.setup.pass) std::cerr << "setup: " << world.setup.detail << "\n";
    const std::vector<std::pair<std::string, std::function<Outcome(const World&)>>> criteria = {
        {"AC1 model validation", ac1},       {"AC2 reload determinism", ac2}, {"AC3 idempotent reload", ac3},
        {"AC4 oracle equivalence", ac4},     {"AC5 constraint audit", ac5},   {"AC6 default rows", ac6},
        {"AC7 item explosion", ac7},         {"AC8 version history", ac8},    {"AC9 temporal fact join", ac9},
        {"AC10 gold rebuild determinism", ac10}, {"AC11 hash conformance", ac11}, {"AC12 DSL round-trip", ac12},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check(world);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!world.setup.pass) o.require(false, "setup failed");
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
        failed += o.pass ? 0 : 1;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
