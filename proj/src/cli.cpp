#include "hubstar/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "file_io.hpp"
#include "hubstar/bronze.hpp"
#include "hubstar/dsl.hpp"
#include "hubstar/errors.hpp"
#include "hubstar/pipeline.hpp"
#include "hubstar/validate.hpp"

namespace hubstar {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string root;
    std::string model;

    std::string validate_model;

    std::string source;
    std::string input;
    std::string mtime;
    std::string now;

    std::string table;
    std::string view;

    bool against_oracle = false;
    bool strict_timestamps = false;

    std::string format = "csv";
    std::string out_path;
    std::size_t limit = 20;
};

/// Operational failure carrying its message to stderr and exit code 2.
struct Failure {
    std::string message;
};

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

fs::path resolve_root(const Options& o) {
    if (!o.root.empty()) return o.root;
    if (auto r = env("HUBSTAR_ROOT")) return *r;
    throw Failure{"no warehouse root: pass --root or set HUBSTAR_ROOT"};
}

fs::path resolve_model_path(const Options& o, const fs::path& root) {
    if (!o.model.empty()) return o.model;
    if (auto m = env("HUBSTAR_MODEL")) return *m;
    return root / "model.hsm";
}

Timestamp parse_instant(const std::string& text, const char* flag) {
    if (text.empty()) {
        auto now = std::chrono::system_clock::now().time_since_epoch();
        return Timestamp(std::chrono::duration_cast<std::chrono::microseconds>(now).count());
    }
    auto ts = Timestamp::parse(text);
    if (!ts) throw Failure{std::string("invalid ") + flag + " value '" + text + "'; expected ISO-8601"};
    return *ts;
}

void print_violations(const ValidationReport& report, std::ostream& out) {
    for (const Violation& v : report.violations) out << v.location << ": " << v.rule << ": " << v.message << "\n";
    out << report.violations.size() << (report.violations.size() == 1 ? " violation" : " violations") << "\n";
}

/// Parses the model; model errors are reported and turn into exit code 1.
std::optional<ModelSpec> load_model(const fs::path& path, std::ostream& out, std::ostream& err) {
    if (!fs::exists(path)) throw Failure{"model file not found: " + path.string()};
    ModelDocument doc;
    try {
        doc = parse_model(detail::read_file(path));
    } catch (const ParseError& e) {
        err << path.string() << ":" << e.what() << "\n";
        return std::nullopt;
    }
    ValidationReport report = validate_model(doc.spec);
    if (!report.ok()) {
        print_violations(report, out);
        return std::nullopt;
    }
    try {
        resolve_load_order(doc.spec);
    } catch (const ModelError& e) {
        err << e.what() << "\n";
        return std::nullopt;
    }
    return doc.spec;
}

std::pair<std::string, std::string> resolve_table(const ModelSpec& spec, const Warehouse& wh, const std::string& name) {
    auto dot = name.find('.');
    if (dot != std::string::npos) {
        std::string schema = name.substr(0, dot), table = name.substr(dot + 1);
        if (!wh.has_table(schema, table)) throw Failure{"no such table " + name};
        return {schema, table};
    }
    std::vector<std::pair<std::string, std::string>> hits;
    for (const std::string* schema : {&spec.schema_names.bronze(), &spec.schema_names.silver(), &spec.schema_names.gold()}) {
        if (wh.has_table(*schema, name)) hits.emplace_back(*schema, name);
    }
    if (hits.empty()) throw Failure{"no such table " + name};
    if (hits.size() > 1) throw Failure{"table name " + name + " is ambiguous; qualify it as <schema>.<table>"};
    return hits.front();
}

std::string csv_field(const Value& v) {
    if (v.is_null()) return {};
    std::string text = v.to_text();
    bool quote = text.empty() || text.find_first_of(",\"\r\n") != std::string::npos;
    if (!quote) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_csv(const TableManifest& m, const std::vector<Record>& rows, std::ostream& out) {
    std::vector<std::string> names = m.column_names();
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << csv_field(Value(names[i]));
    out << "\n";
    for (const Record& r : rows) {
        for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << csv_field(field_or_null(r, names[i]));
        out << "\n";
    }
}

std::string format_hwm(const std::optional<Timestamp>& ts) { return ts ? ts->iso8601() : "none"; }

int cmd_init(const Options& o, std::ostream& out, std::ostream& err) {
    fs::path root = resolve_root(o);
    fs::path model_path = resolve_model_path(o, root);
    auto spec = load_model(model_path, out, err);
    if (!spec) return exit_violations;
    fs::create_directories(root);
    fs::path stored = root / "model.hsm";
    if (fs::weakly_canonical(model_path) != fs::weakly_canonical(stored)) {
        detail::write_file_atomic(stored, detail::read_file(model_path));
    }
    Warehouse wh(root);
    std::size_t created = init_warehouse(*spec, wh);
    out << "initialized " << root.string() << ": " << created << " tables created\n";
    return exit_ok;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
    fs::path path;
    if (!o.validate_model.empty()) {
        path = o.validate_model;
    } else if (!o.model.empty()) {
        path = o.model;
    } else if (auto m = env("HUBSTAR_MODEL")) {
        path = *m;
    } else {
        path = resolve_root(o) / "model.hsm";
    }
    if (!fs::exists(path)) throw Failure{"model file not found: " + path.string()};
    ModelDocument doc;
    try {
        doc = parse_model(detail::read_file(path));
    } catch (const ParseError& e) {
        err << path.string() << ":" << e.what() << "\n";
        out << "1 violation\n";
        return exit_violations;
    }
    ValidationReport report = validate_model(doc.spec);
    if (report.ok()) {
        try {
            resolve_load_order(doc.spec);
        } catch (const ModelError& e) {
            report.violations.push_back({"hub.fk_cycle", "model", e.what()});
        }
    }
    print_violations(report, out);
    return report.ok() ? exit_ok : exit_violations;
}

struct Session {
    fs::path root;
    ModelSpec spec;
    Warehouse warehouse;
};

std::optional<Session> open_session(const Options& o, std::ostream& out, std::ostream& err) {
    fs::path root = resolve_root(o);
    if (!fs::is_directory(root)) throw Failure{"warehouse root " + root.string() + " does not exist; run init"};
    auto spec = load_model(resolve_model_path(o, root), out, err);
    if (!spec) return std::nullopt;
    return Session{root, std::move(*spec), Warehouse(root)};
}

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
    auto s = open_session(o, out, err);
    if (!s) return exit_violations;
    const SourceDef* source = s->spec.find_source(o.source);
    if (!source) throw Failure{"unknown source " + o.source};
    std::optional<Timestamp> mtime;
    if (!o.mtime.empty()) mtime = parse_instant(o.mtime, "--mtime");
    Timestamp now = parse_instant(o.now, "--now");
    LoadResult r = ingest_file(s->spec, *source, s->warehouse, o.input, mtime, now);
    out << s->spec.schema_names.bronze() << "." << source->name << ": ingested " << r.inserted << " rows from "
        << o.input << "\n";
    return exit_ok;
}

int cmd_load_silver(const Options& o, std::ostream& out, std::ostream& err) {
    auto s = open_session(o, out, err);
    if (!s) return exit_violations;
    Timestamp now = parse_instant(o.now, "--now");
    std::optional<std::string> table;
    if (!o.table.empty()) table = o.table;
    for (const TableLoad& l : load_silver(s->spec, s->warehouse, now, table)) {
        out << s->spec.schema_names.silver() << "." << l.table << ": scanned=" << l.result.scanned
            << " inserted=" << l.result.inserted << " updated=" << l.result.updated
            << " unchanged=" << l.result.unchanged_skipped << " hwm=" << format_hwm(l.result.new_hwm) << "\n";
    }
    return exit_ok;
}

int cmd_build_gold(const Options& o, std::ostream& out, std::ostream& err) {
    auto s = open_session(o, out, err);
    if (!s) return exit_violations;
    Timestamp now = parse_instant(o.now, "--now");
    std::optional<std::string> view;
    if (!o.view.empty()) view = o.view;
    for (const GoldBuildResult& r : build_gold(s->spec, s->warehouse, now, view)) {
        out << s->spec.schema_names.gold() << "." << r.view_name << ": " << r.rows << " rows\n";
    }
    return exit_ok;
}

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
    auto s = open_session(o, out, err);
    if (!s) return exit_violations;
    ConstraintReport report = check_silver(s->spec, s->warehouse);
    std::sort(report.violations.begin(), report.violations.end(), [](const auto& a, const auto& b) {
        return std::tie(a.table, a.detail) < std::tie(b.table, b.detail);
    });
    for (const ConstraintViolation& v : report.violations) {
        out << v.table << ": " << to_string(v.kind) << ": " << v.detail << "\n";
    }
    out << report.violations.size() << " constraint violations\n";
    std::size_t differences = 0;
    if (o.against_oracle) {
        OracleOptions opts;
        opts.hub_capture_timestamps = o.strict_timestamps;
        std::vector<StateDiff> diffs = check_against_oracle(s->spec, s->warehouse, opts);
        std::vector<std::string> lines;
        for (const StateDiff& d : diffs) {
            for (const RowDelta& r : d.missing_rows) lines.push_back(r.table + ": missing " + r.key);
            for (const RowDelta& r : d.extra_rows) lines.push_back(r.table + ": extra " + r.key);
            for (const RowDelta& r : d.mismatched_rows) {
                std::string line = r.table + ": mismatch " + r.key;
                for (const ColumnDelta& c : r.columns) {
                    line += " " + c.column + "=" + c.actual.debug() + " (expected " + c.expected.debug() + ")";
                }
                lines.push_back(line);
            }
            differences += d.size();
        }
        std::stable_sort(lines.begin(), lines.end(), [](const std::string& a, const std::string& b) {
            return a.substr(0, a.find(':')) < b.substr(0, b.find(':'));
        });
        for (const std::string& line : lines) out << line << "\n";
        out << differences << " oracle differences\n";
    }
    return report.empty() && differences == 0 ? exit_ok : exit_violations;
}

int cmd_export(const Options& o, std::ostream& out, std::ostream& err) {
    auto s = open_session(o, out, err);
    if (!s) return exit_violations;
    auto [schema, name] = resolve_table(s->spec, s->warehouse, o.table);
    Table table = s->warehouse.open_table(schema, name);
    std::vector<Record> rows = table.scan();
    std::ostringstream text;
    if (o.format == "csv") {
        write_csv(table.manifest(), rows, text);
    } else {
        for (const Record& r : rows) text << encode_row(table.manifest(), r) << "\n";
    }
    detail::write_file_atomic(o.out_path, text.str());
    out << schema << "." << name << ": exported " << rows.size() << " rows to " << o.out_path << "\n";
    return exit_ok;
}

int cmd_show(const Options& o, std::ostream& out, std::ostream& err) {
    auto s = open_session(o, out, err);
    if (!s) return exit_violations;
    auto [schema, name] = resolve_table(s->spec, s->warehouse, o.table);
    Table table = s->warehouse.open_table(schema, name);
    std::vector<Record> rows = table.scan();
    if (rows.size() > o.limit) rows.resize(o.limit);
    write_csv(table.manifest(), rows, out);
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Hub Star modeling compiler and medallion pipeline engine", "hubstar"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--root", o.root, "Warehouse root directory (default: $HUBSTAR_ROOT)");
    app.add_option("--model", o.model, "Model file (default: $HUBSTAR_MODEL, else <root>/model.hsm)");

    auto* init = app.add_subcommand("init", "Create the warehouse tables and hub default rows");
    auto* validate = app.add_subcommand("validate", "Parse and validate a model");
    validate->add_option("model", o.validate_model, "Model file");

    auto* ingest = app.add_subcommand("ingest", "Append a source file to its bronze table");
    ingest->add_option("--source", o.source, "Source name")->required();
    ingest->add_option("--input", o.input, "Input file")->required();
    ingest->add_option("--mtime", o.mtime, "Override the file modification time (ISO-8601)");
    ingest->add_option("--now", o.now, "Pipeline time (ISO-8601)");

    auto* load = app.add_subcommand("load-silver", "Incrementally load hubs and stars from bronze");
    load->add_option("--table", o.table, "Load only this silver table");
    load->add_option("--now", o.now, "Pipeline time (ISO-8601)");

    auto* gold = app.add_subcommand("build-gold", "Materialize gold views");
    gold->add_option("--view", o.view, "Build only this view");
    gold->add_option("--now", o.now, "Pipeline time (ISO-8601)");

    auto* check = app.add_subcommand("check", "Audit silver constraints");
    check->add_flag("--against-oracle", o.against_oracle, "Also diff silver against the bronze oracle");
    check->add_flag("--strict-timestamps", o.strict_timestamps,
                    "Compare hub capture timestamps too (valid after a single-batch load)");

    auto* exp = app.add_subcommand("export", "Write a table to a file");
    exp->add_option("--table", o.table, "Table name or <schema>.<table>")->required();
    exp->add_option("--format", o.format, "csv or ndjson")->check(CLI::IsMember({"csv", "ndjson"}));
    exp->add_option("--out", o.out_path, "Output file")->required();

    auto* show = app.add_subcommand("show", "Print the first rows of a table as CSV");
    show->add_option("--table", o.table, "Table name or <schema>.<table>")->required();
    show->add_option("--limit", o.limit, "Maximum rows");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "hubstar: " << e.what() << "\n" << app.help();
        return exit_error;
    }

    try {
        if (init->parsed()) return cmd_init(o, out, err);
        if (validate->parsed()) return cmd_validate(o, out, err);
        if (ingest->parsed()) return cmd_ingest(o, out, err);
        if (load->parsed()) return cmd_load_silver(o, out, err);
        if (gold->parsed()) return cmd_build_gold(o, out, err);
        if (check->parsed()) return cmd_check(o, out, err);
        if (exp->parsed()) return cmd_export(o, out, err);
        if (show->parsed()) return cmd_show(o, out, err);
    } catch (const Failure& f) {
        err << "hubstar: " << f.message << "\n";
        return exit_error;
    } catch (const std::exception& e) {
        err << "hubstar: " << e.what() << "\n";
        return exit_error;
    }
    err << app.help();
    return exit_error;
}

}  // namespace hubstar
