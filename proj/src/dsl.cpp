#include "hubstar/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <vector>

namespace hubstar {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok { ident, integer, decimal, string, punct, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    SourceLocation where;
    SourceLocation until;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.where = here();
            if (pos_ >= text_.size()) {
                t.kind = Tok::end;
                t.until = t.where;
                out.push_back(t);
                return out;
            }
            char c = text_[pos_];
            if (is_ident_start(c)) {
                t.kind = Tok::ident;
                while (pos_ < text_.size() && is_ident_char(text_[pos_])) t.text += advance();
                if (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
                    fail(here(), std::string("invalid character '") + text_[pos_] +
                                     "' in identifier (identifiers are lowercase)");
                }
            } else if (is_digit(c) || (c == '-' && pos_ + 1 < text_.size() && is_digit(text_[pos_ + 1]))) {
                t.kind = Tok::integer;
                t.text += advance();
                while (pos_ < text_.size() && is_digit(text_[pos_])) t.text += advance();
                if (pos_ + 1 < text_.size() && text_[pos_] == '.' && is_digit(text_[pos_ + 1])) {
                    t.kind = Tok::decimal;
                    t.text += advance();
                    while (pos_ < text_.size() && is_digit(text_[pos_])) t.text += advance();
                }
                if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
                    t.kind = Tok::decimal;
                    t.text += advance();
                    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) t.text += advance();
                    if (pos_ >= text_.size() || !is_digit(text_[pos_])) fail(here(), "malformed exponent");
                    while (pos_ < text_.size() && is_digit(text_[pos_])) t.text += advance();
                }
            } else if (c == '"' || c == '\'') {
                t.kind = Tok::string;
                char quote = advance();
                for (;;) {
                    if (pos_ >= text_.size() || text_[pos_] == '\n') fail(t.where, "unterminated string");
                    char ch = advance();
                    if (ch == quote) break;
                    if (ch == '\\') {
                        if (pos_ >= text_.size()) fail(t.where, "unterminated string");
                        SourceLocation esc = here();
                        char e = advance();
                        switch (e) {
                            case 'n': t.text += '\n'; break;
                            case 't': t.text += '\t'; break;
                            case '\\': t.text += '\\'; break;
                            case '"': t.text += '"'; break;
                            case '\'': t.text += '\''; break;
                            default: fail(esc, std::string("unknown escape \\") + e);
                        }
                    } else {
                        t.text += ch;
                    }
                }
            } else if (std::string_view("{}(),=.").find(c) != std::string_view::npos) {
                t.kind = Tok::punct;
                t.text += advance();
            } else {
                fail(t.where, std::string("unexpected character '") + c + "'");
            }
            t.until = here();
            out.push_back(std::move(t));
        }
    }

private:
    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }
    static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }

    SourceLocation here() const { return {line_, column_}; }

    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    [[noreturn]] void fail(SourceLocation where, const std::string& message) const {
        throw ParseError(ParseError::Kind::lexical, where, message);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
    Parser(std::vector<Token> tokens, ModelDocument& doc) : tokens_(std::move(tokens)), doc_(doc) {}

    void parse() {
        ModelSpec& spec = doc_.spec;
        expect_word("product");
        spec.product_name = ident("product name");
        bool have_schemas = false;
        std::set<std::string> sources, hubs, stars, views;
        while (!at_end()) {
            const Token& head = peek();
            if (head.kind != Tok::ident) syntax(head, "expected a top-level block, found " + describe(head));
            if (head.text == "schemas") {
                if (have_schemas) duplicate_field(head, "schemas");
                have_schemas = true;
                parse_schemas();
            } else if (head.text == "source") {
                spec.sources.push_back(parse_source(unique_name(sources, "source")));
            } else if (head.text == "hub") {
                spec.hubs.push_back(parse_hub(unique_name(hubs, "hub")));
            } else if (head.text == "star") {
                spec.stars.push_back(parse_star(unique_name(stars, "star")));
            } else if (head.text == "gold") {
                spec.gold_views.push_back(parse_gold(unique_name(views, "gold")));
            } else if (head.text == "product") {
                duplicate_field(head, "product");
            } else {
                unknown_keyword(head);
            }
        }
        if (!have_schemas) spec.schema_names = ModelSpec::default_schemas(spec.product_name);
    }

private:
    // -- token helpers ------------------------------------------------------

    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }
    bool at_end() const { return peek().kind == Tok::end; }
    const Token& next() {
        const Token& t = tokens_[pos_];
        if (pos_ + 1 < tokens_.size()) ++pos_;
        last_ = t.until;
        return t;
    }

    bool is_word(std::string_view w, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::ident && peek(ahead).text == w;
    }
    bool is_punct(char c, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::punct && peek(ahead).text[0] == c;
    }
    bool accept_word(std::string_view w) {
        if (!is_word(w)) return false;
        next();
        return true;
    }
    bool accept_punct(char c) {
        if (!is_punct(c)) return false;
        next();
        return true;
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Tok::end: return "end of input";
            case Tok::string: return "string \"" + t.text + "\"";
            default: return "'" + t.text + "'";
        }
    }

    [[noreturn]] void syntax(const Token& t, const std::string& message) const {
        throw ParseError(ParseError::Kind::syntax, t.where, message);
    }
    [[noreturn]] void duplicate_field(const Token& t, const std::string& field) const {
        throw ParseError(ParseError::Kind::duplicate_field, t.where, "duplicate '" + field + "' in block");
    }
    [[noreturn]] void unknown_keyword(const Token& t) const {
        throw ParseError(ParseError::Kind::unknown_keyword, t.where, "unknown keyword '" + t.text + "'");
    }

    void expect_word(std::string_view w) {
        if (!is_word(w)) syntax(peek(), "expected '" + std::string(w) + "', found " + describe(peek()));
        next();
    }
    void expect_punct(char c) {
        if (!is_punct(c)) syntax(peek(), std::string("expected '") + c + "', found " + describe(peek()));
        next();
    }
    std::string ident(const std::string& what) {
        if (peek().kind != Tok::ident) syntax(peek(), "expected " + what + ", found " + describe(peek()));
        return next().text;
    }
    std::int64_t integer(const std::string& what) {
        if (peek().kind != Tok::integer) syntax(peek(), "expected " + what + ", found " + describe(peek()));
        const Token& t = next();
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc()) throw ParseError(ParseError::Kind::lexical, t.where, "integer out of range");
        return v;
    }
    ScalarType scalar_type() {
        const Token& t = peek();
        if (t.kind == Tok::ident) {
            if (auto type = scalar_type_from_string(t.text)) {
                next();
                return *type;
            }
        }
        syntax(t, "expected a scalar type (integer, decimal, string, boolean, timestamp), found " + describe(t));
    }
    std::vector<std::string> ident_list(const std::string& what) {
        std::vector<std::string> out;
        expect_punct('(');
        if (!is_punct(')')) {
            do {
                out.push_back(ident(what));
            } while (accept_punct(','));
        }
        expect_punct(')');
        return out;
    }

    std::string unique_name(std::set<std::string>& seen, const std::string& kind) {
        next();
        const Token& t = peek();
        std::string name = ident(kind + " name");
        if (!seen.insert(name).second) {
            throw ParseError(ParseError::Kind::duplicate_name, t.where, "duplicate " + kind + " '" + name + "'");
        }
        block_start_ = t.where;
        return name;
    }

    void record_span(const std::string& key, SourceLocation begin) { doc_.source_spans[key] = {begin, last_}; }

    /// Tracks single-valued statements within one block.
    class Once {
    public:
        explicit Once(const Parser& p) : parser_(p) {}
        void mark(const Token& t) {
            if (!seen_.insert(t.text).second) parser_.duplicate_field(t, t.text);
        }

    private:
        const Parser& parser_;
        std::set<std::string> seen_;
    };

    // -- blocks -------------------------------------------------------------

    void parse_schemas() {
        SourceLocation begin = next().where;
        expect_punct('{');
        Once once(*this);
        SchemaNames names;
        while (!accept_punct('}')) {
            const Token& t = peek();
            if (t.kind != Tok::ident) syntax(t, "expected a layer name, found " + describe(t));
            Layer layer;
            if (t.text == "bronze") layer = Layer::bronze;
            else if (t.text == "silver") layer = Layer::silver;
            else if (t.text == "gold") layer = Layer::gold;
            else unknown_keyword(t);
            once.mark(t);
            next();
            names.names[layer] = ident("schema name");
        }
        doc_.spec.schema_names = std::move(names);
        record_span("schemas", begin);
    }

    SourceDef parse_source(std::string name) {
        SourceLocation begin = block_start_;
        SourceDef src;
        src.name = std::move(name);
        expect_punct('{');
        Once once(*this);
        while (!accept_punct('}')) {
            const Token& t = peek();
            if (t.kind != Tok::ident) syntax(t, "expected a source statement, found " + describe(t));
            if (t.text == "load_source") {
                once.mark(next());
                src.load_source_id = integer("load source id");
            } else if (t.text == "format") {
                once.mark(next());
                const Token& f = peek();
                if (is_word("csv")) src.input_format = InputFormat::csv;
                else if (is_word("ndjson")) src.input_format = InputFormat::ndjson;
                else syntax(f, "expected csv or ndjson, found " + describe(f));
                next();
            } else if (t.text == "column") {
                next();
                SourceColumn col;
                col.name = ident("column name");
                col.type = column_type();
                src.columns.push_back(std::move(col));
            } else if (t.text == "capture_timestamp") {
                once.mark(next());
                do {
                    src.capture_timestamp_rule.push_back(capture_source());
                } while (accept_punct(','));
            } else if (t.text == "delete_flag_column") {
                once.mark(next());
                src.delete_flag_column = ident("column name");
            } else {
                unknown_keyword(t);
            }
        }
        if (src.capture_timestamp_rule.empty()) {
            src.capture_timestamp_rule.push_back({CaptureSource::Kind::file_modification_time, {}});
        }
        record_span("source:" + src.name, begin);
        return src;
    }

    ColumnType column_type() {
        if (accept_word("array")) {
            std::vector<FieldType> fields;
            expect_punct('(');
            do {
                FieldType f;
                f.name = ident("field name");
                f.type = scalar_type();
                fields.push_back(std::move(f));
            } while (accept_punct(','));
            expect_punct(')');
            return ColumnType::array_of(std::move(fields));
        }
        return ColumnType::of(scalar_type());
    }

    CaptureSource capture_source() {
        const Token& t = peek();
        if (t.kind != Tok::ident) syntax(t, "expected a capture timestamp source, found " + describe(t));
        CaptureSource cs;
        if (t.text == "cdc" || t.text == "last_modified") {
            cs.kind = t.text == "cdc" ? CaptureSource::Kind::cdc_column : CaptureSource::Kind::last_modified_column;
            next();
            expect_punct('(');
            cs.column = ident("column name");
            expect_punct(')');
        } else if (t.text == "file_modification_time") {
            next();
            cs.kind = CaptureSource::Kind::file_modification_time;
        } else if (t.text == "pipeline_now") {
            next();
            cs.kind = CaptureSource::Kind::pipeline_now;
        } else {
            unknown_keyword(t);
        }
        return cs;
    }

    DescriptiveDef descriptive() {
        DescriptiveDef d;
        d.name = ident("descriptive name");
        d.type = scalar_type();
        if (accept_word("not")) {
            expect_word("null");
            d.nullable = false;
        }
        if (accept_word("references")) d.fk_hub = ident("hub name");
        return d;
    }

    HubDef parse_hub(std::string name) {
        SourceLocation begin = block_start_;
        HubDef hub;
        hub.name = std::move(name);
        expect_punct('{');
        Once once(*this);
        std::set<std::string> mapping_sources;
        while (!accept_punct('}')) {
            const Token& t = peek();
            if (t.kind != Tok::ident) syntax(t, "expected a hub statement, found " + describe(t));
            if (t.text == "key") {
                once.mark(next());
                if (accept_word("computed")) {
                    hub.key_type = KeyType::computed;
                    hub.key_formula = KeyFormula{expr()};
                } else if (accept_word("system_generated")) {
                    hub.key_type = KeyType::system_generated;
                } else {
                    syntax(peek(), "expected computed or system_generated, found " + describe(peek()));
                }
            } else if (t.text == "business_key") {
                once.mark(next());
                if (accept_word("global")) hub.bk_scope = BusinessKeyScope::global;
                else if (accept_word("local")) hub.bk_scope = BusinessKeyScope::local;
                else syntax(peek(), "expected global or local, found " + describe(peek()));
                expect_punct('(');
                if (!is_punct(')')) {
                    do {
                        BusinessKeyDef bk;
                        bk.name = ident("business key column");
                        bk.type = scalar_type();
                        hub.business_keys.push_back(std::move(bk));
                    } while (accept_punct(','));
                }
                expect_punct(')');
            } else if (t.text == "descriptive") {
                next();
                hub.descriptives.push_back(descriptive());
            } else if (t.text == "delete_flag") {
                once.mark(next());
                hub.has_delete_flag = true;
            } else if (t.text == "mapping") {
                SourceLocation mbegin = next().where;
                HubMapping m;
                const Token& src = peek();
                m.source = ident("source name");
                if (!mapping_sources.insert(m.source).second) {
                    throw ParseError(ParseError::Kind::duplicate_name, src.where, "duplicate mapping '" + m.source + "'");
                }
                expect_punct('{');
                std::set<std::string> cols;
                bool have_order = false;
                while (!accept_punct('}')) {
                    const Token& c = peek();
                    if (c.kind != Tok::ident) syntax(c, "expected a column mapping, found " + describe(c));
                    if (c.text == "order_by" && !is_punct('=', 1)) {
                        if (have_order) duplicate_field(c, "order_by");
                        have_order = true;
                        next();
                        do {
                            m.dedup_order.push_back(sort_key());
                        } while (accept_punct(','));
                        continue;
                    }
                    m.columns.push_back(column_mapping(cols));
                }
                record_span("hub:" + hub.name + "/mapping:" + m.source, mbegin);
                hub.mappings.push_back(std::move(m));
            } else {
                unknown_keyword(t);
            }
        }
        if (!once_seen_key(hub)) syntax(peek(), "hub '" + hub.name + "' requires a key statement");
        record_span("hub:" + hub.name, begin);
        return hub;
    }

    static bool once_seen_key(const HubDef& hub) {
        return hub.key_type == KeyType::system_generated || hub.key_formula.has_value();
    }

    SortKey sort_key() {
        SortKey k;
        k.column = ident("column name");
        if (accept_word("desc")) k.descending = true;
        else if (accept_word("asc")) k.descending = false;
        else syntax(peek(), "expected asc or desc, found " + describe(peek()));
        return k;
    }

    ColumnMapping column_mapping(std::set<std::string>& seen) {
        const Token& c = peek();
        ColumnMapping cm;
        cm.column = ident("column name");
        if (!seen.insert(cm.column).second) duplicate_field(c, cm.column);
        expect_punct('=');
        cm.expr = expr();
        return cm;
    }

    StarDef parse_star(std::string name) {
        SourceLocation begin = block_start_;
        StarDef star;
        star.name = std::move(name);
        expect_punct('{');
        Once once(*this);
        std::set<std::string> mapping_sources;
        while (!accept_punct('}')) {
            const Token& t = peek();
            if (t.kind != Tok::ident) syntax(t, "expected a star statement, found " + describe(t));
            if (t.text == "participant") {
                next();
                star.participants.push_back(participant());
            } else if (t.text == "key") {
                once.mark(next());
                star.key_columns = ident_list("key column");
            } else if (t.text == "descriptive") {
                next();
                star.descriptives.push_back(descriptive());
            } else if (t.text == "delete_flag") {
                once.mark(next());
                star.has_delete_flag = true;
            } else if (t.text == "mapping") {
                SourceLocation mbegin = next().where;
                StarMapping m;
                const Token& src = peek();
                m.source = ident("source name");
                if (!mapping_sources.insert(m.source).second) {
                    throw ParseError(ParseError::Kind::duplicate_name, src.where, "duplicate mapping '" + m.source + "'");
                }
                expect_punct('{');
                std::set<std::string> cols;
                while (!accept_punct('}')) {
                    if (peek().kind != Tok::ident) syntax(peek(), "expected a column mapping, found " + describe(peek()));
                    m.columns.push_back(column_mapping(cols));
                }
                record_span("star:" + star.name + "/mapping:" + m.source, mbegin);
                star.mappings.push_back(std::move(m));
            } else {
                unknown_keyword(t);
            }
        }
        record_span("star:" + star.name, begin);
        return star;
    }

    Participant participant() {
        Participant p;
        const Token& t = peek();
        if (accept_word("hub")) {
            p.kind = Participant::Kind::hub;
            p.hub = ident("hub name");
            p.column = p.hub + "_key";
            if (accept_word("as")) p.column = ident("role name");
        } else if (accept_word("time")) {
            p.kind = Participant::Kind::time;
            p.column = ident("timestamp column");
        } else if (accept_word("item")) {
            p.kind = Participant::Kind::item;
            p.column = ident("sequence column");
            ItemKeyRule rule;
            if (accept_word("positional")) {
                rule.mode = ItemKeyRule::Mode::positional;
            } else if (accept_word("sequence")) {
                rule.mode = ItemKeyRule::Mode::explicit_sequence;
                expect_punct('(');
                rule.attributes.push_back(ident("sequence field"));
                expect_punct(')');
            } else {
                rule.hashed = accept_word("hashed");
                if (!is_word("concat")) syntax(peek(), "expected positional, sequence or concat, found " + describe(peek()));
                next();
                rule.mode = ItemKeyRule::Mode::concat_of_attributes;
                rule.attributes = ident_list("item attribute");
            }
            expect_word("of");
            rule.collection_column = ident("collection column");
            p.item_rule = std::move(rule);
        } else {
            syntax(t, "expected hub, time or item, found " + describe(t));
        }
        return p;
    }

    ColumnRef column_ref(const std::string& base) {
        ColumnRef r;
        const Token& at = peek();
        std::string first = ident("column");
        if (base.empty() && !is_punct('.')) syntax(at, "unqualified column before 'base' is declared");
        if (accept_punct('.')) {
            r.alias = std::move(first);
            r.column = ident("column");
        } else {
            r.alias = base;
            r.column = std::move(first);
        }
        return r;
    }

    GoldViewDef parse_gold(std::string name) {
        SourceLocation begin = block_start_;
        GoldViewDef view;
        view.name = std::move(name);
        const Token& k = peek();
        if (accept_word("scd1_dim")) view.kind = GoldKind::scd1_dim;
        else if (accept_word("scd2_dim")) view.kind = GoldKind::scd2_dim;
        else if (accept_word("fact")) view.kind = GoldKind::fact;
        else syntax(k, "expected scd1_dim, scd2_dim or fact, found " + describe(k));
        expect_punct('{');
        Once once(*this);
        // `base` must precede column references that default to it.
        while (!accept_punct('}')) {
            const Token& t = peek();
            if (t.kind != Tok::ident) syntax(t, "expected a gold statement, found " + describe(t));
            if (t.text == "base") {
                once.mark(next());
                view.base = ident("base table");
            } else if (t.text == "join") {
                next();
                view.joins.push_back(join(view.base));
            } else if (t.text == "select") {
                once.mark(next());
                expect_punct('(');
                do {
                    SelectItem item;
                    item.source = column_ref(view.base);
                    item.output = item.source.column;
                    if (accept_word("as")) item.output = ident("output name");
                    view.output_columns.push_back(std::move(item));
                } while (accept_punct(','));
                expect_punct(')');
            } else if (t.text == "scd2_key") {
                once.mark(next());
                view.scd2_key_column = ident("key column");
                expect_punct('(');
                do {
                    view.scd2_key_parts.push_back(column_ref(view.base));
                } while (accept_punct(','));
                expect_punct(')');
            } else if (t.text == "validity") {
                once.mark(next());
                expect_punct('(');
                std::string from = ident("valid-from column");
                expect_punct(',');
                std::string to = ident("valid-to column");
                expect_punct(')');
                view.validity = std::make_pair(std::move(from), std::move(to));
            } else {
                unknown_keyword(t);
            }
        }
        record_span("gold:" + view.name, begin);
        return view;
    }

    JoinDef join(const std::string& base) {
        JoinDef j;
        j.optional = accept_word("left");
        const Token& t = peek();
        if (accept_word("hub")) j.target = JoinDef::Target::hub;
        else if (accept_word("star")) j.target = JoinDef::Target::star;
        else if (accept_word("dim")) j.target = JoinDef::Target::dim;
        else syntax(t, "expected hub, star or dim, found " + describe(t));
        j.name = ident("join target");
        j.alias = j.name;
        if (accept_word("as")) j.alias = ident("alias");
        expect_word("on");
        do {
            ColumnRef left = column_ref(base);
            expect_punct('=');
            ColumnRef right = column_ref(base);
            j.on.emplace_back(std::move(left), std::move(right));
        } while (accept_word("and"));
        if (accept_word("rank")) {
            expect_word("partition");
            j.rank_partition = ident_list("partition column");
            expect_word("order");
            expect_punct('(');
            do {
                j.rank_order.push_back(sort_key());
            } while (accept_punct(','));
            expect_punct(')');
        }
        if (accept_word("during")) j.during = column_ref(base);
        return j;
    }

    // -- expressions --------------------------------------------------------

    Expr expr() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::integer: {
                std::int64_t v = integer("integer");
                return Expr::literal(v);
            }
            case Tok::decimal: {
                const Token& d = next();
                double v = 0;
                auto [ptr, ec] = std::from_chars(d.text.data(), d.text.data() + d.text.size(), v);
                if (ec != std::errc()) throw ParseError(ParseError::Kind::lexical, d.where, "bad decimal literal");
                return Expr::literal(v);
            }
            case Tok::string: return Expr::literal(next().text);
            case Tok::ident: break;
            default: syntax(t, "expected an expression, found " + describe(t));
        }
        std::string word = next().text;
        if (word == "null") return Expr::literal(Value());
        if (word == "true") return Expr::literal(true);
        if (word == "false") return Expr::literal(false);
        if (word == "cast" && is_punct('(')) {
            next();
            Expr operand = expr();
            expect_word("as");
            ScalarType type = scalar_type();
            expect_punct(')');
            return Expr::cast(std::move(operand), type);
        }
        if (word == "ref" && peek().kind == Tok::ident) {
            std::string hub = next().text;
            return Expr::ref(std::move(hub), arguments());
        }
        if (is_punct('(')) {
            auto fns = known_functions();
            auto it = std::find_if(fns.begin(), fns.end(), [&](const FunctionInfo& f) { return f.name == word; });
            if (it == fns.end()) unknown_keyword(t);
            std::vector<Expr> args = arguments();
            if ((it->arity >= 0 && static_cast<int>(args.size()) != it->arity) || (it->arity < 0 && args.empty())) {
                syntax(t, "wrong number of arguments to " + word);
            }
            return Expr::call(std::move(word), std::move(args));
        }
        if (accept_punct('.')) {
            if (word != "item") syntax(t, "only item fields may be qualified in expressions");
            return Expr::item(ident("item field"));
        }
        return Expr::column(std::move(word));
    }

    std::vector<Expr> arguments() {
        std::vector<Expr> args;
        expect_punct('(');
        if (!is_punct(')')) {
            do {
                args.push_back(expr());
            } while (accept_punct(','));
        }
        expect_punct(')');
        return args;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    ModelDocument& doc_;
    SourceLocation last_{1, 1};
    SourceLocation block_start_{1, 1};
};

// ---------------------------------------------------------------------------
// Renderer
// ---------------------------------------------------------------------------

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

std::string render_args(const std::vector<Expr>& args) {
    std::string out = "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ", ";
        out += render_expr(args[i]);
    }
    return out + ")";
}

std::string render_ref(const ColumnRef& r, const std::string& base) {
    return r.alias == base ? r.column : r.alias + "." + r.column;
}

std::string render_descriptive(const DescriptiveDef& d) {
    std::string out = "  descriptive " + d.name + " " + std::string(to_string(d.type));
    if (!d.nullable) out += " not null";
    if (d.fk_hub) out += " references " + *d.fk_hub;
    return out + "\n";
}

std::string render_sort(const std::vector<SortKey>& keys) {
    std::string out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i) out += ", ";
        out += keys[i].column + (keys[i].descending ? " desc" : " asc");
    }
    return out;
}

std::string join_idents(const std::vector<std::string>& ids) {
    std::string out = "(";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ", ";
        out += ids[i];
    }
    return out + ")";
}

}  // namespace

std::string render_expr(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::literal:
            if (e.value.is_null()) return "null";
            if (e.value.is_string()) return quote(e.value.as_string());
            if (e.value.is_timestamp()) return "cast(" + quote(e.value.to_text()) + " as timestamp)";
            return e.value.to_text();
        case Expr::Kind::column: return e.item_field ? "item." + e.name : e.name;
        case Expr::Kind::cast:
            return "cast(" + render_expr(e.args.at(0)) + " as " + std::string(to_string(e.cast_type)) + ")";
        case Expr::Kind::call: return e.name + render_args(e.args);
        case Expr::Kind::hub_ref: return "ref " + e.name + render_args(e.args);
    }
    return {};
}

ModelDocument parse_model(std::string_view text) {
    ModelDocument doc;
    doc.raw_text = std::string(text);
    Parser parser(Lexer(text).run(), doc);
    parser.parse();
    return doc;
}

std::string render_model(const ModelSpec& spec) {
    std::string out = "product " + spec.product_name + "\n\nschemas {\n";
    for (Layer layer : {Layer::bronze, Layer::silver, Layer::gold}) {
        auto it = spec.schema_names.names.find(layer);
        if (it != spec.schema_names.names.end()) {
            out += "  " + std::string(to_string(layer)) + " " + it->second + "\n";
        }
    }
    out += "}\n";

    for (const SourceDef& src : spec.sources) {
        out += "\nsource " + src.name + " {\n";
        out += "  load_source " + std::to_string(src.load_source_id) + "\n";
        out += std::string("  format ") + (src.input_format == InputFormat::csv ? "csv" : "ndjson") + "\n";
        for (const SourceColumn& c : src.columns) out += "  column " + c.name + " " + c.type.describe() + "\n";
        out += "  capture_timestamp ";
        for (std::size_t i = 0; i < src.capture_timestamp_rule.size(); ++i) {
            const CaptureSource& cs = src.capture_timestamp_rule[i];
            if (i) out += ", ";
            switch (cs.kind) {
                case CaptureSource::Kind::cdc_column: out += "cdc(" + cs.column + ")"; break;
                case CaptureSource::Kind::last_modified_column: out += "last_modified(" + cs.column + ")"; break;
                case CaptureSource::Kind::file_modification_time: out += "file_modification_time"; break;
                case CaptureSource::Kind::pipeline_now: out += "pipeline_now"; break;
            }
        }
        out += "\n";
        if (src.delete_flag_column) out += "  delete_flag_column " + *src.delete_flag_column + "\n";
        out += "}\n";
    }

    for (const HubDef& hub : spec.hubs) {
        out += "\nhub " + hub.name + " {\n";
        out += std::string("  business_key ") + (hub.bk_scope == BusinessKeyScope::global ? "global" : "local") + " (";
        for (std::size_t i = 0; i < hub.business_keys.size(); ++i) {
            if (i) out += ", ";
            out += hub.business_keys[i].name + " " + std::string(to_string(hub.business_keys[i].type));
        }
        out += ")\n";
        if (hub.key_type == KeyType::system_generated) {
            out += "  key system_generated\n";
        } else if (hub.key_formula) {
            out += "  key computed " + render_expr(hub.key_formula->expression) + "\n";
        }
        for (const DescriptiveDef& d : hub.descriptives) out += render_descriptive(d);
        if (hub.has_delete_flag) out += "  delete_flag\n";
        for (const HubMapping& m : hub.mappings) {
            out += "  mapping " + m.source + " {\n";
            for (const ColumnMapping& c : m.columns) out += "    " + c.column + " = " + render_expr(c.expr) + "\n";
            if (!m.dedup_order.empty()) out += "    order_by " + render_sort(m.dedup_order) + "\n";
            out += "  }\n";
        }
        out += "}\n";
    }

    for (const StarDef& star : spec.stars) {
        out += "\nstar " + star.name + " {\n";
        for (const Participant& p : star.participants) {
            switch (p.kind) {
                case Participant::Kind::hub:
                    out += "  participant hub " + p.hub;
                    if (p.column != p.hub + "_key") out += " as " + p.column;
                    break;
                case Participant::Kind::time: out += "  participant time " + p.column; break;
                case Participant::Kind::item: {
                    out += "  participant item " + p.column + " ";
                    const ItemKeyRule& r = *p.item_rule;
                    switch (r.mode) {
                        case ItemKeyRule::Mode::positional: out += "positional"; break;
                        case ItemKeyRule::Mode::explicit_sequence: out += "sequence(" + r.attributes.at(0) + ")"; break;
                        case ItemKeyRule::Mode::concat_of_attributes:
                            out += std::string(r.hashed ? "hashed " : "") + "concat" + join_idents(r.attributes);
                            break;
                    }
                    out += " of " + r.collection_column;
                    break;
                }
            }
            out += "\n";
        }
        out += "  key " + join_idents(star.key_columns) + "\n";
        for (const DescriptiveDef& d : star.descriptives) out += render_descriptive(d);
        if (star.has_delete_flag) out += "  delete_flag\n";
        for (const StarMapping& m : star.mappings) {
            out += "  mapping " + m.source + " {\n";
            for (const ColumnMapping& c : m.columns) out += "    " + c.column + " = " + render_expr(c.expr) + "\n";
            out += "  }\n";
        }
        out += "}\n";
    }

    for (const GoldViewDef& v : spec.gold_views) {
        const std::string& base = v.base;
        out += "\ngold " + v.name + " " + std::string(to_string(v.kind)) + " {\n";
        out += "  base " + base + "\n";
        for (const JoinDef& j : v.joins) {
            out += "  join ";
            if (j.optional) out += "left ";
            switch (j.target) {
                case JoinDef::Target::hub: out += "hub "; break;
                case JoinDef::Target::star: out += "star "; break;
                case JoinDef::Target::dim: out += "dim "; break;
            }
            out += j.name;
            if (j.alias != j.name) out += " as " + j.alias;
            out += " on ";
            for (std::size_t i = 0; i < j.on.size(); ++i) {
                if (i) out += " and ";
                out += render_ref(j.on[i].first, base) + " = " + render_ref(j.on[i].second, base);
            }
            if (j.rank_partition) {
                out += " rank partition " + join_idents(*j.rank_partition) + " order (" + render_sort(j.rank_order) + ")";
            }
            if (j.during) out += " during " + render_ref(*j.during, base);
            out += "\n";
        }
        if (v.scd2_key_column) {
            out += "  scd2_key " + *v.scd2_key_column + " (";
            for (std::size_t i = 0; i < v.scd2_key_parts.size(); ++i) {
                if (i) out += ", ";
                out += render_ref(v.scd2_key_parts[i], base);
            }
            out += ")\n";
        }
        if (v.validity) out += "  validity (" + v.validity->first + ", " + v.validity->second + ")\n";
        if (!v.output_columns.empty()) {
            out += "  select (\n";
            for (std::size_t i = 0; i < v.output_columns.size(); ++i) {
                const SelectItem& s = v.output_columns[i];
                out += "    " + render_ref(s.source, base);
                if (s.output != s.source.column) out += " as " + s.output;
                out += i + 1 < v.output_columns.size() ? ",\n" : "\n";
            }
            out += "  )\n";
        }
        out += "}\n";
    }
    return out;
}

}  // namespace hubstar
