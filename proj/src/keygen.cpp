#include "hubstar/keygen.hpp"

#include <charconv>
#include <cstdio>

#include <openssl/evp.h>

#include "file_io.hpp"
#include "hubstar/errors.hpp"
#include "hubstar/expr.hpp"

namespace hubstar {

std::string sha256_hex(std::string_view input) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(input.data(), input.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0x0f]);
    }
    return out;
}

std::string format_ts_compact(Timestamp ts) {
    auto c = ts.civil();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d%02u%02u%02u%02u%02u", c.year, c.month, c.day, c.hour, c.minute, c.second);
    return buf;
}

std::string compute_hub_key(const KeyFormula& formula, const Record& business_keys, std::int64_t load_source) {
    for (const std::string& column : referenced_columns(formula.expression)) {
        if (field_or_null(business_keys, column).is_null()) {
            throw KeyError("business key must have value: " + column);
        }
    }
    EvalContext ctx;
    ctx.row = &business_keys;
    ctx.load_source = load_source;
    ctx.key_mode = true;
    Value key = evaluate(formula.expression, ctx);
    if (key.is_null()) throw KeyError("business key must have value");
    std::string text = key.to_text();
    if (text.empty()) throw KeyError("hub key evaluated to an empty string");
    return text;
}

std::int64_t KeyCounter::last_issued() const {
    std::error_code ec;
    if (!std::filesystem::exists(file_, ec)) return 0;
    std::string text = detail::read_file(file_);
    while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.pop_back();
    std::int64_t value = 0;
    auto [ptr, err] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (err != std::errc() || ptr != text.data() + text.size() || value < 0) {
        throw StorageError("corrupt key counter " + file_.string());
    }
    return value;
}

std::string KeyCounter::next() {
    std::int64_t value = last_issued() + 1;
    std::string text = std::to_string(value);
    std::error_code ec;
    std::filesystem::create_directories(file_.parent_path(), ec);
    detail::write_file_atomic(file_, text + "\n");
    return text;
}

}  // namespace hubstar
