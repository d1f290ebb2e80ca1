#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "hubstar/model.hpp"
#include "hubstar/value.hpp"

namespace hubstar {

/// Key reserved for every hub's default row.
inline constexpr std::string_view default_hub_key = "-1";

/// Delimiter used when joining key parts.
inline constexpr std::string_view key_delimiter = "#";

/// 64-character lowercase hex SHA-256 digest of the bytes of `input`.
std::string sha256_hex(std::string_view input);

/// `yyyyMMddHHmmss` in UTC. Lexicographic order of the output matches chronological order.
std::string format_ts_compact(Timestamp ts);

/// Evaluates a computed hub key. `business_keys` holds the owning hub's business-key values by
/// column name. Throws KeyError on a null business key or on a delimiter collision.
std::string compute_hub_key(const KeyFormula& formula, const Record& business_keys, std::int64_t load_source);

/// Persistent per-hub counter backing system-generated keys. The file holds the last issued
/// value as a decimal integer; a missing file means nothing has been issued yet.
class KeyCounter {
public:
    explicit KeyCounter(std::filesystem::path file) : file_(std::move(file)) {}

    /// Issues the next key ("1", "2", ...). The new value is durable before it is returned.
    std::string next();

    std::int64_t last_issued() const;
    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
};

}  // namespace hubstar
