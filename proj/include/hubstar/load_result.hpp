#pragma once

#include <cstddef>
#include <optional>

#include "hubstar/value.hpp"

namespace hubstar {

struct LoadResult {
    std::size_t scanned = 0;
    std::size_t inserted = 0;
    std::size_t updated = 0;
    std::size_t unchanged_skipped = 0;
    /// Maximum capture_timestamp of the target after the load; empty for an empty table.
    std::optional<Timestamp> new_hwm;
};

}  // namespace hubstar
