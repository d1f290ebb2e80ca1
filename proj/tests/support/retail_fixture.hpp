#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hubstar/value.hpp"

namespace hubstar::fixture {

/// One source file delivered at a fixed modification time.
struct Delivery {
    std::string source;
    std::filesystem::path path;
    Timestamp mtime;
};

struct Dataset {
    /// Deliveries in arrival order; every source's mtimes increase along the list.
    std::vector<Delivery> deliveries;
    /// Customer whose address history is scripted: three addresses, one delete, one reactivation.
    std::int64_t scripted_customer_id = 0;
    std::vector<std::string> scripted_addresses;
    std::size_t customers = 0;
    std::size_t orders = 0;
    std::size_t products = 0;
    std::size_t segments = 0;
    /// Orders delivered with a null customer_id.
    std::size_t orders_without_customer = 0;
    /// Customers delivered with a null loyalty_segment in their latest version.
    std::vector<std::int64_t> customers_without_segment;
};

inline constexpr std::uint32_t default_seed = 20240601;

/// Pipeline time used by fixture runs; later than every capture timestamp in the data.
Timestamp fixture_now();

/// Writes the retail data set into `dir` (created if needed). Same seed, same bytes.
Dataset generate(const std::filesystem::path& dir, std::uint32_t seed = default_seed);

/// Path of the retail model fixture in the source tree.
std::filesystem::path model_path();

}  // namespace hubstar::fixture
