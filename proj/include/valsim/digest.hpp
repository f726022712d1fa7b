#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace valsim {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Stable 64-bit seed for (campaign, cell, iteration): the first eight bytes
// of SHA-256 over the three fields, big-endian. Independent of platform and
// run order.
std::uint64_t stable_seed(std::string_view campaign_id, std::string_view cell_key, std::uint64_t iteration);

}  // namespace valsim
