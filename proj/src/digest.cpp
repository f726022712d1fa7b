#include "valsim/digest.hpp"

#include <array>

#include <openssl/sha.h>

namespace valsim {
namespace {

std::array<unsigned char, SHA256_DIGEST_LENGTH> sha256(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> out{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), out.data());
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : sha256(data)) {
    out += kHex[b >> 4];
    out += kHex[b & 0xf];
  }
  return out;
}

std::uint64_t stable_seed(std::string_view campaign_id, std::string_view cell_key, std::uint64_t iteration) {
  // Unit separators keep ("a", "bc") and ("ab", "c") apart.
  std::string material;
  material.append(campaign_id).push_back('\x1f');
  material.append(cell_key).push_back('\x1f');
  material.append(std::to_string(iteration));
  const auto h = sha256(material);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | h[static_cast<std::size_t>(i)];
  return seed;
}

}  // namespace valsim
