#pragma once

#include <string>
#include <string_view>

namespace tipgrade {

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

/// Identifier of the digest scheme used for request keys; stored in
/// transcript headers so stores are self-describing.
inline constexpr const char* kDigestAlgorithm = "sha256/canonical-json-v1";

} // namespace tipgrade
