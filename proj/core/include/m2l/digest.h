/**
 * @file digest.h
 * @brief SHA-256 helpers for fixture keys and trace digests.
 */

#ifndef M2L_DIGEST_H
#define M2L_DIGEST_H

#include <string>
#include <string_view>

namespace m2l {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// First 16 hex digits of sha256_hex, for compact trace entries.
std::string short_digest(std::string_view data);

}  // namespace m2l

#endif  // M2L_DIGEST_H
