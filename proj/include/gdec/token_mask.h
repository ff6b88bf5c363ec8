/*!
 * \file gdec/token_mask.h
 * \brief Fixed-width bit vector over vocabulary ids.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gdec/error.h"

namespace gdec {

using TokenId = int32_t;

/// One bit per vocabulary id. The width is fixed at construction; all binary
/// operations require equal widths and throw LengthMismatchError otherwise.
class TokenMask {
 public:
  TokenMask() = default;
  explicit TokenMask(size_t size, bool fill = false);

  size_t size() const { return size_; }

  bool test(TokenId id) const {
    return (words_[static_cast<size_t>(id) >> 6] >> (static_cast<size_t>(id) & 63)) & 1u;
  }

  void set(TokenId id, bool value = true);
  void set_all();
  void clear();

  size_t popcount() const;
  bool any() const;

  /// First set bit at or after `from`, or -1 when none.
  TokenId next_set(TokenId from) const;

  TokenMask& operator&=(const TokenMask& other);
  TokenMask& operator|=(const TokenMask& other);
  bool operator==(const TokenMask& other) const = default;

  /// Stable content hash (used for trace comparison in tests and caching).
  uint64_t hash() const;

  /// Serialize as lowercase hex words, little-endian word order.
  std::string to_hex() const;
  static TokenMask from_hex(size_t size, const std::string& hex);

 private:
  void check_same_size(const TokenMask& other) const;

  size_t size_ = 0;
  std::vector<uint64_t> words_;
};

/// Bitwise intersection; commutative and idempotent.
TokenMask mask_and(const TokenMask& a, const TokenMask& b);

/// Bitwise union.
TokenMask mask_or(const TokenMask& a, const TokenMask& b);

}  // namespace gdec
