#include "gdec/token_mask.h"

#include <bit>

namespace gdec {

TokenMask::TokenMask(size_t size, bool fill)
    : size_(size), words_((size + 63) / 64, fill ? ~uint64_t{0} : 0) {
  if (fill && size_ % 64 != 0 && !words_.empty()) {
    words_.back() &= (uint64_t{1} << (size_ % 64)) - 1;
  }
}

void TokenMask::set(TokenId id, bool value) {
  if (id < 0 || static_cast<size_t>(id) >= size_) {
    throw LengthMismatchError("token id " + std::to_string(id) + " out of range for mask of size " +
                              std::to_string(size_));
  }
  uint64_t bit = uint64_t{1} << (static_cast<size_t>(id) & 63);
  if (value) {
    words_[static_cast<size_t>(id) >> 6] |= bit;
  } else {
    words_[static_cast<size_t>(id) >> 6] &= ~bit;
  }
}

void TokenMask::set_all() {
  *this = TokenMask(size_, true);
}

void TokenMask::clear() {
  for (auto& w : words_) w = 0;
}

size_t TokenMask::popcount() const {
  size_t n = 0;
  for (uint64_t w : words_) n += static_cast<size_t>(std::popcount(w));
  return n;
}

bool TokenMask::any() const {
  for (uint64_t w : words_) {
    if (w != 0) return true;
  }
  return false;
}

TokenId TokenMask::next_set(TokenId from) const {
  if (from < 0) from = 0;
  size_t i = static_cast<size_t>(from);
  if (i >= size_) return -1;
  size_t word = i >> 6;
  uint64_t cur = words_[word] & (~uint64_t{0} << (i & 63));
  while (true) {
    if (cur != 0) {
      return static_cast<TokenId>(word * 64 + static_cast<size_t>(std::countr_zero(cur)));
    }
    if (++word >= words_.size()) return -1;
    cur = words_[word];
  }
}

void TokenMask::check_same_size(const TokenMask& other) const {
  if (size_ != other.size_) {
    throw LengthMismatchError("mask sizes differ: " + std::to_string(size_) + " vs " +
                              std::to_string(other.size_));
  }
}

TokenMask& TokenMask::operator&=(const TokenMask& other) {
  check_same_size(other);
  for (size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
  return *this;
}

TokenMask& TokenMask::operator|=(const TokenMask& other) {
  check_same_size(other);
  for (size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

uint64_t TokenMask::hash() const {
  uint64_t h = 0x9e3779b97f4a7c15ull ^ size_;
  for (uint64_t w : words_) {
    h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

std::string TokenMask::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(words_.size() * 16);
  for (uint64_t w : words_) {
    for (int shift = 60; shift >= 0; shift -= 4) {
      out.push_back(digits[(w >> shift) & 0xf]);
    }
  }
  return out;
}

TokenMask TokenMask::from_hex(size_t size, const std::string& hex) {
  TokenMask m(size);
  if (hex.size() != m.words_.size() * 16) {
    throw ParseError("mask hex length " + std::to_string(hex.size()) + " does not match size " +
                     std::to_string(size));
  }
  for (size_t w = 0; w < m.words_.size(); ++w) {
    uint64_t v = 0;
    for (size_t j = 0; j < 16; ++j) {
      char c = hex[w * 16 + j];
      uint64_t d;
      if (c >= '0' && c <= '9') {
        d = static_cast<uint64_t>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        d = static_cast<uint64_t>(c - 'a' + 10);
      } else {
        throw ParseError("invalid hex digit in mask dump");
      }
      v = (v << 4) | d;
    }
    m.words_[w] = v;
  }
  // Bits beyond `size` must be zero.
  if (size % 64 != 0 && !m.words_.empty()) {
    uint64_t tail = m.words_.back() & ~((uint64_t{1} << (size % 64)) - 1);
    if (tail != 0) throw ParseError("mask dump has bits beyond the vocabulary size");
  }
  return m;
}

TokenMask mask_and(const TokenMask& a, const TokenMask& b) {
  TokenMask out = a;
  out &= b;
  return out;
}

TokenMask mask_or(const TokenMask& a, const TokenMask& b) {
  TokenMask out = a;
  out |= b;
  return out;
}

}  // namespace gdec
