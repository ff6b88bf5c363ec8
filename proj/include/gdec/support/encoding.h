/*!
 * \file gdec/support/encoding.h
 * \brief Base64 and UTF-8 helpers for byte-exact token round trips.
 */
#pragma once

#include <string>
#include <string_view>

namespace gdec {

std::string base64_encode(std::string_view bytes);

/// Decodes standard base64 (with padding). Throws ParseError on bad input.
std::string base64_decode(std::string_view text);

/// Strict UTF-8 validity: rejects overlong encodings, surrogates and
/// code points above U+10FFFF.
bool is_valid_utf8(std::string_view bytes);

}  // namespace gdec
