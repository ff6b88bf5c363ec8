/*!
 * \file gdec/vocab.h
 * \brief Tokenizer vocabulary: ordered byte-string tokens plus an EOS id.
 *
 * Tokens are arbitrary byte strings (real BPE vocabularies contain partial
 * multi-byte sequences), so every backend operates at byte granularity.
 * A Vocabulary is immutable after construction and safe to share across
 * concurrent decoders.
 */
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gdec/token_mask.h"

namespace gdec {

class Vocabulary {
 public:
  /// Validates invariants: dense ids, eos_id in range, at least one
  /// non-empty token. Throws ValidationError otherwise.
  Vocabulary(std::vector<std::string> tokens, TokenId eos_id);

  size_t size() const { return tokens_.size(); }
  TokenId eos_id() const { return eos_id_; }

  const std::string& token(TokenId id) const { return tokens_[static_cast<size_t>(id)]; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Stable fingerprint over token bytes and eos id; embedded into compiled
  /// index files so a stale index cannot be applied to a different vocab.
  uint64_t fingerprint() const { return fingerprint_; }

 private:
  std::vector<std::string> tokens_;
  TokenId eos_id_;
  uint64_t fingerprint_;
};

using VocabularyPtr = std::shared_ptr<const Vocabulary>;

/// File format: {"eos_id": <int>, "tokens": [<entry>...]} where <entry> is a
/// plain UTF-8 string or {"b64": "<base64 bytes>"}. Token id = array index.
Vocabulary load_vocabulary(const std::string& path);
Vocabulary parse_vocabulary(const std::string& json_text);

void write_vocabulary(const Vocabulary& vocab, const std::string& path);
std::string dump_vocabulary(const Vocabulary& vocab);

}  // namespace gdec
