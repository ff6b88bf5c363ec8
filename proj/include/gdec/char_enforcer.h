/*!
 * \file gdec/char_enforcer.h
 * \brief Character/byte-level format enforcement for the JSON-schema subset.
 *
 * No global precomputation: every step folds char_advance over each
 * candidate token's bytes against the current parse position, which is this
 * backend's defining trade-off versus the FSM index. Whitespace between
 * structural tokens is always accepted, so the model keeps its formatting
 * freedom; scalars and keys are matched byte-exactly. Object keys must
 * appear in schema declaration order, in unescaped literal form.
 *
 * String escapes: \" \\ \n \t \uXXXX. Anything else rejects, as do raw
 * control bytes inside strings and numbers with leading zeros.
 */
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gdec/constraint.h"
#include "gdec/json_schema.h"
#include "gdec/token_mask.h"
#include "gdec/vocab.h"

namespace gdec {

class CharParserState {
 public:
  /// True when the consumed bytes form a complete schema-conforming document
  /// (trailing whitespace allowed); EOS is only legal here.
  bool is_done() const;

  /// One byte of progress; std::nullopt is Reject (the extended byte string
  /// is a prefix of no conforming document).
  std::optional<CharParserState> advance(uint8_t byte) const;

  /// Bytes of the current incomplete scalar (diagnostics).
  const std::string& partial_buffer() const { return partial_; }

 private:
  friend class CharParser;

  enum class Mode : uint8_t {
    kExpectValue,
    kExpectKey,
    kExpectColon,
    kAfterValue,
    kInString,
    kInStringEscape,
    kInStringUnicode,
    kInNumber,
    kInLiteral,
    kDone,
  };

  enum class NumState : uint8_t {
    kStart,
    kMinus,
    kZero,
    kInt,
    kFracStart,
    kFrac,
    kExpStart,
    kExpSign,
    kExp,
  };

  struct Frame {
    const Schema* node;
    uint32_t completed;  // object: property values finished; array: elements
  };

  const Schema* expected_value() const;
  void finish_value();
  bool dispatch(uint8_t byte);  // mutates; false = Reject

  SchemaPtr root_;
  std::vector<Frame> frames_;
  Mode mode_ = Mode::kExpectValue;
  NumState num_state_ = NumState::kStart;
  bool allow_close_ = false;  // ']' legal (kExpectValue right after '[')
  uint8_t unicode_left_ = 0;
  uint32_t scalar_pos_ = 0;
  const char* literal_ = nullptr;
  std::string partial_;
};

class CharParser {
 public:
  explicit CharParser(SchemaPtr schema) : schema_(std::move(schema)) {}

  CharParserState start() const;
  const Schema& schema() const { return *schema_; }

 private:
  SchemaPtr schema_;
};

std::optional<CharParserState> char_advance(const CharParserState& state, uint8_t byte);

/// Token bit set iff folding char_advance over the token's bytes never
/// rejects; EOS bit iff the state is done. Computed fresh for the given
/// state; callers may memoize per state.
TokenMask enforcer_mask(const CharParserState& state, const Vocabulary& vocab);

class CharConstraint : public Constraint, public std::enable_shared_from_this<CharConstraint> {
 public:
  CharConstraint(SchemaPtr schema, VocabularyPtr vocab)
      : parser_(schema), vocab_(std::move(vocab)) {}

  ConstraintStatePtr start() const override;
  size_t vocab_size() const override { return vocab_->size(); }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::string describe() const override { return "enforcer:json-schema"; }
  bool matches(std::string_view text) const override;

  const CharParser& parser() const { return parser_; }
  const Vocabulary& vocab() const { return *vocab_; }

 private:
  CharParser parser_;
  VocabularyPtr vocab_;

  friend class CharConstraintState;
};

}  // namespace gdec
