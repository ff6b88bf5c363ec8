/*!
 * \file gdec/constraint.h
 * \brief Backend-agnostic constraint interface used by the decoder.
 *
 * A Constraint is the compiled, immutable artifact (FSM index, PDA engine,
 * schema descriptor); it is shareable across concurrent decode sequences.
 * A ConstraintState is a value confined to one sequence at a time; advance()
 * and branch() return fresh states and never mutate the receiver's siblings.
 */
#pragma once

#include <memory>
#include <string>

#include "gdec/token_mask.h"
#include "gdec/vocab.h"

namespace gdec {

class ConstraintState;
using ConstraintStatePtr = std::unique_ptr<ConstraintState>;

class ConstraintState {
 public:
  virtual ~ConstraintState() = default;

  /// Tokens legal at this state, EOS bit included. The reference stays valid
  /// for the lifetime of this state object. May memoize internally.
  virtual const TokenMask& allowed_mask() = 0;

  /// Consume one token. Throws IllegalTokenError when the mask forbids it.
  /// Consuming EOS yields a terminal state (empty mask, is_complete()).
  virtual ConstraintStatePtr advance(TokenId token) const = 0;

  /// Independent snapshot sharing structure with this state; advancing
  /// either side never affects the other.
  virtual ConstraintStatePtr branch() const = 0;

  /// True once EOS has been consumed from an accepting position.
  virtual bool is_complete() const = 0;
};

class Constraint {
 public:
  virtual ~Constraint() = default;

  virtual ConstraintStatePtr start() const = 0;
  virtual size_t vocab_size() const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual std::string describe() const = 0;

  /// Full-document acceptance check over raw bytes, computed without the
  /// token-mask machinery. Serves as the post-hoc validator for decodes.
  virtual bool matches(std::string_view text) const = 0;
};

using ConstraintPtr = std::shared_ptr<const Constraint>;

}  // namespace gdec
