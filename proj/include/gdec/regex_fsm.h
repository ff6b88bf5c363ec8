/*!
 * \file gdec/regex_fsm.h
 * \brief Regex compilation to a byte-level DFA and the state -> allowed-token
 *        index that makes per-step mask lookup O(1) in the vocabulary size.
 *
 * Supported syntax: literals, classes [...] (ranges, negation, \d \w \s and
 * friends), '.', '*', '+', '?', {m} {m,} {m,n}, alternation '|', grouping
 * (...) and (?:...), escapes \n \t \r \f \v \0 \xHH and escaped
 * metacharacters. The alphabet is bytes: '.' is any byte except 0x0A, classes
 * range over byte values, and non-ASCII pattern characters match their UTF-8
 * bytes literally. Matching is whole-string.
 *
 * Unsupported (UnsupportedFeatureError): lookahead/lookbehind, backreferences,
 * named/capture semantics, anchors, lazy quantifiers, Unicode classes.
 */
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gdec/constraint.h"
#include "gdec/token_mask.h"
#include "gdec/vocab.h"

namespace gdec {

using FsmStateId = int32_t;
constexpr FsmStateId kFsmDead = -1;

/// Deterministic byte-level automaton. Transitions are stored per byte
/// equivalence class; every state is live (some accepting state reachable)
/// except for the degenerate empty-language machine, which has a single dead
/// start state. State 0 is always the start state.
class Fsm {
 public:
  FsmStateId start() const { return 0; }
  int32_t num_states() const { return num_states_; }
  bool accepting(FsmStateId s) const { return accepting_[static_cast<size_t>(s)]; }

  FsmStateId next(FsmStateId s, uint8_t byte) const {
    if (s < 0) return kFsmDead;
    return table_[static_cast<size_t>(s) * num_classes_ + class_of_[byte]];
  }

  /// Walks a byte string; returns kFsmDead as soon as the walk dies.
  FsmStateId walk(FsmStateId s, std::string_view bytes) const {
    for (unsigned char b : bytes) {
      s = next(s, b);
      if (s == kFsmDead) return kFsmDead;
    }
    return s;
  }

  /// Whole-string acceptance.
  bool accepts(std::string_view text) const {
    FsmStateId s = walk(start(), text);
    return s != kFsmDead && accepting(s);
  }

  int32_t num_classes() const { return num_classes_; }
  uint8_t byte_class(uint8_t b) const { return class_of_[b]; }

 private:
  friend Fsm compile_regex(const std::string& pattern);
  friend struct FsmSerializer;

  int32_t num_states_ = 0;
  int32_t num_classes_ = 0;
  std::array<uint8_t, 256> class_of_{};
  std::vector<FsmStateId> table_;  // num_states x num_classes, kFsmDead for missing
  std::vector<bool> accepting_;
};

/// Compile a regex to a pruned DFA (unreachable and dead states removed).
/// Throws SyntaxError / UnsupportedFeatureError.
Fsm compile_regex(const std::string& pattern);

/// Precomputed map from FSM states to the set of tokens whose full byte walk
/// stays live, plus EOS wherever the state accepts. Lookup is an array index;
/// nothing on the per-step path iterates the vocabulary.
class FsmIndex {
 public:
  FsmIndex() = default;

  const TokenMask& mask_for(FsmStateId s) const { return masks_[static_cast<size_t>(s)]; }
  bool eos_allowed(FsmStateId s) const { return eos_states_[static_cast<size_t>(s)]; }
  size_t num_states() const { return masks_.size(); }
  uint64_t vocab_fingerprint() const { return vocab_fingerprint_; }

 private:
  friend FsmIndex build_index(const Fsm& fsm, const Vocabulary& vocab);
  friend struct FsmSerializer;

  std::vector<TokenMask> masks_;
  std::vector<bool> eos_states_;
  uint64_t vocab_fingerprint_ = 0;
};

/// One pass over (state, token) pairs; empty tokens and the EOS token are
/// never byte-matched (EOS validity comes from state acceptance alone).
FsmIndex build_index(const Fsm& fsm, const Vocabulary& vocab);

/// Compiled regex constraint: shares one Fsm + FsmIndex across decoders.
class FsmConstraint : public Constraint, public std::enable_shared_from_this<FsmConstraint> {
 public:
  FsmConstraint(std::string pattern, VocabularyPtr vocab);
  FsmConstraint(std::string pattern, Fsm fsm, FsmIndex index, VocabularyPtr vocab);

  ConstraintStatePtr start() const override;
  size_t vocab_size() const override { return vocab_->size(); }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::string describe() const override { return "fsm:" + pattern_; }
  bool matches(std::string_view text) const override { return fsm_.accepts(text); }

  const Fsm& fsm() const { return fsm_; }
  const FsmIndex& index() const { return index_; }
  const Vocabulary& vocab() const { return *vocab_; }
  const std::string& pattern() const { return pattern_; }

  /// Versioned JSON dump of the compiled machine + index; round-trips.
  std::string save() const;
  static std::shared_ptr<FsmConstraint> load(const std::string& json_text, VocabularyPtr vocab);

 private:
  std::string pattern_;
  Fsm fsm_;
  FsmIndex index_;
  VocabularyPtr vocab_;
  TokenMask empty_mask_;

  friend class FsmConstraintState;
  friend struct FsmSerializer;
};

}  // namespace gdec
