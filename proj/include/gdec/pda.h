/*!
 * \file gdec/pda.h
 * \brief Pushdown engine for CFG-constrained decoding.
 *
 * The engine expands the (inlined) grammar top-down onto persistent stacks.
 * A decode state is a bounded set of live configurations, each "inside" one
 * terminal FSM with a stack of pending symbols. Masks come from precomputed
 * per-position vocabulary classification: context-independent-valid tokens
 * are OR-ed in from tables, context-independent-invalid tokens are skipped,
 * and the context-dependent remainder is resolved by simulating the token's
 * bytes against the actual stacks. Final masks are memoized in a bounded LRU
 * keyed by a structural fingerprint of the whole state.
 */
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gdec/constraint.h"
#include "gdec/grammar.h"
#include "gdec/support/lru_cache.h"
#include "gdec/token_mask.h"
#include "gdec/vocab.h"

namespace gdec {

// Persistent stack: pushing or popping creates a new value; previously
// obtained stacks stay valid. Each node memoizes depth and a cumulative
// structural hash so fingerprinting whole stacks is O(1).
struct StackNode;
using StackPtr = std::shared_ptr<const StackNode>;

struct StackNode {
  GrammarSymbol symbol;
  StackPtr parent;
  uint32_t depth;
  uint64_t hash;
};

StackPtr stack_push(const StackPtr& stack, GrammarSymbol symbol);
uint32_t stack_depth(const StackPtr& stack);
uint64_t stack_hash(const StackPtr& stack);
bool stack_equal(const StackPtr& a, const StackPtr& b);

/// One live configuration: currently inside `terminal`'s FSM at `fsm_state`,
/// with `cont` holding the symbols that follow. terminal == -1 marks the
/// distinguished "document complete" configuration (EOS is legal).
struct PdaConfig {
  int32_t terminal;
  FsmStateId fsm_state;
  StackPtr cont;

  bool same_as(const PdaConfig& other) const {
    return terminal == other.terminal && fsm_state == other.fsm_state &&
           stack_equal(cont, other.cont);
  }
};

class PdaState {
 public:
  bool complete() const { return complete_; }
  bool done_reachable() const;
  const std::vector<PdaConfig>& configs() const { return configs_; }
  uint64_t fingerprint() const { return fingerprint_; }

 private:
  friend class PdaEngine;
  std::vector<PdaConfig> configs_;  // canonical order, structurally deduped
  bool complete_ = false;
  uint64_t fingerprint_ = 0;
};

struct PdaOptions {
  bool enable_inlining = true;
  int inline_max_refs = 4;
  size_t max_live_configs = 32;       // exceeding raises GrammarTooAmbiguous
  int64_t mask_cache_capacity = 4096; // 0 disables, < 0 unbounded
};

enum class TokenClass : uint8_t {
  kContextIndependentValid,
  kContextIndependentInvalid,
  kContextDependent,
};

class PdaEngine {
 public:
  PdaEngine(const Grammar& grammar, VocabularyPtr vocab, PdaOptions options = {});

  PdaState start_state() const;

  /// One byte of progress across every live configuration; expansions across
  /// terminal boundaries happen inline. nullopt when nothing survives.
  std::optional<PdaState> advance_byte(const PdaState& state, uint8_t byte) const;

  /// Fold of advance_byte over the token's bytes (EOS: done reachability).
  bool token_survives(const PdaState& state, TokenId token) const;

  /// Token-level advance; IllegalTokenError when the token is not viable.
  PdaState advance_token(const PdaState& state, TokenId token) const;

  /// Full mask for a state: classification tables + runtime resolution +
  /// cache. Returned pointer stays valid independently of eviction.
  std::shared_ptr<const TokenMask> mask_shared(const PdaState& state) const;
  TokenMask mask(const PdaState& state) const { return *mask_shared(state); }

  /// Classification introspection (position = terminal FSM state).
  TokenClass classify(int32_t terminal, FsmStateId fsm_state, TokenId token) const;
  const TokenMask& ci_valid_mask(int32_t terminal, FsmStateId fsm_state) const;
  const std::vector<TokenId>& cd_tokens(int32_t terminal, FsmStateId fsm_state) const;

  bool matches(std::string_view text) const;

  const Grammar& grammar() const { return grammar_; }
  const Vocabulary& vocab() const { return *vocab_; }
  const Fsm& terminal_fsm(int32_t t) const { return terminal_fsms_[static_cast<size_t>(t)]; }
  const PdaOptions& options() const { return options_; }

  uint64_t cache_hits() const { return mask_cache_.hits(); }
  uint64_t cache_misses() const { return mask_cache_.misses(); }
  size_t cache_size() const { return mask_cache_.size(); }

 private:
  struct ExpandScratch;

  void expand(const StackPtr& stack, std::vector<PdaConfig>& out, ExpandScratch& scratch) const;
  PdaState canonicalize(std::vector<PdaConfig> configs) const;
  size_t position_index(int32_t terminal, FsmStateId fsm_state) const {
    return static_cast<size_t>(position_offsets_[static_cast<size_t>(terminal)]) +
           static_cast<size_t>(fsm_state);
  }
  std::shared_ptr<const TokenMask> compute_mask(const PdaState& state) const;

  Grammar grammar_;  // post-inlining
  VocabularyPtr vocab_;
  PdaOptions options_;
  std::vector<Fsm> terminal_fsms_;
  std::vector<int32_t> position_offsets_;

  // Per (terminal, fsm_state) vocabulary partition.
  std::vector<TokenMask> ci_valid_;
  std::vector<std::vector<TokenId>> cd_;

  mutable LruCache<uint64_t, TokenMask> mask_cache_;
  std::shared_ptr<const TokenMask> empty_mask_;
};

/// Grammar/schema constraint over the PDA engine.
class PdaConstraint : public Constraint, public std::enable_shared_from_this<PdaConstraint> {
 public:
  PdaConstraint(const Grammar& grammar, VocabularyPtr vocab, PdaOptions options = {},
                std::string description = "grammar");
  static std::shared_ptr<PdaConstraint> from_schema(const Schema& schema, VocabularyPtr vocab,
                                                    PdaOptions options = {});

  ConstraintStatePtr start() const override;
  size_t vocab_size() const override { return engine_->vocab().size(); }
  const Vocabulary& vocabulary() const override { return engine_->vocab(); }
  std::string describe() const override { return "pda:" + description_; }
  bool matches(std::string_view text) const override { return engine_->matches(text); }

  const PdaEngine& engine() const { return *engine_; }

 private:
  std::shared_ptr<const PdaEngine> engine_;
  std::string description_;
};

}  // namespace gdec
