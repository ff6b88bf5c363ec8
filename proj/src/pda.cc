#include "gdec/pda.h"

#include <algorithm>

#include "gdec/error.h"
#include "gdec/support/rng.h"

namespace gdec {

namespace {

constexpr uint64_t kEmptyStackHash = 0x8f1bbcdcbfa53e0bull;
constexpr size_t kMaxExpansionsPerClosure = 1024;

uint64_t symbol_hash(GrammarSymbol sym) {
  return hash_mix(static_cast<uint64_t>(sym.kind) + 11, static_cast<uint64_t>(sym.index) + 17);
}

}  // namespace

StackPtr stack_push(const StackPtr& stack, GrammarSymbol symbol) {
  auto node = std::make_shared<StackNode>();
  node->symbol = symbol;
  node->parent = stack;
  node->depth = stack_depth(stack) + 1;
  node->hash = hash_mix(stack_hash(stack), symbol_hash(symbol));
  return node;
}

uint32_t stack_depth(const StackPtr& stack) { return stack ? stack->depth : 0; }

uint64_t stack_hash(const StackPtr& stack) { return stack ? stack->hash : kEmptyStackHash; }

bool stack_equal(const StackPtr& a, const StackPtr& b) {
  const StackNode* x = a.get();
  const StackNode* y = b.get();
  while (x != y) {
    if (x == nullptr || y == nullptr) return false;
    if (x->depth != y->depth || x->hash != y->hash) return false;
    if (!(x->symbol == y->symbol)) return false;
    x = x->parent.get();
    y = y->parent.get();
  }
  return true;
}

bool PdaState::done_reachable() const {
  for (const auto& cfg : configs_) {
    if (cfg.terminal < 0) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Engine construction
// ---------------------------------------------------------------------------

PdaEngine::PdaEngine(const Grammar& grammar, VocabularyPtr vocab, PdaOptions options)
    : grammar_(options.enable_inlining ? inline_rules(grammar, options.inline_max_refs)
                                       : grammar),
      vocab_(std::move(vocab)),
      options_(options),
      mask_cache_(options.mask_cache_capacity) {
  if (!options_.enable_inlining) grammar_.validate();

  terminal_fsms_.reserve(grammar_.num_terminals());
  position_offsets_.reserve(grammar_.num_terminals() + 1);
  int32_t offset = 0;
  for (size_t t = 0; t < grammar_.num_terminals(); ++t) {
    position_offsets_.push_back(offset);
    terminal_fsms_.push_back(compile_regex(grammar_.terminal(static_cast<int32_t>(t)).pattern));
    offset += terminal_fsms_.back().num_states();
  }
  position_offsets_.push_back(offset);

  // Vocabulary classification per position. A token whose byte walk stays
  // inside the terminal is valid under any stack; one that dies without ever
  // passing an accepting state can never be completed by any stack; the rest
  // depend on the stack and are resolved at runtime.
  const size_t num_positions = static_cast<size_t>(offset);
  ci_valid_.assign(num_positions, TokenMask(vocab_->size()));
  cd_.assign(num_positions, {});
  const TokenId eos = vocab_->eos_id();
  for (size_t t = 0; t < terminal_fsms_.size(); ++t) {
    const Fsm& fsm = terminal_fsms_[t];
    for (FsmStateId s = 0; s < fsm.num_states(); ++s) {
      const size_t pos = position_index(static_cast<int32_t>(t), s);
      for (TokenId tok = 0; tok < static_cast<TokenId>(vocab_->size()); ++tok) {
        if (tok == eos) continue;
        const std::string& bytes = vocab_->token(tok);
        if (bytes.empty()) continue;
        FsmStateId cur = s;
        bool passed_accept = false;
        bool died = false;
        for (unsigned char b : bytes) {
          if (fsm.accepting(cur)) passed_accept = true;
          cur = fsm.next(cur, b);
          if (cur == kFsmDead) {
            died = true;
            break;
          }
        }
        if (!died) {
          ci_valid_[pos].set(tok);
        } else if (passed_accept) {
          cd_[pos].push_back(tok);
        }
        // else: context-independent-invalid; nothing stored
      }
    }
  }

  empty_mask_ = std::make_shared<const TokenMask>(vocab_->size());
}

// ---------------------------------------------------------------------------
// Closure / byte advance
// ---------------------------------------------------------------------------

struct PdaEngine::ExpandScratch {
  std::vector<StackPtr> visited;

  bool seen(const StackPtr& stack) {
    for (const auto& v : visited) {
      if (stack_equal(v, stack)) return true;
    }
    return false;
  }
};

void PdaEngine::expand(const StackPtr& stack, std::vector<PdaConfig>& out,
                       ExpandScratch& scratch) const {
  if (scratch.seen(stack)) return;
  if (scratch.visited.size() >= kMaxExpansionsPerClosure) {
    throw GrammarTooAmbiguousError("closure expanded more than " +
                                   std::to_string(kMaxExpansionsPerClosure) + " stacks");
  }
  scratch.visited.push_back(stack);

  if (!stack) {
    out.push_back({-1, kFsmDead, nullptr});
    return;
  }
  const GrammarSymbol sym = stack->symbol;
  const StackPtr& rest = stack->parent;
  if (sym.kind == GrammarSymbol::Kind::kTerminal) {
    const Fsm& fsm = terminal_fsms_[static_cast<size_t>(sym.index)];
    out.push_back({sym.index, fsm.start(), rest});
    if (fsm.accepting(fsm.start())) expand(rest, out, scratch);
    return;
  }
  for (const auto& prod : grammar_.productions(sym.index)) {
    StackPtr next = rest;
    for (auto it = prod.rbegin(); it != prod.rend(); ++it) next = stack_push(next, *it);
    expand(next, out, scratch);
  }
}

PdaState PdaEngine::canonicalize(std::vector<PdaConfig> configs) const {
  std::sort(configs.begin(), configs.end(), [](const PdaConfig& a, const PdaConfig& b) {
    if (a.terminal != b.terminal) return a.terminal < b.terminal;
    if (a.fsm_state != b.fsm_state) return a.fsm_state < b.fsm_state;
    uint32_t da = stack_depth(a.cont), db = stack_depth(b.cont);
    if (da != db) return da < db;
    return stack_hash(a.cont) < stack_hash(b.cont);
  });
  std::vector<PdaConfig> unique;
  for (auto& cfg : configs) {
    if (!unique.empty() && unique.back().same_as(cfg)) continue;
    unique.push_back(std::move(cfg));
  }
  if (unique.size() > options_.max_live_configs) {
    throw GrammarTooAmbiguousError("live configurations " + std::to_string(unique.size()) +
                                   " exceed the bound " +
                                   std::to_string(options_.max_live_configs));
  }
  PdaState state;
  uint64_t fp = 0x51ed270b7a03ad65ull;
  for (const auto& cfg : unique) {
    fp = hash_mix(fp, static_cast<uint64_t>(cfg.terminal) + 31);
    fp = hash_mix(fp, static_cast<uint64_t>(cfg.fsm_state) + 7);
    fp = hash_mix(fp, stack_hash(cfg.cont));
    fp = hash_mix(fp, stack_depth(cfg.cont));
  }
  state.configs_ = std::move(unique);
  state.fingerprint_ = fp;
  return state;
}

PdaState PdaEngine::start_state() const {
  std::vector<PdaConfig> out;
  ExpandScratch scratch;
  expand(stack_push(nullptr, {GrammarSymbol::Kind::kRule, grammar_.start_rule()}), out, scratch);
  return canonicalize(std::move(out));
}

std::optional<PdaState> PdaEngine::advance_byte(const PdaState& state, uint8_t byte) const {
  std::vector<PdaConfig> out;
  ExpandScratch scratch;
  for (const auto& cfg : state.configs()) {
    if (cfg.terminal < 0) continue;  // the complete marker consumes nothing
    const Fsm& fsm = terminal_fsms_[static_cast<size_t>(cfg.terminal)];
    FsmStateId next = fsm.next(cfg.fsm_state, byte);
    if (next == kFsmDead) continue;
    out.push_back({cfg.terminal, next, cfg.cont});
    if (fsm.accepting(next)) expand(cfg.cont, out, scratch);
  }
  if (out.empty()) return std::nullopt;
  return canonicalize(std::move(out));
}

bool PdaEngine::token_survives(const PdaState& state, TokenId token) const {
  if (state.complete()) return false;
  if (token == vocab_->eos_id()) return state.done_reachable();
  const std::string& bytes = vocab_->token(token);
  if (bytes.empty()) return false;
  PdaState cur = state;
  for (unsigned char b : bytes) {
    auto next = advance_byte(cur, b);
    if (!next) return false;
    cur = std::move(*next);
  }
  return true;
}

PdaState PdaEngine::advance_token(const PdaState& state, TokenId token) const {
  if (state.complete()) throw IllegalTokenError("advance on a completed constraint");
  if (token < 0 || static_cast<size_t>(token) >= vocab_->size()) {
    throw IllegalTokenError("token id " + std::to_string(token) + " out of range");
  }
  if (token == vocab_->eos_id()) {
    if (!state.done_reachable()) {
      throw IllegalTokenError("EOS before the grammar is complete");
    }
    PdaState done;
    done.complete_ = true;
    done.fingerprint_ = 0xdeadc0dedeadc0deull;
    return done;
  }
  const std::string& bytes = vocab_->token(token);
  if (bytes.empty()) throw IllegalTokenError("zero-length token " + std::to_string(token));
  PdaState cur = state;
  for (unsigned char b : bytes) {
    auto next = advance_byte(cur, b);
    if (!next) {
      throw IllegalTokenError("token " + std::to_string(token) + " violates the grammar mask");
    }
    cur = std::move(*next);
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

std::shared_ptr<const TokenMask> PdaEngine::compute_mask(const PdaState& state) const {
  auto mask = std::make_shared<TokenMask>(vocab_->size());
  std::vector<TokenId> candidates;
  for (const auto& cfg : state.configs()) {
    if (cfg.terminal < 0) {
      mask->set(vocab_->eos_id());
      continue;
    }
    const size_t pos = position_index(cfg.terminal, cfg.fsm_state);
    *mask |= ci_valid_[pos];
    for (TokenId t : cd_[pos]) candidates.push_back(t);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  for (TokenId t : candidates) {
    if (!mask->test(t) && token_survives(state, t)) mask->set(t);
  }
  return mask;
}

std::shared_ptr<const TokenMask> PdaEngine::mask_shared(const PdaState& state) const {
  if (state.complete()) return empty_mask_;
  if (auto cached = mask_cache_.get(state.fingerprint())) return cached;
  auto mask = compute_mask(state);
  mask_cache_.put(state.fingerprint(), mask);
  return mask;
}

TokenClass PdaEngine::classify(int32_t terminal, FsmStateId fsm_state, TokenId token) const {
  const size_t pos = position_index(terminal, fsm_state);
  if (ci_valid_[pos].test(token)) return TokenClass::kContextIndependentValid;
  if (std::binary_search(cd_[pos].begin(), cd_[pos].end(), token)) {
    return TokenClass::kContextDependent;
  }
  return TokenClass::kContextIndependentInvalid;
}

const TokenMask& PdaEngine::ci_valid_mask(int32_t terminal, FsmStateId fsm_state) const {
  return ci_valid_[position_index(terminal, fsm_state)];
}

const std::vector<TokenId>& PdaEngine::cd_tokens(int32_t terminal, FsmStateId fsm_state) const {
  return cd_[position_index(terminal, fsm_state)];
}

bool PdaEngine::matches(std::string_view text) const {
  PdaState cur = start_state();
  for (unsigned char b : text) {
    auto next = advance_byte(cur, b);
    if (!next) return false;
    cur = std::move(*next);
  }
  return cur.done_reachable();
}

// ---------------------------------------------------------------------------
// Constraint wrapper
// ---------------------------------------------------------------------------

class PdaConstraintState final : public ConstraintState {
 public:
  PdaConstraintState(std::shared_ptr<const PdaConstraint> owner, PdaState state)
      : owner_(std::move(owner)), state_(std::move(state)) {}

  const TokenMask& allowed_mask() override {
    if (!memo_) memo_ = owner_->engine().mask_shared(state_);
    return *memo_;
  }

  ConstraintStatePtr advance(TokenId token) const override {
    return std::make_unique<PdaConstraintState>(owner_,
                                                owner_->engine().advance_token(state_, token));
  }

  ConstraintStatePtr branch() const override {
    auto copy = std::make_unique<PdaConstraintState>(owner_, state_);
    copy->memo_ = memo_;
    return copy;
  }

  bool is_complete() const override { return state_.complete(); }

  const PdaState& pda_state() const { return state_; }

 private:
  std::shared_ptr<const PdaConstraint> owner_;
  PdaState state_;
  std::shared_ptr<const TokenMask> memo_;
};

PdaConstraint::PdaConstraint(const Grammar& grammar, VocabularyPtr vocab, PdaOptions options,
                             std::string description)
    : engine_(std::make_shared<const PdaEngine>(grammar, std::move(vocab), options)),
      description_(std::move(description)) {}

std::shared_ptr<PdaConstraint> PdaConstraint::from_schema(const Schema& schema,
                                                          VocabularyPtr vocab,
                                                          PdaOptions options) {
  return std::make_shared<PdaConstraint>(schema_to_grammar(schema), std::move(vocab), options,
                                         "json-schema");
}

ConstraintStatePtr PdaConstraint::start() const {
  return std::make_unique<PdaConstraintState>(shared_from_this(), engine_->start_state());
}

}  // namespace gdec
