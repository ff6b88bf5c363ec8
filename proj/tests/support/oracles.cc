#include "support/oracles.h"

namespace gdec::testing {

gdec::TokenMask fsm_oracle_mask(const gdec::Fsm& fsm, gdec::FsmStateId state,
                                const gdec::Vocabulary& vocab) {
  gdec::TokenMask mask(vocab.size());
  for (gdec::TokenId t = 0; t < static_cast<gdec::TokenId>(vocab.size()); ++t) {
    if (t == vocab.eos_id()) continue;
    const std::string& bytes = vocab.token(t);
    if (bytes.empty()) continue;
    if (fsm.walk(state, bytes) != gdec::kFsmDead) mask.set(t);
  }
  if (fsm.accepting(state)) mask.set(vocab.eos_id());
  return mask;
}

gdec::TokenMask pda_oracle_mask(const gdec::PdaEngine& engine, const gdec::PdaState& state) {
  const gdec::Vocabulary& vocab = engine.vocab();
  gdec::TokenMask mask(vocab.size());
  if (state.complete()) return mask;
  for (gdec::TokenId t = 0; t < static_cast<gdec::TokenId>(vocab.size()); ++t) {
    if (t == vocab.eos_id()) continue;
    const std::string& bytes = vocab.token(t);
    if (bytes.empty()) continue;
    std::optional<gdec::PdaState> cur = state;
    for (unsigned char b : bytes) {
      cur = engine.advance_byte(*cur, b);
      if (!cur) break;
    }
    if (cur) mask.set(t);
  }
  if (state.done_reachable()) mask.set(vocab.eos_id());
  return mask;
}

gdec::TokenMask enforcer_oracle_mask(const gdec::CharParserState& state,
                                     const gdec::Vocabulary& vocab) {
  gdec::TokenMask mask(vocab.size());
  for (gdec::TokenId t = 0; t < static_cast<gdec::TokenId>(vocab.size()); ++t) {
    if (t == vocab.eos_id()) continue;
    const std::string& bytes = vocab.token(t);
    if (bytes.empty()) continue;
    std::optional<gdec::CharParserState> cur = state;
    for (unsigned char b : bytes) {
      cur = gdec::char_advance(*cur, b);
      if (!cur) break;
    }
    if (cur) mask.set(t);
  }
  if (state.is_done()) mask.set(vocab.eos_id());
  return mask;
}

}  // namespace gdec::testing
