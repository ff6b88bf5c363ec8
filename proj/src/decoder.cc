#include "gdec/decoder.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gdec/error.h"

namespace gdec {

namespace {

uint64_t history_hash(const std::vector<TokenId>& history, uint64_t seed) {
  uint64_t h = seed ^ 0x6a09e667f3bcc909ull;
  h = hash_mix(h, history.size());
  for (TokenId t : history) h = hash_mix(h, static_cast<uint64_t>(t) + 0x100);
  return h;
}

}  // namespace

std::vector<float> MockRandomSource::scores(const std::vector<TokenId>& history,
                                            const TokenMask*) {
  Rng rng(history_hash(history, seed_));
  std::vector<float> out(vocab_size_);
  for (auto& s : out) s = static_cast<float>(rng.next_double() * 2.0 - 1.0);
  return out;
}

std::vector<float> MockScriptedSource::scores(const std::vector<TokenId>& history,
                                              const TokenMask*) {
  std::vector<float> out(vocab_size_, 0.0f);
  size_t step = history.size();
  TokenId target = step < script_.size() ? script_[step] : eos_id_;
  if (target >= 0 && static_cast<size_t>(target) < vocab_size_) {
    out[static_cast<size_t>(target)] = boost_;
  }
  return out;
}

std::vector<float> MockAdversarialSource::scores(const std::vector<TokenId>& history,
                                                 const TokenMask* mask) {
  Rng rng(history_hash(history, seed_ ^ 0xadbeefull));
  std::vector<float> out(vocab_size_);
  for (size_t i = 0; i < vocab_size_; ++i) {
    bool allowed = mask != nullptr && i < mask->size() && mask->test(static_cast<TokenId>(i));
    if (allowed) {
      out[i] = static_cast<float>(-8.0 + rng.next_double() * 4.0);
    } else {
      out[i] = static_cast<float>(8.0 + rng.next_double() * 4.0);
    }
  }
  return out;
}

void DecodeConfig::validate() const {
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1");
  if (temperature < 0.0) throw ValidationError("temperature must be >= 0");
}

const char* finish_reason_name(FinishReason reason) {
  switch (reason) {
    case FinishReason::kEos: return "eos";
    case FinishReason::kMaxTokens: return "max_tokens";
    case FinishReason::kDeadEnd: return "dead_end";
  }
  return "unknown";
}

std::pair<TokenId, ConstraintStatePtr> decode_step(ConstraintState& state,
                                                   const std::vector<float>& logits,
                                                   const DecodeConfig& config, Rng& rng) {
  const TokenMask& mask = state.allowed_mask();
  if (logits.size() != mask.size()) {
    throw LengthMismatchError("logit vector length " + std::to_string(logits.size()) +
                              " does not match vocabulary size " + std::to_string(mask.size()));
  }
  if (!mask.any()) throw DeadEndError("no legal continuation", {}, "");

  TokenId chosen = -1;
  if (config.greedy || config.temperature == 0.0) {
    float best = -std::numeric_limits<float>::infinity();
    for (TokenId t = mask.next_set(0); t != -1; t = mask.next_set(t + 1)) {
      if (logits[static_cast<size_t>(t)] > best) {
        best = logits[static_cast<size_t>(t)];
        chosen = t;
      }
    }
  } else {
    // Softmax over allowed tokens only; everything else has probability 0.
    double max_score = -std::numeric_limits<double>::infinity();
    for (TokenId t = mask.next_set(0); t != -1; t = mask.next_set(t + 1)) {
      max_score = std::max(max_score, static_cast<double>(logits[static_cast<size_t>(t)]));
    }
    double total = 0.0;
    for (TokenId t = mask.next_set(0); t != -1; t = mask.next_set(t + 1)) {
      total += std::exp((logits[static_cast<size_t>(t)] - max_score) / config.temperature);
    }
    double u = rng.next_double() * total;
    double acc = 0.0;
    for (TokenId t = mask.next_set(0); t != -1; t = mask.next_set(t + 1)) {
      acc += std::exp((logits[static_cast<size_t>(t)] - max_score) / config.temperature);
      chosen = t;
      if (u < acc) break;
    }
  }
  return {chosen, state.advance(chosen)};
}

DecodeOutput decode(LogitSource& source, const Constraint& constraint,
                    const DecodeConfig& config) {
  config.validate();
  if (source.vocab_size() != constraint.vocab_size()) {
    throw LengthMismatchError("logit source and constraint were built for different vocabularies");
  }
  const Vocabulary& vocab = constraint.vocabulary();
  Rng rng(config.seed ^ 0x5eedull);

  DecodeOutput out;
  ConstraintStatePtr state = constraint.start();
  while (out.steps < static_cast<size_t>(config.max_tokens)) {
    const TokenMask& mask = state->allowed_mask();
    if (!mask.any()) {
      throw DeadEndError("decode dead end after " + std::to_string(out.steps) + " steps",
                         out.token_ids, out.text);
    }
    out.mask_popcounts.push_back(static_cast<uint32_t>(mask.popcount()));
    std::vector<float> logits = source.scores(out.token_ids, &mask);
    auto [token, next] = decode_step(*state, logits, config, rng);
    ++out.steps;
    out.token_ids.push_back(token);
    state = std::move(next);
    if (token == vocab.eos_id()) {
      out.finish = FinishReason::kEos;
      break;
    }
    out.text += vocab.token(token);
  }
  if (out.finish == FinishReason::kEos) {
    out.constraint_satisfied = constraint.matches(out.text);
  }
  return out;
}

// ---------------------------------------------------------------------------
// backend none
// ---------------------------------------------------------------------------

class NoConstraintState final : public ConstraintState {
 public:
  NoConstraintState(std::shared_ptr<const NoConstraint> owner, bool complete)
      : owner_(std::move(owner)), complete_(complete) {}

  const TokenMask& allowed_mask() override {
    static const TokenMask empty;
    if (complete_) {
      if (empty_.size() != owner_->vocab_size()) empty_ = TokenMask(owner_->vocab_size());
      return empty_;
    }
    return owner_->full_mask_;
  }

  ConstraintStatePtr advance(TokenId token) const override {
    if (complete_) throw IllegalTokenError("advance on a completed constraint");
    if (token < 0 || static_cast<size_t>(token) >= owner_->vocab_size()) {
      throw IllegalTokenError("token id out of range");
    }
    bool complete = token == owner_->vocabulary().eos_id();
    return std::make_unique<NoConstraintState>(owner_, complete);
  }

  ConstraintStatePtr branch() const override {
    return std::make_unique<NoConstraintState>(owner_, complete_);
  }

  bool is_complete() const override { return complete_; }

 private:
  std::shared_ptr<const NoConstraint> owner_;
  bool complete_;
  TokenMask empty_;
};

ConstraintStatePtr NoConstraint::start() const {
  return std::make_unique<NoConstraintState>(shared_from_this(), false);
}

}  // namespace gdec
