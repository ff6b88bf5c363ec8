/*!
 * \file gdec/decoder.h
 * \brief The constrained sampling loop: score, mask, sample, advance.
 *
 * Disallowed tokens get probability exactly zero (scores replaced by -inf
 * before normalization). A state whose mask is all-zero is a dead end and
 * raises DeadEndError with the emitted prefix attached; decoding never
 * silently truncates. Multiple sequences may decode concurrently against
 * one shared compiled constraint.
 */
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gdec/constraint.h"
#include "gdec/support/rng.h"
#include "gdec/token_mask.h"

namespace gdec {

/// Per-step score provider. Mock variants are deterministic for a fixed
/// (seed, history); `mask` is the current constraint mask, which adversarial
/// mocks use to aim probability mass at forbidden tokens. Providers backed
/// by a server ignore it.
class LogitSource {
 public:
  virtual ~LogitSource() = default;
  virtual std::vector<float> scores(const std::vector<TokenId>& history,
                                    const TokenMask* mask) = 0;
  virtual size_t vocab_size() const = 0;
};

class MockRandomSource final : public LogitSource {
 public:
  MockRandomSource(uint64_t seed, size_t vocab_size) : seed_(seed), vocab_size_(vocab_size) {}
  std::vector<float> scores(const std::vector<TokenId>& history, const TokenMask* mask) override;
  size_t vocab_size() const override { return vocab_size_; }

 private:
  uint64_t seed_;
  size_t vocab_size_;
};

/// Boosts the scripted token for each step; once the script is exhausted the
/// boost moves to EOS. With greedy sampling this reproduces the script
/// wherever the constraint admits it and coerces it elsewhere.
class MockScriptedSource final : public LogitSource {
 public:
  MockScriptedSource(std::vector<TokenId> script, float boost, size_t vocab_size, TokenId eos_id)
      : script_(std::move(script)), boost_(boost), vocab_size_(vocab_size), eos_id_(eos_id) {}
  std::vector<float> scores(const std::vector<TokenId>& history, const TokenMask* mask) override;
  size_t vocab_size() const override { return vocab_size_; }

 private:
  std::vector<TokenId> script_;
  float boost_;
  size_t vocab_size_;
  TokenId eos_id_;
};

/// Concentrates mass on mask-violating tokens; allowed tokens get small
/// seeded noise so the constrained distribution stays well defined.
class MockAdversarialSource final : public LogitSource {
 public:
  MockAdversarialSource(uint64_t seed, size_t vocab_size) : seed_(seed), vocab_size_(vocab_size) {}
  std::vector<float> scores(const std::vector<TokenId>& history, const TokenMask* mask) override;
  size_t vocab_size() const override { return vocab_size_; }

 private:
  uint64_t seed_;
  size_t vocab_size_;
};

struct DecodeConfig {
  std::string backend = "none";  // fsm | pda | enforcer | none (echoed in outputs)
  int max_tokens = 512;
  double temperature = 1.0;
  uint64_t seed = 0;
  bool greedy = false;

  void validate() const;  // max_tokens >= 1, temperature >= 0
};

enum class FinishReason { kEos, kMaxTokens, kDeadEnd };
const char* finish_reason_name(FinishReason reason);

struct DecodeOutput {
  std::vector<TokenId> token_ids;  // includes the final EOS when finish == kEos
  std::string text;                // concatenated token bytes, EOS excluded
  FinishReason finish = FinishReason::kMaxTokens;
  std::vector<uint32_t> mask_popcounts;  // per-step diagnostics
  size_t steps = 0;
  /// finish == kEos only: post-hoc check of `text` through the constraint's
  /// byte-level acceptor, independent of the per-step mask path.
  bool constraint_satisfied = false;
};

/// One sampling step. Temperature 0 and the greedy flag both select the
/// argmax over allowed tokens with lowest-id tie break. Throws DeadEndError
/// (empty mask) or IllegalTokenError (logit length mismatch).
std::pair<TokenId, ConstraintStatePtr> decode_step(ConstraintState& state,
                                                   const std::vector<float>& logits,
                                                   const DecodeConfig& config, Rng& rng);

/// Full decode loop. Throws DeadEndError with the offending prefix attached.
DecodeOutput decode(LogitSource& source, const Constraint& constraint,
                    const DecodeConfig& config);

/// Pass-through "constraint" for backend none: every token is always legal
/// and EOS may appear anywhere.
class NoConstraint : public Constraint, public std::enable_shared_from_this<NoConstraint> {
 public:
  explicit NoConstraint(VocabularyPtr vocab)
      : vocab_(std::move(vocab)), full_mask_(vocab_->size(), true) {}

  ConstraintStatePtr start() const override;
  size_t vocab_size() const override { return vocab_->size(); }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::string describe() const override { return "none"; }
  bool matches(std::string_view) const override { return true; }

 private:
  VocabularyPtr vocab_;
  TokenMask full_mask_;

  friend class NoConstraintState;
};

}  // namespace gdec
