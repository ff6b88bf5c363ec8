#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <regex>

#include "gdec/regex_fsm.h"
#include "gdec/support/rng.h"
#include "support/generators.h"
#include "support/oracles.h"

using namespace gdec;
using gdec::testing::fsm_oracle_mask;

TEST_CASE("compile_regex: basic languages") {
  Fsm digits = compile_regex("[0-9]+");
  CHECK(digits.accepts("42"));
  CHECK(digits.accepts("0"));
  CHECK_FALSE(digits.accepts(""));
  CHECK_FALSE(digits.accepts("4a"));

  Fsm ab = compile_regex("(a|b)c");
  CHECK(ab.accepts("ac"));
  CHECK(ab.accepts("bc"));
  CHECK_FALSE(ab.accepts("c"));
  CHECK_FALSE(ab.accepts("abc"));
  CHECK_FALSE(ab.accepts("acc"));
}

TEST_CASE("compile_regex: quantifiers, classes, escapes") {
  CHECK(compile_regex("a{2,3}").accepts("aa"));
  CHECK(compile_regex("a{2,3}").accepts("aaa"));
  CHECK_FALSE(compile_regex("a{2,3}").accepts("a"));
  CHECK_FALSE(compile_regex("a{2,3}").accepts("aaaa"));
  CHECK(compile_regex("a{2,}").accepts("aaaaa"));
  CHECK(compile_regex("a{2}").accepts("aa"));
  CHECK(compile_regex("[^ab]").accepts("c"));
  CHECK_FALSE(compile_regex("[^ab]").accepts("a"));
  CHECK(compile_regex("\\d\\.\\d").accepts("1.2"));
  CHECK_FALSE(compile_regex("\\d\\.\\d").accepts("1x2"));
  CHECK(compile_regex("\\w+").accepts("ab_9"));
  CHECK(compile_regex(".").accepts("x"));
  CHECK_FALSE(compile_regex(".").accepts("\n"));
  CHECK(compile_regex("\\x41").accepts("A"));
  CHECK(compile_regex("a?").accepts(""));
  CHECK(compile_regex("a?").accepts("a"));
  // byte-level UTF-8 literal
  CHECK(compile_regex("é").accepts("\xc3\xa9"));
  CHECK_FALSE(compile_regex("é").accepts("\xc3"));
}

TEST_CASE("compile_regex: unsupported features are rejected with the reason") {
  CHECK_THROWS_AS(compile_regex("(?=x)a"), UnsupportedFeatureError);
  CHECK_THROWS_AS(compile_regex("(?!x)a"), UnsupportedFeatureError);
  CHECK_THROWS_AS(compile_regex("(?<=x)a"), UnsupportedFeatureError);
  CHECK_THROWS_AS(compile_regex("(a)\\1"), UnsupportedFeatureError);
  CHECK_THROWS_AS(compile_regex("a*?b"), UnsupportedFeatureError);
  CHECK_THROWS_AS(compile_regex("^a$"), UnsupportedFeatureError);
  CHECK_THROWS_AS(compile_regex("\\bword"), UnsupportedFeatureError);
  CHECK_THROWS_AS(compile_regex("\\u0041"), UnsupportedFeatureError);
}

TEST_CASE("compile_regex: syntax errors") {
  CHECK_THROWS_AS(compile_regex("(ab"), SyntaxError);
  CHECK_THROWS_AS(compile_regex("ab)"), SyntaxError);
  CHECK_THROWS_AS(compile_regex("[ab"), SyntaxError);
  CHECK_THROWS_AS(compile_regex("*a"), SyntaxError);
  CHECK_THROWS_AS(compile_regex("a{3,1}"), SyntaxError);
  CHECK_THROWS_AS(compile_regex("a{99999}"), SyntaxError);
  CHECK_THROWS_AS(compile_regex("a\\"), SyntaxError);
  CHECK_THROWS_AS(compile_regex("[z-a]"), SyntaxError);
}

TEST_CASE("fsm agrees with std::regex on random patterns and strings") {
  Rng rng(2024);
  int patterns_checked = 0;
  while (patterns_checked < 40) {
    std::string pattern = gdec::testing::random_regex(rng);
    Fsm fsm = compile_regex(pattern);
    std::regex ref;
    try {
      ref = std::regex(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
      continue;  // generator emitted something std::regex cannot take; skip
    }
    ++patterns_checked;
    for (int i = 0; i < 200; ++i) {
      std::string s = gdec::testing::random_string(rng, "abcdxyz019", 8);
      bool mine = fsm.accepts(s);
      bool theirs = std::regex_match(s, ref);
      if (mine != theirs) {
        CAPTURE(pattern);
        CAPTURE(s);
        CHECK(mine == theirs);
      }
    }
  }
}

TEST_CASE("build_index: digit grammar over a tiny vocabulary") {
  auto vocab = std::make_shared<Vocabulary>(std::vector<std::string>{"0", "1", "a", "</s>"}, 3);
  Fsm fsm = compile_regex("[0-9]+");
  FsmIndex index = build_index(fsm, *vocab);

  const TokenMask& start_mask = index.mask_for(fsm.start());
  CHECK(start_mask.test(0));
  CHECK(start_mask.test(1));
  CHECK_FALSE(start_mask.test(2));
  CHECK_FALSE(start_mask.test(3));  // EOS not allowed before a digit

  FsmStateId after_zero = fsm.walk(fsm.start(), "0");
  const TokenMask& after_mask = index.mask_for(after_zero);
  CHECK(after_mask.test(0));
  CHECK(after_mask.test(1));
  CHECK_FALSE(after_mask.test(2));
  CHECK(after_mask.test(3));
  CHECK(index.eos_allowed(after_zero));
}

TEST_CASE("build_index: single-string language") {
  auto vocab = std::make_shared<Vocabulary>(std::vector<std::string>{"a", "</s>"}, 1);
  Fsm fsm = compile_regex("a");
  FsmIndex index = build_index(fsm, *vocab);
  const TokenMask& start_mask = index.mask_for(fsm.start());
  CHECK(start_mask.test(0));
  CHECK_FALSE(start_mask.test(1));
  FsmStateId after = fsm.walk(fsm.start(), "a");
  const TokenMask& end_mask = index.mask_for(after);
  CHECK_FALSE(end_mask.test(0));
  CHECK(end_mask.test(1));
  CHECK(end_mask.popcount() == 1);
}

TEST_CASE("build_index: vocabulary with no digits dead-ends a digit pattern") {
  auto vocab = std::make_shared<Vocabulary>(std::vector<std::string>{"a", "b", "</s>"}, 2);
  Fsm fsm = compile_regex("[0-9]{2}");
  FsmIndex index = build_index(fsm, *vocab);
  CHECK(index.mask_for(fsm.start()).popcount() == 0);
}

TEST_CASE("index equals the brute-force oracle on every state, many regexes") {
  Rng rng(99);
  auto vocab = gdec::testing::make_vocab(7, 128, "abcdxyz019");
  int checked = 0;
  while (checked < 25) {
    std::string pattern = gdec::testing::random_regex(rng);
    Fsm fsm = compile_regex(pattern);
    FsmIndex index = build_index(fsm, *vocab);
    ++checked;
    for (FsmStateId q = 0; q < fsm.num_states(); ++q) {
      TokenMask expect = fsm_oracle_mask(fsm, q, *vocab);
      if (!(index.mask_for(q) == expect)) {
        CAPTURE(pattern);
        CAPTURE(q);
        REQUIRE(index.mask_for(q) == expect);
      }
    }
  }
}

TEST_CASE("fsm constraint: advance follows token bytes; EOS terminates") {
  auto vocab = std::make_shared<Vocabulary>(std::vector<std::string>{"1", "a", "12", "</s>"}, 3);
  auto constraint = std::make_shared<FsmConstraint>("[0-9]+", vocab);
  auto state = constraint->start();
  CHECK(state->allowed_mask().test(0));
  CHECK(state->allowed_mask().test(2));
  CHECK_FALSE(state->allowed_mask().test(1));
  CHECK_THROWS_AS(state->advance(1), IllegalTokenError);

  auto after = state->advance(0);
  CHECK(after->allowed_mask().test(3));  // accepting: EOS allowed
  auto done = after->advance(3);
  CHECK(done->is_complete());
  CHECK(done->allowed_mask().popcount() == 0);
  CHECK_THROWS_AS(done->advance(0), IllegalTokenError);
}

TEST_CASE("empty tokens are never maskable") {
  auto vocab = std::make_shared<Vocabulary>(std::vector<std::string>{"", "0", "</s>"}, 2);
  auto constraint = std::make_shared<FsmConstraint>("[0-9]*", vocab);
  auto state = constraint->start();
  CHECK_FALSE(state->allowed_mask().test(0));
  CHECK(state->allowed_mask().test(1));
  CHECK(state->allowed_mask().test(2));  // empty string matches: EOS allowed
}

TEST_CASE("index file round-trips and rejects a mismatched vocabulary") {
  auto vocab = gdec::testing::make_vocab(3, 64, "abc012");
  auto constraint = std::make_shared<FsmConstraint>("(a|b)+c[0-2]{2}", vocab);
  std::string dump = constraint->save();
  auto reloaded = FsmConstraint::load(dump, vocab);
  CHECK(reloaded->save() == dump);
  CHECK(reloaded->pattern() == constraint->pattern());
  REQUIRE(reloaded->index().num_states() == constraint->index().num_states());
  for (size_t q = 0; q < constraint->index().num_states(); ++q) {
    CHECK(reloaded->index().mask_for(static_cast<FsmStateId>(q)) ==
          constraint->index().mask_for(static_cast<FsmStateId>(q)));
  }

  auto other_vocab = gdec::testing::make_vocab(4, 64, "abc012");
  CHECK_THROWS_AS(FsmConstraint::load(dump, other_vocab), ValidationError);
}

TEST_CASE("language soundness: sequences admitted by masks match the regex") {
  // Walk random mask-admitted paths; on EOS the concatenation must match.
  Rng rng(31337);
  auto vocab = gdec::testing::make_vocab(11, 96, "abcdxyz019");
  int checked = 0;
  while (checked < 15) {
    std::string pattern = gdec::testing::random_regex(rng);
    std::regex ref;
    try {
      ref = std::regex(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
      continue;
    }
    auto constraint = std::make_shared<FsmConstraint>(pattern, vocab);
    ++checked;
    for (int walk = 0; walk < 30; ++walk) {
      auto state = constraint->start();
      std::string text;
      for (int step = 0; step < 40; ++step) {
        const TokenMask& mask = state->allowed_mask();
        size_t n = mask.popcount();
        if (n == 0) break;
        size_t pick = rng.next_below(n);
        TokenId tok = mask.next_set(0);
        for (size_t i = 0; i < pick; ++i) tok = mask.next_set(tok + 1);
        if (tok == vocab->eos_id()) {
          CAPTURE(pattern);
          CAPTURE(text);
          CHECK(std::regex_match(text, ref));
          break;
        }
        text += vocab->token(tok);
        state = state->advance(tok);
      }
    }
  }
}
