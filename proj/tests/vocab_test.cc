#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gdec/support/encoding.h"
#include "gdec/support/rng.h"
#include "gdec/token_mask.h"
#include "gdec/vocab.h"

using namespace gdec;

namespace {

std::string write_temp(const std::string& contents) {
  static int counter = 0;
  std::string path = "vocab_test_tmp_" + std::to_string(counter++) + ".json";
  std::ofstream out(path, std::ios::binary);
  out << contents;
  return path;
}

TokenMask random_mask(Rng& rng, size_t size) {
  TokenMask m(size);
  for (size_t i = 0; i < size; ++i) {
    if (rng.next_below(2)) m.set(static_cast<TokenId>(i));
  }
  return m;
}

}  // namespace

TEST_CASE("load_vocabulary: minimal well-formed file") {
  auto path = write_temp(R"({"eos_id": 2, "tokens": ["a", "b", "</s>"]})");
  Vocabulary v = load_vocabulary(path);
  CHECK(v.size() == 3);
  CHECK(v.eos_id() == 2);
  CHECK(v.token(0) == "a");
  CHECK(v.token(2) == "</s>");
  std::remove(path.c_str());
}

TEST_CASE("load_vocabulary: eos_id out of range") {
  auto path = write_temp(R"({"eos_id": 7, "tokens": ["a", "b", "c"]})");
  CHECK_THROWS_AS(load_vocabulary(path), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("load_vocabulary: long reference-style tokens survive byte-exact") {
  auto path = write_temp(
      R"({"eos_id": 2, "tokens": ["344.0321.DOR.2021_1630505603_page_623", "_page_", "</s>"]})");
  Vocabulary v = load_vocabulary(path);
  CHECK(v.token(0) == "344.0321.DOR.2021_1630505603_page_623");
  CHECK(v.token(1) == "_page_");
  std::remove(path.c_str());
}

TEST_CASE("load_vocabulary: malformed inputs") {
  CHECK_THROWS_AS(parse_vocabulary("not json"), ParseError);
  CHECK_THROWS_AS(parse_vocabulary(R"({"tokens": ["a"]})"), ParseError);
  CHECK_THROWS_AS(parse_vocabulary(R"({"eos_id": 0, "tokens": [42]})"), ParseError);
  CHECK_THROWS_AS(parse_vocabulary(R"({"eos_id": 0, "tokens": [{"raw": "x"}]})"), ParseError);
  CHECK_THROWS_AS(parse_vocabulary(R"({"eos_id": 0, "tokens": []})"), ValidationError);
  // all tokens empty
  CHECK_THROWS_AS(parse_vocabulary(R"({"eos_id": 0, "tokens": ["", ""]})"), ValidationError);
}

TEST_CASE("vocabulary round-trip is byte exact, including non-UTF-8 tokens") {
  Rng rng(42);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<std::string> tokens;
    size_t n = 2 + rng.next_below(20);
    for (size_t i = 0; i < n; ++i) {
      std::string t;
      size_t len = rng.next_below(8);
      for (size_t j = 0; j < len; ++j) {
        t.push_back(static_cast<char>(rng.next_below(256)));
      }
      tokens.push_back(t);
    }
    tokens.push_back("</s>");
    Vocabulary v(tokens, static_cast<TokenId>(tokens.size() - 1));
    Vocabulary reloaded = parse_vocabulary(dump_vocabulary(v));
    REQUIRE(reloaded.size() == v.size());
    for (size_t i = 0; i < v.size(); ++i) {
      CHECK(reloaded.token(static_cast<TokenId>(i)) == v.token(static_cast<TokenId>(i)));
    }
    CHECK(reloaded.eos_id() == v.eos_id());
    CHECK(reloaded.fingerprint() == v.fingerprint());
  }
}

TEST_CASE("base64 round-trip") {
  Rng rng(7);
  for (int iter = 0; iter < 200; ++iter) {
    std::string bytes;
    size_t len = rng.next_below(32);
    for (size_t i = 0; i < len; ++i) bytes.push_back(static_cast<char>(rng.next_below(256)));
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
  }
  CHECK_THROWS_AS(base64_decode("a"), ParseError);
  CHECK_THROWS_AS(base64_decode("!!!!"), ParseError);
}

TEST_CASE("mask_and: bitwise definition and identities") {
  TokenMask a(4), b(4);
  a.set(0); a.set(1); a.set(3);   // 1101
  b.set(0); b.set(2); b.set(3);   // 1011
  TokenMask c = mask_and(a, b);
  CHECK(c.test(0));
  CHECK_FALSE(c.test(1));
  CHECK_FALSE(c.test(2));
  CHECK(c.test(3));

  TokenMask ones(4, true), zeros(4);
  CHECK(mask_and(a, ones) == a);
  CHECK(mask_and(a, zeros) == zeros);
  CHECK_THROWS_AS(mask_and(a, TokenMask(5)), LengthMismatchError);
}

TEST_CASE("mask_and is associative, commutative, idempotent") {
  Rng rng(123);
  for (int iter = 0; iter < 100; ++iter) {
    size_t size = 1 + rng.next_below(300);
    TokenMask a = random_mask(rng, size);
    TokenMask b = random_mask(rng, size);
    TokenMask c = random_mask(rng, size);
    CHECK(mask_and(a, b) == mask_and(b, a));
    CHECK(mask_and(mask_and(a, b), c) == mask_and(a, mask_and(b, c)));
    CHECK(mask_and(a, a) == a);
  }
}

TEST_CASE("token mask iteration and hex round-trip") {
  Rng rng(5);
  for (int iter = 0; iter < 50; ++iter) {
    size_t size = 1 + rng.next_below(200);
    TokenMask m = random_mask(rng, size);
    CHECK(TokenMask::from_hex(size, m.to_hex()) == m);

    size_t seen = 0;
    for (TokenId t = m.next_set(0); t != -1; t = m.next_set(t + 1)) {
      CHECK(m.test(t));
      ++seen;
    }
    CHECK(seen == m.popcount());
  }
}
