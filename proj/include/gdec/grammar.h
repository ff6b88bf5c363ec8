/*!
 * \file gdec/grammar.h
 * \brief Context-free grammars with regex terminals, parsed from an
 *        EBNF-like surface syntax or generated from a JSON schema.
 *
 * Surface syntax (see docs/grammar.md):
 *
 *     # comment
 *     start: ws value ws
 *     value: object | "true" | /[0-9]+/
 *
 * Rules are `name: production (| production)*`, terminated by end of line
 * (a line whose continuation starts with '|' extends the previous rule) or
 * ';'. Items are rule names, quoted literals (escapes: \" \\ \n \t \r) or
 * /regex/ terminals compiled with the byte-level regex engine. The empty
 * literal "" is the explicit epsilon production.
 *
 * Left recursion, direct or through a cycle of nullable prefixes, is
 * rejected: the stack machine expands rules top-down.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gdec/json_schema.h"
#include "gdec/regex_fsm.h"

namespace gdec {

struct GrammarSymbol {
  enum class Kind : uint8_t { kTerminal, kRule };
  Kind kind;
  int32_t index;

  bool operator==(const GrammarSymbol&) const = default;
};

/// A production is a sequence of symbols; empty = epsilon.
using Production = std::vector<GrammarSymbol>;

struct TerminalDef {
  std::string pattern;  // regex source handed to compile_regex
  std::string display;  // how the terminal appeared in the source
};

class Grammar {
 public:
  int32_t start_rule() const { return start_rule_; }
  size_t num_rules() const { return rules_.size(); }
  size_t num_terminals() const { return terminals_.size(); }

  const std::string& rule_name(int32_t r) const { return rule_names_[static_cast<size_t>(r)]; }
  const std::vector<Production>& productions(int32_t r) const {
    return rules_[static_cast<size_t>(r)];
  }
  const TerminalDef& terminal(int32_t t) const { return terminals_[static_cast<size_t>(t)]; }

  int32_t find_rule(const std::string& name) const;  // -1 when absent

  /// Builder interface used by the parser and the schema converter.
  int32_t add_rule(const std::string& name);
  int32_t add_terminal(const std::string& pattern, const std::string& display);
  int32_t add_literal(const std::string& bytes);
  void add_production(int32_t rule, Production production);
  void set_start_rule(int32_t r) { start_rule_ = r; }

  /// Checks every invariant: references resolve, start exists, terminals
  /// compile, no left recursion. Throws the matching error.
  void validate() const;

 private:
  std::vector<std::string> rule_names_;
  std::vector<std::vector<Production>> rules_;
  std::vector<TerminalDef> terminals_;
  int32_t start_rule_ = 0;
};

Grammar parse_grammar(const std::string& text);
Grammar load_grammar(const std::string& path);

/// Grammar whose language is exactly the schema-conforming JSON documents,
/// with free whitespace between structural tokens and object keys fixed to
/// declaration order.
Grammar schema_to_grammar(const Schema& schema);

/// The same language as a single regex (the schema subset is non-recursive,
/// so every schema is expressible). Lets the FSM backend enforce schemas.
std::string schema_to_regex(const Schema& schema);

/// Substitutes rules that are non-recursive and referenced at most
/// `max_refs` times into their call sites; the language is unchanged.
/// Expansion is skipped where it would blow past internal size caps.
Grammar inline_rules(const Grammar& grammar, int max_refs = 4);

/// Escapes raw bytes into a regex that matches exactly those bytes.
std::string regex_escape_literal(const std::string& bytes);

}  // namespace gdec
