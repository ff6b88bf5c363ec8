#include "gdec/grammar.h"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gdec/error.h"

namespace gdec {

namespace {

bool is_ident_start(char c) { return isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string quote_literal(const std::string& bytes) {
  std::string out = "\"";
  for (char c : bytes) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string regex_escape_literal(const std::string& bytes) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : bytes) {
    if (isalnum(c)) {
      out.push_back(static_cast<char>(c));
    } else if (c >= 0x20 && c < 0x7f) {
      out.push_back('\\');
      out.push_back(static_cast<char>(c));
    } else {
      out += "\\x";
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xf]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grammar builder
// ---------------------------------------------------------------------------

int32_t Grammar::find_rule(const std::string& name) const {
  for (size_t i = 0; i < rule_names_.size(); ++i) {
    if (rule_names_[i] == name) return static_cast<int32_t>(i);
  }
  return -1;
}

int32_t Grammar::add_rule(const std::string& name) {
  int32_t existing = find_rule(name);
  if (existing >= 0) return existing;
  rule_names_.push_back(name);
  rules_.emplace_back();
  return static_cast<int32_t>(rule_names_.size()) - 1;
}

int32_t Grammar::add_terminal(const std::string& pattern, const std::string& display) {
  for (size_t i = 0; i < terminals_.size(); ++i) {
    if (terminals_[i].pattern == pattern) return static_cast<int32_t>(i);
  }
  terminals_.push_back({pattern, display});
  return static_cast<int32_t>(terminals_.size()) - 1;
}

int32_t Grammar::add_literal(const std::string& bytes) {
  return add_terminal(regex_escape_literal(bytes), quote_literal(bytes));
}

void Grammar::add_production(int32_t rule, Production production) {
  rules_[static_cast<size_t>(rule)].push_back(std::move(production));
}

void Grammar::validate() const {
  if (rules_.empty()) throw SyntaxError("grammar defines no rules");
  if (start_rule_ < 0 || static_cast<size_t>(start_rule_) >= rules_.size()) {
    throw ValidationError("start rule id out of range");
  }
  for (size_t r = 0; r < rules_.size(); ++r) {
    if (rules_[r].empty()) {
      throw UndefinedRuleError("rule \"" + rule_names_[r] + "\" is referenced but never defined");
    }
    for (const auto& prod : rules_[r]) {
      for (const auto& sym : prod) {
        if (sym.kind == GrammarSymbol::Kind::kRule) {
          if (sym.index < 0 || static_cast<size_t>(sym.index) >= rules_.size()) {
            throw ValidationError("rule reference out of range in \"" + rule_names_[r] + "\"");
          }
        } else if (sym.index < 0 || static_cast<size_t>(sym.index) >= terminals_.size()) {
          throw ValidationError("terminal reference out of range in \"" + rule_names_[r] + "\"");
        }
      }
    }
  }

  // Compile terminals (checks their syntax) and record nullability.
  std::vector<bool> terminal_nullable(terminals_.size(), false);
  for (size_t t = 0; t < terminals_.size(); ++t) {
    Fsm fsm;
    try {
      fsm = compile_regex(terminals_[t].pattern);
    } catch (const Error& e) {
      throw SyntaxError("terminal " + terminals_[t].display + ": " + e.what());
    }
    terminal_nullable[t] = fsm.num_states() > 0 && fsm.accepting(fsm.start());
  }

  // Rule nullability, least fixpoint.
  std::vector<bool> rule_nullable(rules_.size(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t r = 0; r < rules_.size(); ++r) {
      if (rule_nullable[r]) continue;
      for (const auto& prod : rules_[r]) {
        bool all_nullable = true;
        for (const auto& sym : prod) {
          bool n = sym.kind == GrammarSymbol::Kind::kRule
                       ? rule_nullable[static_cast<size_t>(sym.index)]
                       : terminal_nullable[static_cast<size_t>(sym.index)];
          if (!n) {
            all_nullable = false;
            break;
          }
        }
        if (all_nullable) {
          rule_nullable[r] = true;
          changed = true;
          break;
        }
      }
    }
  }

  // Left recursion (including cycles through nullable prefixes): the stack
  // machine expands rules top-down, so any leftmost cycle would not
  // terminate. Build the leftmost-reachability graph, then DFS for cycles.
  std::vector<std::set<int32_t>> leftmost(rules_.size());
  for (size_t r = 0; r < rules_.size(); ++r) {
    for (const auto& prod : rules_[r]) {
      for (const auto& sym : prod) {
        if (sym.kind == GrammarSymbol::Kind::kRule) {
          leftmost[r].insert(sym.index);
          if (!rule_nullable[static_cast<size_t>(sym.index)]) break;
        } else {
          if (!terminal_nullable[static_cast<size_t>(sym.index)]) break;
        }
      }
    }
  }
  std::vector<int> color(rules_.size(), 0);  // 0 untouched, 1 on stack, 2 done
  std::vector<int32_t> path;
  auto dfs = [&](auto&& self, int32_t r) -> void {
    color[static_cast<size_t>(r)] = 1;
    path.push_back(r);
    for (int32_t next : leftmost[static_cast<size_t>(r)]) {
      if (color[static_cast<size_t>(next)] == 1) {
        std::string cycle;
        auto it = std::find(path.begin(), path.end(), next);
        for (; it != path.end(); ++it) cycle += rule_names_[static_cast<size_t>(*it)] + " -> ";
        cycle += rule_names_[static_cast<size_t>(next)];
        throw LeftRecursionError("left recursion is not supported: " + cycle);
      }
      if (color[static_cast<size_t>(next)] == 0) self(self, next);
    }
    path.pop_back();
    color[static_cast<size_t>(r)] = 2;
  };
  for (size_t r = 0; r < rules_.size(); ++r) {
    if (color[r] == 0) dfs(dfs, static_cast<int32_t>(r));
  }
}

// ---------------------------------------------------------------------------
// Surface-syntax parser
// ---------------------------------------------------------------------------

namespace {

struct GrammarToken {
  enum class Kind { kIdent, kColon, kPipe, kSemi, kString, kRegex, kNewline, kEnd };
  Kind kind;
  std::string text;
  size_t line;
};

class GrammarLexer {
 public:
  explicit GrammarLexer(const std::string& src) : src_(src) { advance(); }

  const GrammarToken& peek() const { return current_; }

  GrammarToken take() {
    GrammarToken t = current_;
    advance();
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw SyntaxError("grammar line " + std::to_string(line_) + ": " + what);
  }

  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
    if (pos_ >= src_.size()) {
      current_ = {GrammarToken::Kind::kEnd, "", line_};
      return;
    }
    char c = src_[pos_];
    size_t line = line_;
    if (c == '\n') {
      ++pos_;
      ++line_;
      current_ = {GrammarToken::Kind::kNewline, "", line};
      return;
    }
    if (c == ':') {
      ++pos_;
      current_ = {GrammarToken::Kind::kColon, ":", line};
      return;
    }
    if (c == '|') {
      ++pos_;
      current_ = {GrammarToken::Kind::kPipe, "|", line};
      return;
    }
    if (c == ';') {
      ++pos_;
      current_ = {GrammarToken::Kind::kSemi, ";", line};
      return;
    }
    if (c == '"') {
      ++pos_;
      std::string text;
      while (true) {
        if (pos_ >= src_.size() || src_[pos_] == '\n') fail("unterminated string literal");
        char d = src_[pos_++];
        if (d == '"') break;
        if (d == '\\') {
          if (pos_ >= src_.size()) fail("unterminated escape in literal");
          char e = src_[pos_++];
          switch (e) {
            case '"': text.push_back('"'); break;
            case '\\': text.push_back('\\'); break;
            case 'n': text.push_back('\n'); break;
            case 't': text.push_back('\t'); break;
            case 'r': text.push_back('\r'); break;
            default: fail(std::string("unsupported escape '\\") + e + "' in literal");
          }
        } else {
          text.push_back(d);
        }
      }
      current_ = {GrammarToken::Kind::kString, text, line};
      return;
    }
    if (c == '/') {
      ++pos_;
      std::string pattern;
      while (true) {
        if (pos_ >= src_.size() || src_[pos_] == '\n') fail("unterminated /regex/ terminal");
        char d = src_[pos_++];
        if (d == '/') break;
        if (d == '\\') {
          if (pos_ >= src_.size()) fail("unterminated escape in regex terminal");
          char e = src_[pos_++];
          if (e == '/') {
            pattern.push_back('/');
          } else {
            pattern.push_back('\\');
            pattern.push_back(e);
          }
        } else {
          pattern.push_back(d);
        }
      }
      current_ = {GrammarToken::Kind::kRegex, pattern, line};
      return;
    }
    if (is_ident_start(c)) {
      std::string name;
      while (pos_ < src_.size() && is_ident_char(src_[pos_])) name.push_back(src_[pos_++]);
      current_ = {GrammarToken::Kind::kIdent, name, line};
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  const std::string& src_;
  size_t pos_ = 0;
  size_t line_ = 1;
  GrammarToken current_{GrammarToken::Kind::kEnd, "", 1};
};

}  // namespace

Grammar parse_grammar(const std::string& text) {
  GrammarLexer lex(text);
  Grammar g;
  std::set<int32_t> defined;

  auto skip_newlines = [&] {
    while (lex.peek().kind == GrammarToken::Kind::kNewline) lex.take();
  };

  skip_newlines();
  while (lex.peek().kind != GrammarToken::Kind::kEnd) {
    GrammarToken name = lex.take();
    if (name.kind != GrammarToken::Kind::kIdent) {
      throw SyntaxError("grammar line " + std::to_string(name.line) + ": expected rule name");
    }
    if (lex.peek().kind != GrammarToken::Kind::kColon) {
      throw SyntaxError("grammar line " + std::to_string(name.line) + ": expected ':' after \"" +
                        name.text + "\"");
    }
    lex.take();
    skip_newlines();

    int32_t rule = g.add_rule(name.text);
    if (!defined.insert(rule).second) {
      throw SyntaxError("grammar line " + std::to_string(name.line) + ": rule \"" + name.text +
                        "\" defined twice");
    }

    std::vector<Production> productions;
    Production items;
    size_t raw_items = 0;
    auto finish_production = [&] {
      if (raw_items == 0) {
        throw SyntaxError("grammar line " + std::to_string(name.line) +
                          ": empty production in \"" + name.text +
                          "\"; write \"\" for an explicit epsilon");
      }
      productions.push_back(std::move(items));
      items.clear();
      raw_items = 0;
    };

    bool rule_done = false;
    while (!rule_done) {
      const GrammarToken& t = lex.peek();
      switch (t.kind) {
        case GrammarToken::Kind::kIdent:
          items.push_back({GrammarSymbol::Kind::kRule, g.add_rule(t.text)});
          ++raw_items;
          lex.take();
          break;
        case GrammarToken::Kind::kString: {
          if (!t.text.empty()) {
            items.push_back({GrammarSymbol::Kind::kTerminal, g.add_literal(t.text)});
          }
          ++raw_items;  // "" counts as an explicit epsilon item
          lex.take();
          break;
        }
        case GrammarToken::Kind::kRegex:
          items.push_back({GrammarSymbol::Kind::kTerminal,
                           g.add_terminal(t.text, "/" + t.text + "/")});
          ++raw_items;
          lex.take();
          break;
        case GrammarToken::Kind::kPipe:
          finish_production();
          lex.take();
          skip_newlines();
          break;
        case GrammarToken::Kind::kSemi:
          lex.take();
          rule_done = true;
          break;
        case GrammarToken::Kind::kNewline:
          skip_newlines();
          if (lex.peek().kind == GrammarToken::Kind::kPipe) break;  // continuation line
          rule_done = true;
          break;
        case GrammarToken::Kind::kEnd:
          rule_done = true;
          break;
        case GrammarToken::Kind::kColon:
          throw SyntaxError("grammar line " + std::to_string(t.line) +
                            ": unexpected ':' (missing newline or ';' before a new rule?)");
      }
    }
    finish_production();
    for (auto& p : productions) g.add_production(rule, std::move(p));
    skip_newlines();
  }

  if (g.num_rules() == 0) throw SyntaxError("grammar defines no rules");
  g.set_start_rule(0);
  g.validate();
  return g;
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grammar(buf.str());
}

// ---------------------------------------------------------------------------
// JSON schema -> grammar / regex
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kWsPattern = "[ \\t\\n\\r]*";
constexpr const char* kStringPattern =
    "\"([^\\x00-\\x1f\"\\\\]|\\\\([\"\\\\nt]|u[0-9a-fA-F]{4}))*\"";
constexpr const char* kNumberPattern = "-?(0|[1-9][0-9]*)(\\.[0-9]+)?([eE][+-]?[0-9]+)?";

std::string sanitize_name(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    out.push_back(is_ident_char(c) ? c : '_');
  }
  if (out.empty() || !is_ident_start(out[0])) out = "p_" + out;
  return out;
}

class SchemaGrammarBuilder {
 public:
  explicit SchemaGrammarBuilder(Grammar& g) : g_(g) {
    ws_ = g_.add_terminal(kWsPattern, "/[ \\t\\n\\r]*/");
  }

  void build(const Schema& schema) {
    int32_t root = g_.add_rule("root");
    g_.set_start_rule(root);
    int32_t value = emit(schema, "value");
    g_.add_production(root, {{GrammarSymbol::Kind::kTerminal, ws_},
                             {GrammarSymbol::Kind::kRule, value},
                             {GrammarSymbol::Kind::kTerminal, ws_}});
  }

 private:
  GrammarSymbol ws_sym() const { return {GrammarSymbol::Kind::kTerminal, ws_}; }
  GrammarSymbol lit(const std::string& bytes) {
    return {GrammarSymbol::Kind::kTerminal, g_.add_literal(bytes)};
  }

  int32_t fresh_rule(const std::string& base) {
    std::string name = sanitize_name(base);
    std::string candidate = name;
    int counter = 2;
    while (g_.find_rule(candidate) >= 0) candidate = name + "_" + std::to_string(counter++);
    return g_.add_rule(candidate);
  }

  int32_t emit(const Schema& node, const std::string& path) {
    int32_t rule = fresh_rule(path);
    switch (node.kind) {
      case Schema::Kind::kString:
        g_.add_production(rule, {{GrammarSymbol::Kind::kTerminal,
                                  g_.add_terminal(kStringPattern, "/json-string/")}});
        break;
      case Schema::Kind::kNumber:
        g_.add_production(rule, {{GrammarSymbol::Kind::kTerminal,
                                  g_.add_terminal(kNumberPattern, "/json-number/")}});
        break;
      case Schema::Kind::kBoolean:
        g_.add_production(rule, {lit("true")});
        g_.add_production(rule, {lit("false")});
        break;
      case Schema::Kind::kObject: {
        Production p;
        p.push_back(lit("{"));
        p.push_back(ws_sym());
        for (size_t i = 0; i < node.properties.size(); ++i) {
          const auto& [key, child] = node.properties[i];
          if (i > 0) {
            p.push_back(lit(","));
            p.push_back(ws_sym());
          }
          p.push_back(lit("\"" + key + "\""));
          p.push_back(ws_sym());
          p.push_back(lit(":"));
          p.push_back(ws_sym());
          int32_t child_rule = emit(child, path + "_" + key);
          p.push_back({GrammarSymbol::Kind::kRule, child_rule});
          p.push_back(ws_sym());
        }
        p.push_back(lit("}"));
        g_.add_production(rule, std::move(p));
        break;
      }
      case Schema::Kind::kArray: {
        // Left-factored so live configurations stay flat in nesting depth:
        //   rule: "[" WS rest;  rest: "]" | elems WS "]"
        //   elems: item tail;   tail: "" | WS "," WS elems
        int32_t item = emit(node.items.front(), path + "_item");
        int32_t rest = fresh_rule(path + "_rest");
        int32_t elems = fresh_rule(path + "_items");
        int32_t tail = fresh_rule(path + "_items_tail");
        g_.add_production(rule, {lit("["), ws_sym(), {GrammarSymbol::Kind::kRule, rest}});
        g_.add_production(rest, {lit("]")});
        g_.add_production(rest, {{GrammarSymbol::Kind::kRule, elems}, ws_sym(), lit("]")});
        g_.add_production(elems, {{GrammarSymbol::Kind::kRule, item},
                                  {GrammarSymbol::Kind::kRule, tail}});
        g_.add_production(tail, {});
        g_.add_production(tail, {ws_sym(), lit(","), ws_sym(),
                                 {GrammarSymbol::Kind::kRule, elems}});
        break;
      }
    }
    return rule;
  }

  Grammar& g_;
  int32_t ws_;
};

std::string schema_value_regex(const Schema& node) {
  const std::string ws = kWsPattern;
  switch (node.kind) {
    case Schema::Kind::kString:
      return std::string("(") + kStringPattern + ")";
    case Schema::Kind::kNumber:
      return std::string("(") + kNumberPattern + ")";
    case Schema::Kind::kBoolean:
      return "(true|false)";
    case Schema::Kind::kObject: {
      std::string out = regex_escape_literal("{") + ws;
      for (size_t i = 0; i < node.properties.size(); ++i) {
        const auto& [key, child] = node.properties[i];
        if (i > 0) out += regex_escape_literal(",") + ws;
        out += regex_escape_literal("\"" + key + "\"") + ws + regex_escape_literal(":") + ws;
        out += schema_value_regex(child);
        out += ws;
      }
      out += regex_escape_literal("}");
      return "(" + out + ")";
    }
    case Schema::Kind::kArray: {
      std::string v = schema_value_regex(node.items.front());
      std::string out = regex_escape_literal("[") + ws;
      out += "(" + v + "(" + ws + regex_escape_literal(",") + ws + v + ")*" + ws + ")?";
      out += regex_escape_literal("]");
      return "(" + out + ")";
    }
  }
  throw ValidationError("corrupt schema node");
}

}  // namespace

Grammar schema_to_grammar(const Schema& schema) {
  Grammar g;
  SchemaGrammarBuilder builder(g);
  builder.build(schema);
  g.validate();
  return g;
}

std::string schema_to_regex(const Schema& schema) {
  return std::string(kWsPattern) + schema_value_regex(schema) + kWsPattern;
}

// ---------------------------------------------------------------------------
// Rule inlining
// ---------------------------------------------------------------------------

namespace {

constexpr size_t kMaxProductionsPerRule = 256;
constexpr size_t kMaxProductionLength = 512;

std::vector<int> count_references(const std::vector<std::vector<Production>>& rules) {
  std::vector<int> refs(rules.size(), 0);
  for (const auto& prods : rules) {
    for (const auto& p : prods) {
      for (const auto& sym : p) {
        if (sym.kind == GrammarSymbol::Kind::kRule) ++refs[static_cast<size_t>(sym.index)];
      }
    }
  }
  return refs;
}

std::vector<bool> recursive_rules(const std::vector<std::vector<Production>>& rules) {
  const size_t n = rules.size();
  // reach[r] = set of rules reachable from r through any position
  std::vector<std::set<int32_t>> reach(n);
  for (size_t r = 0; r < n; ++r) {
    for (const auto& p : rules[r]) {
      for (const auto& sym : p) {
        if (sym.kind == GrammarSymbol::Kind::kRule) reach[r].insert(sym.index);
      }
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t r = 0; r < n; ++r) {
      std::set<int32_t> next = reach[r];
      for (int32_t s : reach[r]) {
        next.insert(reach[static_cast<size_t>(s)].begin(), reach[static_cast<size_t>(s)].end());
      }
      if (next.size() != reach[r].size()) {
        reach[r] = std::move(next);
        changed = true;
      }
    }
  }
  std::vector<bool> recursive(n, false);
  for (size_t r = 0; r < n; ++r) {
    recursive[r] = reach[r].count(static_cast<int32_t>(r)) > 0;
  }
  return recursive;
}

}  // namespace

Grammar inline_rules(const Grammar& grammar, int max_refs) {
  grammar.validate();
  const size_t n = grammar.num_rules();
  std::vector<std::vector<Production>> rules(n);
  for (size_t r = 0; r < n; ++r) rules[r] = grammar.productions(static_cast<int32_t>(r));

  std::vector<bool> frozen(n, false);
  for (int pass = 0; pass < static_cast<int>(n) + 8; ++pass) {
    std::vector<int> refs = count_references(rules);
    std::vector<bool> recursive = recursive_rules(rules);
    int32_t candidate = -1;
    for (size_t r = 0; r < n; ++r) {
      if (static_cast<int32_t>(r) == grammar.start_rule()) continue;
      if (frozen[r] || recursive[r]) continue;
      if (refs[r] == 0 || refs[r] > max_refs) continue;
      candidate = static_cast<int32_t>(r);
      break;
    }
    if (candidate < 0) break;

    // Substitute `candidate` into every production that references it.
    const std::vector<Production>& body = rules[static_cast<size_t>(candidate)];
    bool aborted = false;
    std::vector<std::vector<Production>> next = rules;
    for (size_t r = 0; r < n && !aborted; ++r) {
      std::vector<Production> expanded;
      for (const auto& p : rules[r]) {
        std::vector<Production> partial{Production{}};
        for (const auto& sym : p) {
          if (sym.kind == GrammarSymbol::Kind::kRule && sym.index == candidate) {
            std::vector<Production> grown;
            for (const auto& prefix : partial) {
              for (const auto& alt : body) {
                Production combined = prefix;
                combined.insert(combined.end(), alt.begin(), alt.end());
                if (combined.size() > kMaxProductionLength) {
                  aborted = true;
                  break;
                }
                grown.push_back(std::move(combined));
              }
              if (aborted) break;
            }
            partial = std::move(grown);
          } else {
            for (auto& prefix : partial) prefix.push_back(sym);
          }
          if (aborted || partial.size() > kMaxProductionsPerRule) {
            aborted = true;
            break;
          }
        }
        if (aborted) break;
        for (auto& q : partial) expanded.push_back(std::move(q));
        if (expanded.size() > kMaxProductionsPerRule) {
          aborted = true;
          break;
        }
      }
      if (!aborted) next[r] = std::move(expanded);
    }
    if (aborted) {
      frozen[static_cast<size_t>(candidate)] = true;
      continue;
    }
    rules = std::move(next);
  }

  // Drop rules no longer reachable from the start rule.
  std::vector<bool> reachable(n, false);
  std::vector<int32_t> work{grammar.start_rule()};
  reachable[static_cast<size_t>(grammar.start_rule())] = true;
  while (!work.empty()) {
    int32_t r = work.back();
    work.pop_back();
    for (const auto& p : rules[static_cast<size_t>(r)]) {
      for (const auto& sym : p) {
        if (sym.kind == GrammarSymbol::Kind::kRule && !reachable[static_cast<size_t>(sym.index)]) {
          reachable[static_cast<size_t>(sym.index)] = true;
          work.push_back(sym.index);
        }
      }
    }
  }

  Grammar out;
  std::vector<int32_t> rule_map(n, -1);
  for (size_t r = 0; r < n; ++r) {
    if (reachable[r]) rule_map[r] = out.add_rule(grammar.rule_name(static_cast<int32_t>(r)));
  }
  std::vector<int32_t> term_map(grammar.num_terminals());
  for (size_t t = 0; t < grammar.num_terminals(); ++t) {
    const auto& def = grammar.terminal(static_cast<int32_t>(t));
    term_map[t] = out.add_terminal(def.pattern, def.display);
  }
  for (size_t r = 0; r < n; ++r) {
    if (!reachable[r]) continue;
    for (const auto& p : rules[r]) {
      Production mapped;
      mapped.reserve(p.size());
      for (const auto& sym : p) {
        if (sym.kind == GrammarSymbol::Kind::kRule) {
          mapped.push_back({sym.kind, rule_map[static_cast<size_t>(sym.index)]});
        } else {
          mapped.push_back({sym.kind, term_map[static_cast<size_t>(sym.index)]});
        }
      }
      out.add_production(rule_map[r], std::move(mapped));
    }
  }
  out.set_start_rule(rule_map[static_cast<size_t>(grammar.start_rule())]);
  out.validate();
  return out;
}

}  // namespace gdec
