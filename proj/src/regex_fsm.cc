#include "gdec/regex_fsm.h"

#include <algorithm>
#include <bitset>
#include <deque>
#include <map>
#include <memory>

#include <json.hpp>

#include "gdec/error.h"

namespace gdec {

namespace {

using ByteSet = std::bitset<256>;

constexpr int kMaxNfaStates = 50000;
constexpr int kMaxDfaStates = 100000;
constexpr int kMaxBoundedRepeat = 1000;

// ---------------------------------------------------------------------------
// Pattern AST
// ---------------------------------------------------------------------------

struct RegexNode;
using NodePtr = std::unique_ptr<RegexNode>;

struct RegexNode {
  enum class Kind { kEpsilon, kBytes, kConcat, kAlt, kRepeat };
  Kind kind = Kind::kEpsilon;
  ByteSet bytes;                  // kBytes
  std::vector<NodePtr> children;  // kConcat / kAlt / kRepeat (single child)
  int min = 0, max = 0;           // kRepeat; max == -1 means unbounded
};

NodePtr make_node(RegexNode::Kind kind) {
  auto n = std::make_unique<RegexNode>();
  n->kind = kind;
  return n;
}

NodePtr make_bytes(const ByteSet& set) {
  auto n = make_node(RegexNode::Kind::kBytes);
  n->bytes = set;
  return n;
}

ByteSet single_byte(uint8_t b) {
  ByteSet s;
  s.set(b);
  return s;
}

ByteSet range_bytes(uint8_t lo, uint8_t hi) {
  ByteSet s;
  for (int b = lo; b <= hi; ++b) s.set(static_cast<size_t>(b));
  return s;
}

ByteSet class_digits() { return range_bytes('0', '9'); }

ByteSet class_word() {
  ByteSet s = range_bytes('a', 'z') | range_bytes('A', 'Z') | class_digits();
  s.set('_');
  return s;
}

ByteSet class_space() {
  ByteSet s;
  for (char c : {' ', '\t', '\n', '\r', '\f', '\v'}) s.set(static_cast<uint8_t>(c));
  return s;
}

ByteSet any_but_newline() {
  ByteSet s;
  s.set();
  s.reset('\n');
  return s;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser over pattern bytes
// ---------------------------------------------------------------------------

class RegexParser {
 public:
  explicit RegexParser(const std::string& pattern) : src_(pattern) {}

  NodePtr parse() {
    NodePtr node = parse_alt();
    if (pos_ != src_.size()) {
      fail_syntax("unexpected '" + std::string(1, src_[pos_]) + "'");
    }
    return node;
  }

 private:
  [[noreturn]] void fail_syntax(const std::string& what) {
    throw SyntaxError("regex syntax error at offset " + std::to_string(pos_) + ": " + what);
  }
  [[noreturn]] void fail_unsupported(const std::string& what) {
    throw UnsupportedFeatureError("unsupported regex feature at offset " + std::to_string(pos_) +
                                  ": " + what);
  }

  bool eof() const { return pos_ >= src_.size(); }
  uint8_t peek() const { return static_cast<uint8_t>(src_[pos_]); }
  uint8_t take() { return static_cast<uint8_t>(src_[pos_++]); }

  NodePtr parse_alt() {
    std::vector<NodePtr> branches;
    branches.push_back(parse_concat());
    while (!eof() && peek() == '|') {
      take();
      branches.push_back(parse_concat());
    }
    if (branches.size() == 1) return std::move(branches[0]);
    auto node = make_node(RegexNode::Kind::kAlt);
    node->children = std::move(branches);
    return node;
  }

  NodePtr parse_concat() {
    std::vector<NodePtr> parts;
    while (!eof() && peek() != '|' && peek() != ')') {
      parts.push_back(parse_repeat());
    }
    if (parts.empty()) return make_node(RegexNode::Kind::kEpsilon);
    if (parts.size() == 1) return std::move(parts[0]);
    auto node = make_node(RegexNode::Kind::kConcat);
    node->children = std::move(parts);
    return node;
  }

  NodePtr parse_repeat() {
    NodePtr atom = parse_atom();
    while (!eof()) {
      int min, max;
      uint8_t c = peek();
      if (c == '*') {
        take();
        min = 0;
        max = -1;
      } else if (c == '+') {
        take();
        min = 1;
        max = -1;
      } else if (c == '?') {
        take();
        min = 0;
        max = 1;
      } else if (c == '{') {
        take();
        parse_bounds(min, max);
      } else {
        break;
      }
      if (!eof() && peek() == '?') fail_unsupported("lazy quantifier");
      auto node = make_node(RegexNode::Kind::kRepeat);
      node->min = min;
      node->max = max;
      node->children.push_back(std::move(atom));
      atom = std::move(node);
    }
    return atom;
  }

  void parse_bounds(int& min, int& max) {
    min = parse_int();
    if (eof()) fail_syntax("unterminated {m,n}");
    if (peek() == '}') {
      take();
      max = min;
      return;
    }
    if (take() != ',') fail_syntax("expected ',' in {m,n}");
    if (!eof() && peek() == '}') {
      take();
      max = -1;
      return;
    }
    max = parse_int();
    if (eof() || take() != '}') fail_syntax("expected '}' in {m,n}");
    if (max < min) fail_syntax("{m,n} with n < m");
  }

  int parse_int() {
    if (eof() || !isdigit(peek())) fail_syntax("expected number in {m,n}");
    long v = 0;
    while (!eof() && isdigit(peek())) {
      v = v * 10 + (take() - '0');
      if (v > kMaxBoundedRepeat) fail_syntax("repetition bound exceeds " +
                                             std::to_string(kMaxBoundedRepeat));
    }
    return static_cast<int>(v);
  }

  NodePtr parse_atom() {
    if (eof()) fail_syntax("pattern ends where an atom is expected");
    uint8_t c = take();
    switch (c) {
      case '(': {
        if (!eof() && peek() == '?') {
          take();
          if (eof()) fail_syntax("unterminated group");
          uint8_t q = take();
          if (q == ':') {
            // non-capturing group: plain grouping for this engine
          } else if (q == '=' || q == '!') {
            fail_unsupported("lookahead");
          } else if (q == '<') {
            fail_unsupported("lookbehind or named group");
          } else {
            fail_unsupported(std::string("group modifier '(?") + static_cast<char>(q) + "'");
          }
        }
        NodePtr inner = parse_alt();
        if (eof() || take() != ')') fail_syntax("missing ')'");
        return inner;
      }
      case ')':
        fail_syntax("unbalanced ')'");
      case '[':
        return parse_class();
      case '.':
        return make_bytes(any_but_newline());
      case '\\':
        return parse_escape();
      case '*':
      case '+':
      case '?':
        fail_syntax("quantifier with nothing to repeat");
      case '^':
      case '$':
        fail_unsupported("anchors");
      default:
        return make_bytes(single_byte(c));
    }
  }

  // Escapes valid both inside and outside classes. Returns true and fills
  // `set` when the escape denotes a byte or byte class.
  bool escaped_set(uint8_t c, ByteSet& set) {
    switch (c) {
      case 'd': set = class_digits(); return true;
      case 'D': set = ~class_digits(); return true;
      case 'w': set = class_word(); return true;
      case 'W': set = ~class_word(); return true;
      case 's': set = class_space(); return true;
      case 'S': set = ~class_space(); return true;
      case 'n': set = single_byte('\n'); return true;
      case 't': set = single_byte('\t'); return true;
      case 'r': set = single_byte('\r'); return true;
      case 'f': set = single_byte('\f'); return true;
      case 'v': set = single_byte('\v'); return true;
      case '0': set = single_byte(0); return true;
      case 'x': {
        if (pos_ + 2 > src_.size()) fail_syntax("\\x needs two hex digits");
        int hi = hex_digit(take());
        int lo = hex_digit(take());
        set = single_byte(static_cast<uint8_t>(hi * 16 + lo));
        return true;
      }
      default:
        break;
    }
    if (c >= '1' && c <= '9') fail_unsupported("backreference");
    if (c == 'b' || c == 'B') fail_unsupported("word boundary");
    if (c == 'A' || c == 'z' || c == 'Z') fail_unsupported("anchors");
    if (c == 'u' || c == 'p' || c == 'P') fail_unsupported("unicode escape");
    if (isalpha(c)) fail_unsupported(std::string("escape '\\") + static_cast<char>(c) + "'");
    // Escaped punctuation or any other byte: literal.
    set = single_byte(c);
    return true;
  }

  int hex_digit(uint8_t c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail_syntax("invalid hex digit");
  }

  NodePtr parse_escape() {
    if (eof()) fail_syntax("trailing backslash");
    ByteSet set;
    escaped_set(take(), set);
    return make_bytes(set);
  }

  NodePtr parse_class() {
    ByteSet set;
    bool negate = false;
    if (!eof() && peek() == '^') {
      take();
      negate = true;
    }
    bool first = true;
    while (true) {
      if (eof()) fail_syntax("unterminated character class");
      uint8_t c = take();
      if (c == ']' && !first) break;
      first = false;
      ByteSet item;
      bool single = false;
      uint8_t single_value = 0;
      if (c == '\\') {
        if (eof()) fail_syntax("trailing backslash in class");
        uint8_t e = take();
        escaped_set(e, item);
        if (item.count() == 1) {
          single = true;
          for (int b = 0; b < 256; ++b) {
            if (item.test(static_cast<size_t>(b))) single_value = static_cast<uint8_t>(b);
          }
        }
      } else {
        single = true;
        single_value = c;
        item = single_byte(c);
      }
      // Range: only between two single bytes, '-' not last.
      if (single && !eof() && peek() == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] != ']') {
        take();  // '-'
        uint8_t hi_raw = take();
        ByteSet hi_set;
        uint8_t hi;
        if (hi_raw == '\\') {
          if (eof()) fail_syntax("trailing backslash in class");
          escaped_set(take(), hi_set);
          if (hi_set.count() != 1) fail_syntax("class range endpoint must be a single byte");
          hi = 0;
          for (int b = 0; b < 256; ++b) {
            if (hi_set.test(static_cast<size_t>(b))) hi = static_cast<uint8_t>(b);
          }
        } else {
          hi = hi_raw;
        }
        if (hi < single_value) fail_syntax("reversed class range");
        item = range_bytes(single_value, hi);
      }
      set |= item;
    }
    if (negate) set = ~set;
    if (set.none()) fail_syntax("empty character class");
    return make_bytes(set);
  }

  const std::string& src_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Thompson NFA
// ---------------------------------------------------------------------------

struct NfaEdge {
  ByteSet bytes;
  int target;
};

struct Nfa {
  struct State {
    std::vector<NfaEdge> edges;
    std::vector<int> eps;
  };
  std::vector<State> states;

  int add_state() {
    if (states.size() >= kMaxNfaStates) {
      throw SyntaxError("pattern expands to too many states");
    }
    states.emplace_back();
    return static_cast<int>(states.size()) - 1;
  }
};

struct Fragment {
  int start;
  int accept;
};

class NfaBuilder {
 public:
  explicit NfaBuilder(Nfa& nfa) : nfa_(nfa) {}

  Fragment build(const RegexNode& node) {
    switch (node.kind) {
      case RegexNode::Kind::kEpsilon: {
        int s = nfa_.add_state();
        int a = nfa_.add_state();
        nfa_.states[static_cast<size_t>(s)].eps.push_back(a);
        return {s, a};
      }
      case RegexNode::Kind::kBytes: {
        int s = nfa_.add_state();
        int a = nfa_.add_state();
        nfa_.states[static_cast<size_t>(s)].edges.push_back({node.bytes, a});
        return {s, a};
      }
      case RegexNode::Kind::kConcat: {
        Fragment acc = build(*node.children.front());
        for (size_t i = 1; i < node.children.size(); ++i) {
          Fragment next = build(*node.children[i]);
          nfa_.states[static_cast<size_t>(acc.accept)].eps.push_back(next.start);
          acc.accept = next.accept;
        }
        return acc;
      }
      case RegexNode::Kind::kAlt: {
        int s = nfa_.add_state();
        int a = nfa_.add_state();
        for (const auto& child : node.children) {
          Fragment f = build(*child);
          nfa_.states[static_cast<size_t>(s)].eps.push_back(f.start);
          nfa_.states[static_cast<size_t>(f.accept)].eps.push_back(a);
        }
        return {s, a};
      }
      case RegexNode::Kind::kRepeat:
        return build_repeat(node);
    }
    throw SyntaxError("corrupt regex AST");
  }

 private:
  Fragment build_repeat(const RegexNode& node) {
    const RegexNode& child = *node.children.front();
    Fragment acc = build(*make_node(RegexNode::Kind::kEpsilon));
    for (int i = 0; i < node.min; ++i) {
      Fragment f = build(child);
      nfa_.states[static_cast<size_t>(acc.accept)].eps.push_back(f.start);
      acc.accept = f.accept;
    }
    if (node.max == -1) {
      Fragment f = build(child);
      int s = nfa_.add_state();
      int a = nfa_.add_state();
      nfa_.states[static_cast<size_t>(s)].eps.push_back(f.start);
      nfa_.states[static_cast<size_t>(s)].eps.push_back(a);
      nfa_.states[static_cast<size_t>(f.accept)].eps.push_back(f.start);
      nfa_.states[static_cast<size_t>(f.accept)].eps.push_back(a);
      nfa_.states[static_cast<size_t>(acc.accept)].eps.push_back(s);
      acc.accept = a;
    } else {
      for (int i = node.min; i < node.max; ++i) {
        Fragment f = build(child);
        int s = nfa_.add_state();
        int a = nfa_.add_state();
        nfa_.states[static_cast<size_t>(s)].eps.push_back(f.start);
        nfa_.states[static_cast<size_t>(s)].eps.push_back(a);
        nfa_.states[static_cast<size_t>(f.accept)].eps.push_back(a);
        nfa_.states[static_cast<size_t>(acc.accept)].eps.push_back(s);
        acc.accept = a;
      }
    }
    return acc;
  }

  Nfa& nfa_;
};

std::vector<int> eps_closure(const Nfa& nfa, std::vector<int> set) {
  std::vector<bool> seen(nfa.states.size(), false);
  std::vector<int> stack = set;
  for (int s : set) seen[static_cast<size_t>(s)] = true;
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (int t : nfa.states[static_cast<size_t>(s)].eps) {
      if (!seen[static_cast<size_t>(t)]) {
        seen[static_cast<size_t>(t)] = true;
        set.push_back(t);
        stack.push_back(t);
      }
    }
  }
  std::sort(set.begin(), set.end());
  return set;
}

}  // namespace

// ---------------------------------------------------------------------------
// compile_regex: parse -> NFA -> byte-class DFA -> prune
// ---------------------------------------------------------------------------

Fsm compile_regex(const std::string& pattern) {
  NodePtr ast = RegexParser(pattern).parse();

  Nfa nfa;
  NfaBuilder builder(nfa);
  Fragment root = builder.build(*ast);

  // Byte equivalence classes: group bytes by their membership signature over
  // every distinct edge set in the NFA.
  std::vector<ByteSet> edge_sets;
  {
    std::map<std::string, int> seen;
    for (const auto& st : nfa.states) {
      for (const auto& e : st.edges) {
        std::string key = e.bytes.to_string();
        if (seen.emplace(std::move(key), 0).second) edge_sets.push_back(e.bytes);
      }
    }
  }
  std::array<uint8_t, 256> class_of{};
  std::vector<uint8_t> class_rep;
  {
    std::map<std::string, int> signature_to_class;
    for (int b = 0; b < 256; ++b) {
      std::string sig(edge_sets.size(), '0');
      for (size_t i = 0; i < edge_sets.size(); ++i) {
        if (edge_sets[i].test(static_cast<size_t>(b))) sig[i] = '1';
      }
      auto [it, inserted] = signature_to_class.emplace(std::move(sig),
                                                       static_cast<int>(class_rep.size()));
      if (inserted) class_rep.push_back(static_cast<uint8_t>(b));
      class_of[static_cast<size_t>(b)] = static_cast<uint8_t>(it->second);
    }
  }
  const int num_classes = static_cast<int>(class_rep.size());

  // Subset construction, keyed by sorted NFA state sets.
  std::map<std::vector<int>, int> dfa_ids;
  std::vector<std::vector<int>> dfa_sets;
  std::vector<int32_t> table;
  std::vector<bool> accepting;
  std::deque<int> work;

  auto intern = [&](std::vector<int> set) -> int {
    auto [it, inserted] = dfa_ids.emplace(std::move(set), static_cast<int>(dfa_sets.size()));
    if (inserted) {
      if (dfa_sets.size() >= kMaxDfaStates) throw SyntaxError("pattern compiles to too many states");
      dfa_sets.push_back(it->first);
      table.resize(dfa_sets.size() * static_cast<size_t>(num_classes), kFsmDead);
      bool acc = std::binary_search(it->first.begin(), it->first.end(), root.accept);
      accepting.push_back(acc);
      work.push_back(it->second);
    }
    return it->second;
  };

  intern(eps_closure(nfa, {root.start}));
  while (!work.empty()) {
    int id = work.front();
    work.pop_front();
    std::vector<int> members = dfa_sets[static_cast<size_t>(id)];
    for (int c = 0; c < num_classes; ++c) {
      uint8_t rep = class_rep[static_cast<size_t>(c)];
      std::vector<int> moved;
      for (int s : members) {
        for (const auto& e : nfa.states[static_cast<size_t>(s)].edges) {
          if (e.bytes.test(rep)) moved.push_back(e.target);
        }
      }
      if (moved.empty()) continue;
      std::sort(moved.begin(), moved.end());
      moved.erase(std::unique(moved.begin(), moved.end()), moved.end());
      int target = intern(eps_closure(nfa, std::move(moved)));
      table[static_cast<size_t>(id) * static_cast<size_t>(num_classes) + static_cast<size_t>(c)] =
          target;
    }
  }

  // Prune states that cannot reach an accepting state.
  const int n = static_cast<int>(dfa_sets.size());
  std::vector<std::vector<int>> reverse_edges(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) {
    for (int c = 0; c < num_classes; ++c) {
      int32_t t = table[static_cast<size_t>(s) * static_cast<size_t>(num_classes) +
                        static_cast<size_t>(c)];
      if (t != kFsmDead) reverse_edges[static_cast<size_t>(t)].push_back(s);
    }
  }
  std::vector<bool> live(static_cast<size_t>(n), false);
  {
    std::deque<int> queue;
    for (int s = 0; s < n; ++s) {
      if (accepting[static_cast<size_t>(s)]) {
        live[static_cast<size_t>(s)] = true;
        queue.push_back(s);
      }
    }
    while (!queue.empty()) {
      int s = queue.front();
      queue.pop_front();
      for (int p : reverse_edges[static_cast<size_t>(s)]) {
        if (!live[static_cast<size_t>(p)]) {
          live[static_cast<size_t>(p)] = true;
          queue.push_back(p);
        }
      }
    }
  }

  Fsm fsm;
  if (!live[0]) {
    // Empty language: a single dead start state.
    fsm.num_states_ = 1;
    fsm.num_classes_ = 1;
    fsm.class_of_.fill(0);
    fsm.table_.assign(1, kFsmDead);
    fsm.accepting_.assign(1, false);
    return fsm;
  }

  // Renumber live states, start first, in BFS order over live transitions.
  std::vector<int32_t> new_id(static_cast<size_t>(n), kFsmDead);
  std::vector<int> order;
  {
    std::deque<int> queue{0};
    new_id[0] = 0;
    order.push_back(0);
    while (!queue.empty()) {
      int s = queue.front();
      queue.pop_front();
      for (int c = 0; c < num_classes; ++c) {
        int32_t t = table[static_cast<size_t>(s) * static_cast<size_t>(num_classes) +
                          static_cast<size_t>(c)];
        if (t != kFsmDead && live[static_cast<size_t>(t)] && new_id[static_cast<size_t>(t)] == kFsmDead) {
          new_id[static_cast<size_t>(t)] = static_cast<int32_t>(order.size());
          order.push_back(t);
          queue.push_back(t);
        }
      }
    }
  }

  fsm.num_states_ = static_cast<int32_t>(order.size());
  fsm.num_classes_ = num_classes;
  fsm.class_of_ = class_of;
  fsm.table_.assign(static_cast<size_t>(fsm.num_states_) * static_cast<size_t>(num_classes),
                    kFsmDead);
  fsm.accepting_.assign(static_cast<size_t>(fsm.num_states_), false);
  for (size_t i = 0; i < order.size(); ++i) {
    int old = order[i];
    fsm.accepting_[i] = accepting[static_cast<size_t>(old)];
    for (int c = 0; c < num_classes; ++c) {
      int32_t t = table[static_cast<size_t>(old) * static_cast<size_t>(num_classes) +
                        static_cast<size_t>(c)];
      if (t != kFsmDead && live[static_cast<size_t>(t)]) {
        fsm.table_[i * static_cast<size_t>(num_classes) + static_cast<size_t>(c)] =
            new_id[static_cast<size_t>(t)];
      }
    }
  }
  return fsm;
}

// ---------------------------------------------------------------------------
// Vocabulary index
// ---------------------------------------------------------------------------

FsmIndex build_index(const Fsm& fsm, const Vocabulary& vocab) {
  FsmIndex index;
  index.vocab_fingerprint_ = vocab.fingerprint();
  index.masks_.reserve(static_cast<size_t>(fsm.num_states()));
  index.eos_states_.resize(static_cast<size_t>(fsm.num_states()), false);
  const TokenId eos = vocab.eos_id();
  for (FsmStateId q = 0; q < fsm.num_states(); ++q) {
    TokenMask mask(vocab.size());
    for (TokenId t = 0; t < static_cast<TokenId>(vocab.size()); ++t) {
      if (t == eos) continue;
      const std::string& bytes = vocab.token(t);
      if (bytes.empty()) continue;  // zero-length tokens make no progress
      if (fsm.walk(q, bytes) != kFsmDead) mask.set(t);
    }
    if (fsm.accepting(q)) {
      mask.set(eos);
      index.eos_states_[static_cast<size_t>(q)] = true;
    }
    index.masks_.push_back(std::move(mask));
  }
  return index;
}

// ---------------------------------------------------------------------------
// Constraint wrapper
// ---------------------------------------------------------------------------

class FsmConstraintState final : public ConstraintState {
 public:
  FsmConstraintState(std::shared_ptr<const FsmConstraint> owner, FsmStateId state, bool complete)
      : owner_(std::move(owner)), state_(state), complete_(complete) {}

  const TokenMask& allowed_mask() override {
    if (complete_) return owner_->empty_mask_;
    return owner_->index().mask_for(state_);
  }

  ConstraintStatePtr advance(TokenId token) const override {
    if (complete_) throw IllegalTokenError("advance on a completed constraint");
    const TokenMask& mask = owner_->index().mask_for(state_);
    if (token < 0 || static_cast<size_t>(token) >= mask.size() || !mask.test(token)) {
      throw IllegalTokenError("token " + std::to_string(token) + " violates the mask");
    }
    if (token == owner_->vocab().eos_id()) {
      return std::make_unique<FsmConstraintState>(owner_, state_, true);
    }
    FsmStateId next = owner_->fsm().walk(state_, owner_->vocab().token(token));
    return std::make_unique<FsmConstraintState>(owner_, next, false);
  }

  ConstraintStatePtr branch() const override {
    return std::make_unique<FsmConstraintState>(owner_, state_, complete_);
  }

  bool is_complete() const override { return complete_; }

  FsmStateId fsm_state() const { return state_; }

 private:
  std::shared_ptr<const FsmConstraint> owner_;
  FsmStateId state_;
  bool complete_;
};

FsmConstraint::FsmConstraint(std::string pattern, VocabularyPtr vocab)
    : pattern_(std::move(pattern)),
      fsm_(compile_regex(pattern_)),
      index_(build_index(fsm_, *vocab)),
      vocab_(std::move(vocab)),
      empty_mask_(vocab_->size()) {}

FsmConstraint::FsmConstraint(std::string pattern, Fsm fsm, FsmIndex index, VocabularyPtr vocab)
    : pattern_(std::move(pattern)),
      fsm_(std::move(fsm)),
      index_(std::move(index)),
      vocab_(std::move(vocab)),
      empty_mask_(vocab_->size()) {}

ConstraintStatePtr FsmConstraint::start() const {
  return std::make_unique<FsmConstraintState>(shared_from_this(), fsm_.start(), false);
}

// ---------------------------------------------------------------------------
// Versioned index file
// ---------------------------------------------------------------------------

struct FsmSerializer {
  static nlohmann::json dump(const FsmConstraint& c) {
    nlohmann::json doc;
    doc["format"] = "gdec-fsm-index";
    doc["version"] = 1;
    doc["pattern"] = c.pattern_;
    doc["vocab_fingerprint"] = c.index_.vocab_fingerprint_;
    nlohmann::json fsm;
    fsm["num_states"] = c.fsm_.num_states_;
    fsm["num_classes"] = c.fsm_.num_classes_;
    fsm["class_of"] = std::vector<int>(c.fsm_.class_of_.begin(), c.fsm_.class_of_.end());
    fsm["table"] = c.fsm_.table_;
    std::vector<int> acc(c.fsm_.accepting_.begin(), c.fsm_.accepting_.end());
    fsm["accepting"] = acc;
    doc["fsm"] = std::move(fsm);
    nlohmann::json index;
    index["vocab_size"] =
        c.index_.masks_.empty() ? c.vocab_->size() : c.index_.masks_.front().size();
    std::vector<std::string> masks;
    masks.reserve(c.index_.masks_.size());
    for (const auto& m : c.index_.masks_) masks.push_back(m.to_hex());
    index["masks"] = std::move(masks);
    index["eos_states"] = std::vector<int>(c.index_.eos_states_.begin(), c.index_.eos_states_.end());
    doc["index"] = std::move(index);
    return doc;
  }

  static std::shared_ptr<FsmConstraint> load(const nlohmann::json& doc, VocabularyPtr vocab) {
    if (!doc.is_object() || doc.value("format", "") != "gdec-fsm-index") {
      throw ParseError("not a gdec-fsm-index file");
    }
    if (doc.value("version", 0) != 1) {
      throw ParseError("unsupported index version " + std::to_string(doc.value("version", 0)));
    }
    uint64_t fp = doc.at("vocab_fingerprint").get<uint64_t>();
    if (fp != vocab->fingerprint()) {
      throw ValidationError("index was built for a different vocabulary");
    }
    Fsm fsm;
    const auto& f = doc.at("fsm");
    fsm.num_states_ = f.at("num_states").get<int32_t>();
    fsm.num_classes_ = f.at("num_classes").get<int32_t>();
    auto classes = f.at("class_of").get<std::vector<int>>();
    if (classes.size() != 256) throw ParseError("class_of must have 256 entries");
    for (size_t i = 0; i < 256; ++i) fsm.class_of_[i] = static_cast<uint8_t>(classes[i]);
    fsm.table_ = f.at("table").get<std::vector<int32_t>>();
    if (fsm.table_.size() !=
        static_cast<size_t>(fsm.num_states_) * static_cast<size_t>(fsm.num_classes_)) {
      throw ParseError("transition table size mismatch");
    }
    auto acc = f.at("accepting").get<std::vector<int>>();
    if (acc.size() != static_cast<size_t>(fsm.num_states_)) {
      throw ParseError("accepting vector size mismatch");
    }
    fsm.accepting_.assign(acc.begin(), acc.end());

    FsmIndex index;
    index.vocab_fingerprint_ = fp;
    const auto& ix = doc.at("index");
    size_t vocab_size = ix.at("vocab_size").get<size_t>();
    if (vocab_size != vocab->size()) throw ValidationError("index vocab size mismatch");
    for (const auto& hex : ix.at("masks")) {
      index.masks_.push_back(TokenMask::from_hex(vocab_size, hex.get<std::string>()));
    }
    auto eos = ix.at("eos_states").get<std::vector<int>>();
    index.eos_states_.assign(eos.begin(), eos.end());
    if (index.masks_.size() != static_cast<size_t>(fsm.num_states_) ||
        index.eos_states_.size() != static_cast<size_t>(fsm.num_states_)) {
      throw ParseError("index state count mismatch");
    }
    return std::make_shared<FsmConstraint>(doc.at("pattern").get<std::string>(), std::move(fsm),
                                           std::move(index), std::move(vocab));
  }
};

std::string FsmConstraint::save() const { return FsmSerializer::dump(*this).dump(2) + "\n"; }

std::shared_ptr<FsmConstraint> FsmConstraint::load(const std::string& json_text,
                                                   VocabularyPtr vocab) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("index file is not valid JSON: ") + e.what());
  }
  return FsmSerializer::load(doc, std::move(vocab));
}

}  // namespace gdec
