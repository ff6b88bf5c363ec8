#include "gdec/char_enforcer.h"

#include "gdec/error.h"

namespace gdec {

namespace {

bool is_ws(uint8_t b) { return b == ' ' || b == '\t' || b == '\n' || b == '\r'; }
bool is_digit(uint8_t b) { return b >= '0' && b <= '9'; }
bool is_hex(uint8_t b) {
  return is_digit(b) || (b >= 'a' && b <= 'f') || (b >= 'A' && b <= 'F');
}

}  // namespace

const Schema* CharParserState::expected_value() const {
  if (frames_.empty()) return root_.get();
  const Frame& top = frames_.back();
  if (top.node->kind == Schema::Kind::kObject) {
    return &top.node->properties[top.completed].second;
  }
  return &top.node->items.front();
}

void CharParserState::finish_value() {
  partial_.clear();
  scalar_pos_ = 0;
  literal_ = nullptr;
  allow_close_ = false;
  if (frames_.empty()) {
    mode_ = Mode::kDone;
    return;
  }
  ++frames_.back().completed;
  mode_ = Mode::kAfterValue;
}

bool CharParserState::dispatch(uint8_t byte) {
  switch (mode_) {
    case Mode::kExpectValue: {
      if (is_ws(byte)) return true;
      if (allow_close_ && byte == ']') {
        frames_.pop_back();
        finish_value();
        return true;
      }
      allow_close_ = false;
      const Schema* node = expected_value();
      switch (node->kind) {
        case Schema::Kind::kString:
          if (byte != '"') return false;
          mode_ = Mode::kInString;
          partial_.push_back(static_cast<char>(byte));
          return true;
        case Schema::Kind::kNumber:
          mode_ = Mode::kInNumber;
          partial_.push_back(static_cast<char>(byte));
          if (byte == '-') {
            num_state_ = NumState::kMinus;
          } else if (byte == '0') {
            num_state_ = NumState::kZero;
          } else if (is_digit(byte)) {
            num_state_ = NumState::kInt;
          } else {
            return false;
          }
          return true;
        case Schema::Kind::kBoolean:
          if (byte == 't') {
            literal_ = "true";
          } else if (byte == 'f') {
            literal_ = "false";
          } else {
            return false;
          }
          mode_ = Mode::kInLiteral;
          scalar_pos_ = 1;
          partial_.push_back(static_cast<char>(byte));
          return true;
        case Schema::Kind::kObject:
          if (byte != '{') return false;
          frames_.push_back({node, 0});
          if (node->properties.empty()) {
            mode_ = Mode::kAfterValue;
          } else {
            mode_ = Mode::kExpectKey;
            scalar_pos_ = 0;
          }
          return true;
        case Schema::Kind::kArray:
          if (byte != '[') return false;
          frames_.push_back({node, 0});
          mode_ = Mode::kExpectValue;
          allow_close_ = true;
          return true;
      }
      return false;
    }

    case Mode::kExpectKey: {
      if (scalar_pos_ == 0 && is_ws(byte)) return true;
      const Frame& top = frames_.back();
      const std::string& name = top.node->properties[top.completed].first;
      // expected literal: '"' name '"'
      uint8_t want;
      if (scalar_pos_ == 0) {
        want = '"';
      } else if (scalar_pos_ <= name.size()) {
        want = static_cast<uint8_t>(name[scalar_pos_ - 1]);
      } else {
        want = '"';
      }
      if (byte != want) return false;
      ++scalar_pos_;
      if (scalar_pos_ == name.size() + 2) {
        mode_ = Mode::kExpectColon;
        scalar_pos_ = 0;
      }
      return true;
    }

    case Mode::kExpectColon:
      if (is_ws(byte)) return true;
      if (byte != ':') return false;
      mode_ = Mode::kExpectValue;
      return true;

    case Mode::kAfterValue: {
      if (is_ws(byte)) return true;
      Frame& top = frames_.back();
      if (top.node->kind == Schema::Kind::kObject) {
        if (top.completed < top.node->properties.size()) {
          if (byte != ',') return false;
          mode_ = Mode::kExpectKey;
          scalar_pos_ = 0;
          return true;
        }
        if (byte != '}') return false;
        frames_.pop_back();
        finish_value();
        return true;
      }
      // array
      if (byte == ',') {
        mode_ = Mode::kExpectValue;
        allow_close_ = false;
        return true;
      }
      if (byte == ']') {
        frames_.pop_back();
        finish_value();
        return true;
      }
      return false;
    }

    case Mode::kInString:
      if (byte == '"') {
        finish_value();
        return true;
      }
      if (byte == '\\') {
        mode_ = Mode::kInStringEscape;
        partial_.push_back(static_cast<char>(byte));
        return true;
      }
      if (byte < 0x20) return false;  // raw control bytes need escaping
      partial_.push_back(static_cast<char>(byte));
      return true;

    case Mode::kInStringEscape:
      if (byte == '"' || byte == '\\' || byte == 'n' || byte == 't') {
        mode_ = Mode::kInString;
        partial_.push_back(static_cast<char>(byte));
        return true;
      }
      if (byte == 'u') {
        mode_ = Mode::kInStringUnicode;
        unicode_left_ = 4;
        partial_.push_back(static_cast<char>(byte));
        return true;
      }
      return false;

    case Mode::kInStringUnicode:
      if (!is_hex(byte)) return false;
      partial_.push_back(static_cast<char>(byte));
      if (--unicode_left_ == 0) mode_ = Mode::kInString;
      return true;

    case Mode::kInNumber: {
      NumState next = num_state_;
      bool consumed = true;
      switch (num_state_) {
        case NumState::kMinus:
          if (byte == '0') next = NumState::kZero;
          else if (is_digit(byte)) next = NumState::kInt;
          else consumed = false;
          break;
        case NumState::kZero:
          if (byte == '.') next = NumState::kFracStart;
          else if (byte == 'e' || byte == 'E') next = NumState::kExpStart;
          else consumed = false;  // leading zero: no more digits
          break;
        case NumState::kInt:
          if (is_digit(byte)) next = NumState::kInt;
          else if (byte == '.') next = NumState::kFracStart;
          else if (byte == 'e' || byte == 'E') next = NumState::kExpStart;
          else consumed = false;
          break;
        case NumState::kFracStart:
          if (is_digit(byte)) next = NumState::kFrac;
          else return false;  // "1." is no number prefix
          break;
        case NumState::kFrac:
          if (is_digit(byte)) next = NumState::kFrac;
          else if (byte == 'e' || byte == 'E') next = NumState::kExpStart;
          else consumed = false;
          break;
        case NumState::kExpStart:
          if (byte == '+' || byte == '-') next = NumState::kExpSign;
          else if (is_digit(byte)) next = NumState::kExp;
          else return false;
          break;
        case NumState::kExpSign:
          if (is_digit(byte)) next = NumState::kExp;
          else return false;
          break;
        case NumState::kExp:
          if (is_digit(byte)) next = NumState::kExp;
          else consumed = false;
          break;
        case NumState::kStart:
          return false;
      }
      if (consumed) {
        num_state_ = next;
        partial_.push_back(static_cast<char>(byte));
        return true;
      }
      // The number ends before this byte if it is already well formed;
      // re-dispatch the byte in the enclosing context.
      bool complete = num_state_ == NumState::kZero || num_state_ == NumState::kInt ||
                      num_state_ == NumState::kFrac || num_state_ == NumState::kExp;
      if (!complete) return false;
      num_state_ = NumState::kStart;
      finish_value();
      return dispatch(byte);
    }

    case Mode::kInLiteral: {
      if (byte != static_cast<uint8_t>(literal_[scalar_pos_])) return false;
      partial_.push_back(static_cast<char>(byte));
      ++scalar_pos_;
      if (literal_[scalar_pos_] == '\0') finish_value();
      return true;
    }

    case Mode::kDone:
      return is_ws(byte);
  }
  return false;
}

bool CharParserState::is_done() const {
  if (mode_ == Mode::kDone) return true;
  if (mode_ == Mode::kInNumber && frames_.empty()) {
    return num_state_ == NumState::kZero || num_state_ == NumState::kInt ||
           num_state_ == NumState::kFrac || num_state_ == NumState::kExp;
  }
  return false;
}

std::optional<CharParserState> CharParserState::advance(uint8_t byte) const {
  CharParserState next = *this;
  if (!next.dispatch(byte)) return std::nullopt;
  return next;
}

CharParserState CharParser::start() const {
  CharParserState state;
  state.root_ = schema_;
  state.mode_ = CharParserState::Mode::kExpectValue;
  return state;
}

std::optional<CharParserState> char_advance(const CharParserState& state, uint8_t byte) {
  return state.advance(byte);
}

TokenMask enforcer_mask(const CharParserState& state, const Vocabulary& vocab) {
  TokenMask mask(vocab.size());
  for (TokenId t = 0; t < static_cast<TokenId>(vocab.size()); ++t) {
    if (t == vocab.eos_id()) continue;
    const std::string& bytes = vocab.token(t);
    if (bytes.empty()) continue;
    std::optional<CharParserState> cur = state;
    for (unsigned char b : bytes) {
      cur = cur->advance(b);
      if (!cur) break;
    }
    if (cur) mask.set(t);
  }
  if (state.is_done()) mask.set(vocab.eos_id());
  return mask;
}

// ---------------------------------------------------------------------------
// Constraint wrapper
// ---------------------------------------------------------------------------

class CharConstraintState final : public ConstraintState {
 public:
  CharConstraintState(std::shared_ptr<const CharConstraint> owner, CharParserState state,
                      bool complete)
      : owner_(std::move(owner)), state_(std::move(state)), complete_(complete) {}

  const TokenMask& allowed_mask() override {
    if (!memo_) {
      memo_ = complete_ ? TokenMask(owner_->vocab().size())
                        : enforcer_mask(state_, owner_->vocab());
    }
    return *memo_;
  }

  ConstraintStatePtr advance(TokenId token) const override {
    if (complete_) throw IllegalTokenError("advance on a completed constraint");
    const Vocabulary& vocab = owner_->vocab();
    if (token < 0 || static_cast<size_t>(token) >= vocab.size()) {
      throw IllegalTokenError("token id " + std::to_string(token) + " out of range");
    }
    if (token == vocab.eos_id()) {
      if (!state_.is_done()) throw IllegalTokenError("EOS before the document is complete");
      return std::make_unique<CharConstraintState>(owner_, state_, true);
    }
    const std::string& bytes = vocab.token(token);
    if (bytes.empty()) throw IllegalTokenError("zero-length token " + std::to_string(token));
    std::optional<CharParserState> cur = state_;
    for (unsigned char b : bytes) {
      cur = cur->advance(b);
      if (!cur) {
        throw IllegalTokenError("token " + std::to_string(token) + " violates the format");
      }
    }
    return std::make_unique<CharConstraintState>(owner_, std::move(*cur), false);
  }

  ConstraintStatePtr branch() const override {
    auto copy = std::make_unique<CharConstraintState>(owner_, state_, complete_);
    copy->memo_ = memo_;
    return copy;
  }

  bool is_complete() const override { return complete_; }

  const CharParserState& parser_state() const { return state_; }

 private:
  std::shared_ptr<const CharConstraint> owner_;
  CharParserState state_;
  bool complete_;
  std::optional<TokenMask> memo_;
};

ConstraintStatePtr CharConstraint::start() const {
  return std::make_unique<CharConstraintState>(shared_from_this(), parser_.start(), false);
}

bool CharConstraint::matches(std::string_view text) const {
  std::optional<CharParserState> cur = parser_.start();
  for (unsigned char b : text) {
    cur = cur->advance(b);
    if (!cur) return false;
  }
  return cur->is_done();
}

}  // namespace gdec
