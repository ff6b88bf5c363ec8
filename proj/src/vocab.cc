#include "gdec/vocab.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gdec/error.h"
#include "gdec/support/encoding.h"
#include "gdec/support/rng.h"

namespace gdec {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::kUndefinedRule: return "UndefinedRule";
    case ErrorCode::kLeftRecursion: return "LeftRecursionUnsupported";
    case ErrorCode::kUnsupportedSchema: return "UnsupportedSchemaFeature";
    case ErrorCode::kGrammarTooAmbiguous: return "GrammarTooAmbiguous";
    case ErrorCode::kIllegalToken: return "IllegalToken";
    case ErrorCode::kDeadEnd: return "DeadEnd";
    case ErrorCode::kNotEnoughExemplars: return "NotEnoughExemplars";
    case ErrorCode::kDatasetError: return "DatasetError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kHttpError: return "HttpError";
    case ErrorCode::kSchemaRejected: return "SchemaRejected";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInternal: return "Internal";
  }
  return "Unknown";
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId eos_id)
    : tokens_(std::move(tokens)), eos_id_(eos_id) {
  if (tokens_.empty()) throw ValidationError("vocabulary has no tokens");
  if (eos_id_ < 0 || static_cast<size_t>(eos_id_) >= tokens_.size()) {
    throw ValidationError("eos_id " + std::to_string(eos_id_) + " out of range for " +
                          std::to_string(tokens_.size()) + " tokens");
  }
  bool any_nonempty = false;
  for (const auto& t : tokens_) {
    if (!t.empty()) {
      any_nonempty = true;
      break;
    }
  }
  if (!any_nonempty) throw ValidationError("vocabulary must contain at least one non-empty token");

  uint64_t h = 0x9ae16a3b2f90404full ^ tokens_.size();
  for (const auto& t : tokens_) {
    uint64_t th = 1469598103934665603ull;
    for (unsigned char c : t) th = (th ^ c) * 1099511628211ull;
    h = hash_mix(h, th);
  }
  fingerprint_ = hash_mix(h, static_cast<uint64_t>(eos_id_));
}

Vocabulary parse_vocabulary(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("vocabulary file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("eos_id") || !doc.contains("tokens")) {
    throw ParseError("vocabulary file must be an object with \"eos_id\" and \"tokens\"");
  }
  if (!doc["eos_id"].is_number_integer()) throw ParseError("\"eos_id\" must be an integer");
  if (!doc["tokens"].is_array()) throw ParseError("\"tokens\" must be an array");

  std::vector<std::string> tokens;
  tokens.reserve(doc["tokens"].size());
  for (const auto& entry : doc["tokens"]) {
    if (entry.is_string()) {
      tokens.push_back(entry.get<std::string>());
    } else if (entry.is_object() && entry.contains("b64") && entry["b64"].is_string() &&
               entry.size() == 1) {
      tokens.push_back(base64_decode(entry["b64"].get<std::string>()));
    } else {
      throw ParseError("token entry " + std::to_string(tokens.size()) +
                       " must be a string or {\"b64\": ...}");
    }
  }
  return Vocabulary(std::move(tokens), doc["eos_id"].get<TokenId>());
}

Vocabulary load_vocabulary(const std::string& path) {
  return parse_vocabulary(read_file(path));
}

std::string dump_vocabulary(const Vocabulary& vocab) {
  nlohmann::json doc;
  doc["eos_id"] = vocab.eos_id();
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : vocab.tokens()) {
    if (is_valid_utf8(t)) {
      tokens.push_back(t);
    } else {
      tokens.push_back(nlohmann::json{{"b64", base64_encode(t)}});
    }
  }
  doc["tokens"] = std::move(tokens);
  return doc.dump(2) + "\n";
}

void write_vocabulary(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << dump_vocabulary(vocab);
}

}  // namespace gdec
