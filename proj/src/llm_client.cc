#include "gdec/llm_client.h"

#include <chrono>
#include <cstdlib>
#include <semaphore>

#include <httplib.h>
#include <json.hpp>

#include "gdec/error.h"

namespace gdec {

using ordered_json = nlohmann::ordered_json;

void ChatRequest::validate() const {
  if (messages.empty()) throw ValidationError("chat request needs at least one message");
  for (size_t i = 0; i < messages.size(); ++i) {
    const std::string& role = messages[i].role;
    if (role != "system" && role != "user" && role != "assistant") {
      throw ValidationError("unknown role \"" + role + "\" at message " + std::to_string(i));
    }
    if (role == "system" && i != 0) {
      throw ValidationError("a system message must come first");
    }
  }
}

std::string serialize_chat_request(const ChatRequest& request,
                                   const std::string& backend_hint_field) {
  request.validate();
  ordered_json body;
  body["model"] = request.model;
  ordered_json messages = ordered_json::array();
  for (const auto& m : request.messages) {
    ordered_json msg;
    msg["role"] = m.role;
    msg["content"] = m.content;
    messages.push_back(std::move(msg));
  }
  body["messages"] = std::move(messages);
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (!request.response_schema_json.empty()) {
    ordered_json schema;
    try {
      schema = ordered_json::parse(request.response_schema_json);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("response schema is not valid JSON: ") + e.what());
    }
    ordered_json rf;
    rf["type"] = "json_schema";
    ordered_json js;
    js["name"] = request.response_schema_name;
    js["schema"] = std::move(schema);
    rf["json_schema"] = std::move(js);
    body["response_format"] = std::move(rf);
  }
  if (!request.guided_backend.empty()) {
    body[backend_hint_field] = request.guided_backend;
  }
  return body.dump();
}

ChatResponse parse_chat_response(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("chat response is not valid JSON: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw ParseError("chat response has no choices");
  }
  const auto& first = doc["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content")) {
    throw ParseError("chat response choice has no message content");
  }
  ChatResponse out;
  out.text = first["message"]["content"].is_null()
                 ? ""
                 : first["message"]["content"].get<std::string>();
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const auto& usage = doc["usage"];
    out.prompt_tokens = usage.value("prompt_tokens", int64_t{0});
    out.completion_tokens = usage.value("completion_tokens", int64_t{0});
    out.total_tokens = usage.value("total_tokens", int64_t{0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP plumbing
// ---------------------------------------------------------------------------

namespace {

bool is_timeout(httplib::Error err) {
  return err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
         err == httplib::Error::Write;
}

}  // namespace

struct ChatClient::Impl {
  explicit Impl(int max_in_flight) : gate(max_in_flight) {}
  mutable std::counting_semaphore<256> gate;
};

ChatClient::ChatClient(ChatClientConfig config) : config_(std::move(config)) {
  if (config_.max_in_flight < 1 || config_.max_in_flight > 256) {
    throw ValidationError("max_in_flight must be in [1, 256]");
  }
  impl_ = std::make_unique<Impl>(config_.max_in_flight);
}

ChatClient::~ChatClient() = default;

ChatResponse ChatClient::chat(const ChatRequest& request) const {
  const std::string body = serialize_chat_request(request, config_.backend_hint_field);

  impl_->gate.acquire();
  struct Release {
    std::counting_semaphore<256>& gate;
    ~Release() { gate.release(); }
  } release{impl_->gate};

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(0, config_.timeout_ms * 1000);
  client.set_read_timeout(0, config_.timeout_ms * 1000);
  client.set_write_timeout(0, config_.timeout_ms * 1000);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const auto start = std::chrono::steady_clock::now();
  httplib::Result result(nullptr, httplib::Error::Unknown);
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    result = client.Post(config_.path, headers, body, "application/json");
    if (result || !is_timeout(result.error())) break;
  }
  const double latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (!result) {
    if (is_timeout(result.error())) {
      throw TimeoutError("chat request timed out after " + std::to_string(config_.retries + 1) +
                         " attempts to " + config_.endpoint);
    }
    throw HttpError("transport failure talking to " + config_.endpoint + ": " +
                        httplib::to_string(result.error()),
                    0, "");
  }
  if (result->status == 400) {
    throw SchemaRejectedError("server rejected the request (HTTP 400)", result->body);
  }
  if (result->status < 200 || result->status >= 300) {
    throw HttpError("HTTP " + std::to_string(result->status) + " from " + config_.endpoint,
                    result->status, result->body);
  }
  ChatResponse response = parse_chat_response(result->body);
  response.latency_ms = latency_ms;
  return response;
}

// ---------------------------------------------------------------------------
// Remote logit source
// ---------------------------------------------------------------------------

namespace {

class RemoteLogitSource final : public LogitSource {
 public:
  RemoteLogitSource(std::string endpoint, size_t vocab_size, int timeout_ms)
      : endpoint_(std::move(endpoint)), vocab_size_(vocab_size), timeout_ms_(timeout_ms) {}

  std::vector<float> scores(const std::vector<TokenId>& history, const TokenMask*) override {
    nlohmann::json body;
    body["history"] = history;
    httplib::Client client(endpoint_);
    client.set_connection_timeout(0, timeout_ms_ * 1000);
    client.set_read_timeout(0, timeout_ms_ * 1000);
    auto result = client.Post("/logits", body.dump(), "application/json");
    if (!result) {
      if (is_timeout(result.error())) throw TimeoutError("logit request timed out");
      throw HttpError("transport failure talking to " + endpoint_ + ": " +
                          httplib::to_string(result.error()),
                      0, "");
    }
    if (result->status < 200 || result->status >= 300) {
      throw HttpError("HTTP " + std::to_string(result->status) + " from " + endpoint_,
                      result->status, result->body);
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(result->body);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("logit response is not valid JSON: ") + e.what());
    }
    if (!doc.contains("scores") || !doc["scores"].is_array()) {
      throw ParseError("logit response has no \"scores\" array");
    }
    auto scores = doc["scores"].get<std::vector<float>>();
    if (scores.size() != vocab_size_) {
      throw LengthMismatchError("server returned " + std::to_string(scores.size()) +
                                " scores for vocabulary of " + std::to_string(vocab_size_));
    }
    return scores;
  }

  size_t vocab_size() const override { return vocab_size_; }

 private:
  std::string endpoint_;
  size_t vocab_size_;
  int timeout_ms_;
};

}  // namespace

std::unique_ptr<LogitSource> make_remote_logit_source(const std::string& endpoint,
                                                      size_t vocab_size, int timeout_ms) {
  return std::make_unique<RemoteLogitSource>(endpoint, vocab_size, timeout_ms);
}

}  // namespace gdec
