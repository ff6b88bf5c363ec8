/*!
 * \file gdec/llm_client.h
 * \brief OpenAI-compatible chat-completions client.
 *
 * Credentials come from an environment variable only, never from config
 * files. The structured-output payload travels in `response_format`
 * (json_schema shape); the guided-decoding backend hint goes into a
 * configurable extension field, since servers disagree on its name.
 * An HTTP 400 maps to SchemaRejectedError with the server body attached
 * (servers running without schema fallback reject unsupported schemas this
 * way); timeouts retry up to `retries` times; other 4xx/5xx never retry.
 */
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gdec/decoder.h"

namespace gdec {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  /// JSON-schema text for response_format; empty = no structured output.
  std::string response_schema_json;
  std::string response_schema_name = "response";
  /// Backend hint value (e.g. "xgrammar", "outlines"); empty = omit.
  std::string guided_backend;

  void validate() const;  // non-empty messages; system message only first
};

struct ChatResponse {
  std::string text;
  int64_t prompt_tokens = 0;
  int64_t completion_tokens = 0;
  int64_t total_tokens = 0;
  double latency_ms = 0.0;
};

struct ChatClientConfig {
  std::string endpoint = "http://127.0.0.1:8000";  // scheme://host:port
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "GDEC_API_KEY";
  std::string backend_hint_field = "guided_decoding_backend";
  int timeout_ms = 30000;
  int retries = 2;        // timeout retries; 4xx/5xx never retry
  int max_in_flight = 4;  // concurrent request cap (<= 256)
};

/// Deterministic wire bytes for a request (golden-tested): insertion-ordered
/// JSON, compact dump.
std::string serialize_chat_request(const ChatRequest& request,
                                   const std::string& backend_hint_field);

/// Parses a chat-completions response body; throws ParseError on malformed
/// payloads.
ChatResponse parse_chat_response(const std::string& body);

class ChatClient {
 public:
  explicit ChatClient(ChatClientConfig config);
  ~ChatClient();

  /// Blocking call. Throws TimeoutError, HttpError, SchemaRejectedError.
  ChatResponse chat(const ChatRequest& request) const;

  const ChatClientConfig& config() const { return config_; }

 private:
  struct Impl;
  ChatClientConfig config_;
  std::unique_ptr<Impl> impl_;
};

/// Logit provider backed by a score endpoint: POST {"history": [ids]} to
/// `<endpoint>/logits`, response {"scores": [floats]} of vocabulary width.
std::unique_ptr<LogitSource> make_remote_logit_source(const std::string& endpoint,
                                                      size_t vocab_size, int timeout_ms = 30000);

}  // namespace gdec
