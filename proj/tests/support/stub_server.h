// In-process HTTP stub for client and eval integration tests.
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace gdec::testing {

class StubServer {
 public:
  StubServer() = default;

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("stub server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  ~StubServer() { stop(); }

  int port() const { return port_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

inline std::string chat_completion_body(const std::string& content, int prompt_tokens = 10,
                                        int completion_tokens = 5) {
  return std::string(R"({"id":"chatcmpl-stub","object":"chat.completion","choices":[{"index":0,)") +
         R"("message":{"role":"assistant","content":)" +
         nlohmann::json(content).dump() +
         R"(},"finish_reason":"stop"}],"usage":{"prompt_tokens":)" +
         std::to_string(prompt_tokens) + R"(,"completion_tokens":)" +
         std::to_string(completion_tokens) + R"(,"total_tokens":)" +
         std::to_string(prompt_tokens + completion_tokens) + "}}";
}

}  // namespace gdec::testing
