#pragma once

// Local chat-completion server for wire tests. Each request body is recorded,
// mapped back to a ChatRequest (role recovered from the system text) and
// answered by a scripted backend.

#include <httplib.h>

#include <mutex>
#include <thread>

#include "deskagent/llm_gateway.hpp"

namespace testing {

struct CapturedRequest {
  nlohmann::json body;
  std::optional<deskagent::llm::RoleTag> role;
  std::size_t images = 0;
};

class StubServer {
 public:
  /// `status` other than 200 makes every reply an error with that status.
  explicit StubServer(std::unique_ptr<deskagent::llm::Backend> backend, int status = 200)
      : backend_(std::move(backend)), status_(status) {
    const auto prompts = deskagent::llm::PromptSet::defaults();
    for (const auto& name : prompts.names()) systems_.emplace_back(prompts.get(name).system, prompts.get(name).role);

    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::vector<CapturedRequest> captured() const {
    std::lock_guard<std::mutex> lock(mu_);
    return captured_;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    using namespace deskagent::llm;
    std::lock_guard<std::mutex> lock(mu_);
    CapturedRequest cap;
    cap.body = nlohmann::json::parse(req.body, nullptr, false);
    ChatRequest chat;
    if (cap.body.is_object() && cap.body.contains("messages")) {
      for (const auto& m : cap.body["messages"]) {
        Message msg{m.value("role", "") == "system" ? Speaker::System : Speaker::User, {}};
        for (const auto& part : m.value("content", nlohmann::json::array())) {
          if (part.value("type", "") == "text") msg.parts.push_back(TextPart{part.value("text", "")});
          else ++cap.images;
        }
        if (msg.speaker == Speaker::System && !msg.parts.empty())
          for (const auto& [text, role] : systems_)
            if (std::get<TextPart>(msg.parts[0]).text == text) cap.role = role;
        chat.messages.push_back(std::move(msg));
      }
    }
    captured_.push_back(cap);
    if (status_ != 200) {
      res.status = status_;
      res.set_content("stub failure", "text/plain");
      return;
    }
    chat.role = cap.role.value_or(RoleTag::Planner);
    std::string text;
    try {
      text = backend_->complete(chat);
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(e.what(), "text/plain");
      return;
    }
    nlohmann::json reply = {{"id", "stub"},
                            {"object", "chat.completion"},
                            {"choices", {{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", text}}},
                                          {"finish_reason", "stop"}}}}};
    res.set_content(reply.dump(), "application/json");
  }

  std::unique_ptr<deskagent::llm::Backend> backend_;
  int status_;
  std::vector<std::pair<std::string, deskagent::llm::RoleTag>> systems_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<CapturedRequest> captured_;
};

}  // namespace testing
