#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "trajrec/errors.hpp"

namespace trajrec {

/// Connection settings for one model endpoint. The API key is named by
/// environment variable and read at call time, never stored.
struct ProviderConfig {
  std::string name;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  int timeout_seconds = 120;
  std::string api_key_env;
  int max_parallel_requests = 1;
};

struct ChatUsage {
  long long prompt_tokens = 0;
  long long completion_tokens = 0;
};

/// Minimal chat interface; implementations must be safe to call repeatedly
/// from a single thread.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string chat(const std::string& prompt, ChatUsage* usage = nullptr) = 0;
};

namespace detail {

inline void split_url(const std::string& url, std::string& base, std::string& path) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ProviderError("bad endpoint URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base = url;
    path = "/";
  } else {
    base = url.substr(0, path_start);
    path = url.substr(path_start);
  }
}

}  // namespace detail

/// Chat-completions client. Retries transient failures up to 3 attempts
/// with exponential backoff; an HTTP 200 whose body carries no message
/// content raises EmptyResponse without retry.
class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {}

  std::string name() const override { return config_.name; }

  int max_attempts = 3;
  double backoff_base_s = 1.0;
  std::function<void(double)> sleep_fn = [](double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  };

  std::string chat(const std::string& prompt, ChatUsage* usage = nullptr) override {
    std::string base, path;
    detail::split_url(config_.endpoint, base, path);

    nlohmann::json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_output_tokens;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    const std::string payload = body.dump();

    std::string last_error = "no attempts made";
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      if (attempt > 1) sleep_fn(backoff_base_s * std::pow(2.0, attempt - 2));
      httplib::Client cli(base);
      cli.set_connection_timeout(config_.timeout_seconds);
      cli.set_read_timeout(config_.timeout_seconds);
      httplib::Headers headers;
      if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
          throw ProviderError("environment variable " + config_.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
      auto res = cli.Post(path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) {
        const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
          last_error = "response is not valid JSON";
          continue;
        }
        const auto& choices = parsed.contains("choices") ? parsed["choices"] : nlohmann::json();
        if (!choices.is_array() || choices.empty() || !choices[0].contains("message") ||
            !choices[0]["message"].contains("content") ||
            !choices[0]["message"]["content"].is_string() ||
            choices[0]["message"]["content"].get<std::string>().empty())
          throw EmptyResponse("provider " + config_.name + " returned no message content");
        if (usage != nullptr && parsed.contains("usage")) {
          usage->prompt_tokens = parsed["usage"].value("prompt_tokens", 0LL);
          usage->completion_tokens = parsed["usage"].value("completion_tokens", 0LL);
        }
        return choices[0]["message"]["content"].get<std::string>();
      }
      last_error = "HTTP status " + std::to_string(res->status);
      if (res->status >= 400 && res->status < 500 && res->status != 429)
        throw ProviderError("provider " + config_.name + ": " + last_error + ": " + res->body);
    }
    throw ProviderError("provider " + config_.name + " failed after " +
                        std::to_string(max_attempts) + " attempts: " + last_error);
  }

 private:
  ProviderConfig config_;
};

/// Provider that replays a fixed sequence of completions; exhausting the
/// script raises EmptyResponse. Used for deterministic replay in tests.
class ScriptedProvider : public ChatProvider {
 public:
  explicit ScriptedProvider(std::vector<std::string> completions)
      : completions_(std::move(completions)) {}

  std::string name() const override { return "scripted"; }

  std::string chat(const std::string& prompt, ChatUsage* usage = nullptr) override {
    prompts.push_back(prompt);
    if (next_ >= completions_.size()) throw EmptyResponse("scripted provider exhausted");
    if (usage != nullptr) *usage = ChatUsage{};
    return completions_[next_++];
  }

  std::vector<std::string> prompts;  // every prompt seen, in call order

 private:
  std::vector<std::string> completions_;
  std::size_t next_ = 0;
};

}  // namespace trajrec
