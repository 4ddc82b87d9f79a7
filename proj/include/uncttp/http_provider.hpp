#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <thread>

#include "uncttp/error.hpp"
#include "uncttp/provider.hpp"

namespace uncttp {

/// Failure worth retrying: connection problems, timeouts, 429 and 5xx.
class TransientError : public TransportError {
public:
    using TransportError::TransportError;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{500};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{8000};

    std::chrono::milliseconds delay_for(int attempt) const;
};

/// Runs `fn`, retrying TransientError up to `policy.max_retries` times with
/// exponential backoff. Any other exception propagates on first sight.
template <typename Fn, typename Sleep = void (*)(std::chrono::milliseconds)>
auto with_retry(const RetryPolicy& policy, Fn&& fn,
                Sleep sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
    -> decltype(fn()) {
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const TransientError& e) {
            if (attempt >= policy.max_retries) {
                throw TransportError(std::string(e.what()) + " (after " +
                                     std::to_string(attempt + 1) + " attempts)");
            }
            sleep(policy.delay_for(attempt));
        }
    }
}

struct HttpProviderConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    std::string endpoint = "https://api.openai.com/v1";
    std::string api_key;
    RetryPolicy retry;
    std::chrono::seconds timeout{60};
    bool logprobs_supported = true;
    int top_logprobs = 5;
};

/// OpenAI-style `POST {endpoint}/chat/completions` client.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string endpoint_id() const override { return config_.endpoint; }
    bool supports_logprobs() const override { return config_.logprobs_supported; }

    /// Request body as sent on the wire.
    nlohmann::json wire_body(const CompletionRequest& request) const;
    /// Parses a chat-completions response body.
    static CompletionResponse parse_body(const nlohmann::json& body, bool logprobs_wanted);

private:
    CompletionResponse attempt(const CompletionRequest& request);

    HttpProviderConfig config_;
    std::string origin_;
    std::string base_path_;
};

/// Splits `scheme://host[:port][/path]` into origin and path (no trailing
/// slash). Throws ConfigError on anything else.
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace uncttp
