#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace uncttp {

struct Message {
    enum class Role { System, User };
    Role role = Role::User;
    std::string content;

    friend bool operator==(const Message&, const Message&) = default;
};

/// What a request is for. Real backends ignore it; the mock uses it to
/// script behaviour and the cache includes it in the key so that distinct
/// samples of the same prompt are stored separately.
struct RequestTag {
    std::string instance_id;
    /// no_label | right_label | wrong_label | icl | verify | score
    std::string purpose;
    /// Injected label (right/wrong settings) or proposed answer (verify).
    std::string injected;
    std::uint64_t sample_index = 0;
};

namespace purpose {
inline constexpr const char* kIcl = "icl";
inline constexpr const char* kVerify = "verify";
inline constexpr const char* kScore = "score";
}  // namespace purpose

struct CompletionRequest {
    std::string model_id;
    std::vector<Message> messages;
    /// 0 means greedy decoding.
    double temperature = 0.0;
    int max_tokens = 20;
    bool logprobs_wanted = false;
    std::optional<std::int64_t> seed_hint;
    std::optional<RequestTag> tag;
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
    /// Most likely alternatives at this position, including the chosen token.
    std::vector<std::pair<std::string, double>> top;
};

struct CompletionResponse {
    std::string text;
    std::optional<std::vector<TokenLogprob>> token_logprobs;
    nlohmann::json provider_meta = nlohmann::json::object();
};

/// Chat-completion backend. Implementations must be safe to call from
/// several threads at once.
class Provider {
public:
    virtual ~Provider() = default;

    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    /// Stable identity of the backend; part of every cache key.
    virtual std::string endpoint_id() const = 0;
    virtual bool supports_logprobs() const = 0;
};

/// Canonical form used for hashing; object keys are sorted.
nlohmann::json to_json(const CompletionRequest& request);
nlohmann::json to_json(const CompletionResponse& response);
CompletionResponse completion_response_from_json(const nlohmann::json& j);

}  // namespace uncttp
