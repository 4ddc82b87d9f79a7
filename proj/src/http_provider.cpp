#include "uncttp/http_provider.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>

namespace uncttp {

using nlohmann::json;

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
    const double ms = static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt);
    return std::chrono::milliseconds(
        static_cast<long long>(std::min(ms, static_cast<double>(max_delay.count()))));
}

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL lacks a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported URL scheme '" + scheme + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    std::string origin = url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    if (origin.size() <= scheme_end + 3) throw ConfigError("endpoint URL lacks a host: " + url);
    return {origin, path};
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    std::tie(origin_, base_path_) = split_url(config_.endpoint);
}

json HttpProvider::wire_body(const CompletionRequest& request) const {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role == Message::Role::System ? "system" : "user"},
                            {"content", m.content}});
    }
    json body{{"model", request.model_id},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (request.logprobs_wanted) {
        body["logprobs"] = true;
        body["top_logprobs"] = config_.top_logprobs;
    }
    if (request.seed_hint) body["seed"] = *request.seed_hint;
    return body;
}

CompletionResponse HttpProvider::parse_body(const json& body, bool logprobs_wanted) {
    CompletionResponse r;
    try {
        const auto& choice = body.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        r.text = content.is_null() ? std::string() : content.get<std::string>();
        if (logprobs_wanted) {
            if (!choice.contains("logprobs") || choice.at("logprobs").is_null() ||
                !choice.at("logprobs").contains("content")) {
                throw CapabilityError("endpoint returned no token log-probabilities");
            }
            std::vector<TokenLogprob> tokens;
            for (const auto& t : choice.at("logprobs").at("content")) {
                TokenLogprob tl{t.at("token").get<std::string>(), t.at("logprob").get<double>(), {}};
                if (t.contains("top_logprobs")) {
                    for (const auto& alt : t.at("top_logprobs")) {
                        tl.top.emplace_back(alt.at("token").get<std::string>(),
                                            alt.at("logprob").get<double>());
                    }
                }
                tokens.push_back(std::move(tl));
            }
            r.token_logprobs = std::move(tokens);
        }
        r.provider_meta = json::object();
        for (const char* key : {"id", "model", "usage", "system_fingerprint"}) {
            if (body.contains(key)) r.provider_meta[key] = body.at(key);
        }
        if (choice.contains("finish_reason")) r.provider_meta["finish_reason"] = choice.at("finish_reason");
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed completion response: ") + e.what());
    }
    return r;
}

CompletionResponse HttpProvider::attempt(const CompletionRequest& request) {
    httplib::Client client(origin_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(base_path_ + "/chat/completions", headers, wire_body(request).dump(),
                           "application/json");
    if (!res) {
        throw TransientError("request to " + config_.endpoint + " failed: " +
                             httplib::to_string(res.error()));
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
        throw AuthError("endpoint rejected credential (HTTP " + std::to_string(status) + ")");
    }
    if (status == 408 || status == 429 || status >= 500) {
        throw TransientError("HTTP " + std::to_string(status) + " from " + config_.endpoint);
    }
    if (status != 200) {
        throw TransportError("HTTP " + std::to_string(status) + " from " + config_.endpoint + ": " +
                             res->body.substr(0, 200));
    }
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw TransportError(std::string("response is not JSON: ") + e.what());
    }
    return parse_body(body, request.logprobs_wanted);
}

CompletionResponse HttpProvider::complete(const CompletionRequest& request) {
    if (request.logprobs_wanted && !config_.logprobs_supported) {
        throw CapabilityError("endpoint configured without log-probability support");
    }
    return with_retry(config_.retry, [&] { return attempt(request); });
}

}  // namespace uncttp
