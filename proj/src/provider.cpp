#include "uncttp/provider.hpp"

namespace uncttp {

using nlohmann::json;

json to_json(const CompletionRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role == Message::Role::System ? "system" : "user"},
                            {"content", m.content}});
    }
    json j{{"model", request.model_id},
           {"messages", std::move(messages)},
           {"temperature", request.temperature},
           {"max_tokens", request.max_tokens},
           {"logprobs", request.logprobs_wanted}};
    j["seed"] = request.seed_hint ? json(*request.seed_hint) : json(nullptr);
    if (request.tag) {
        j["tag"] = {{"instance_id", request.tag->instance_id},
                    {"purpose", request.tag->purpose},
                    {"injected", request.tag->injected},
                    {"sample_index", request.tag->sample_index}};
    } else {
        j["tag"] = nullptr;
    }
    return j;
}

json to_json(const CompletionResponse& response) {
    json j{{"text", response.text}, {"provider_meta", response.provider_meta}};
    if (response.token_logprobs) {
        json tokens = json::array();
        for (const auto& t : *response.token_logprobs) {
            json top = json::array();
            for (const auto& [tok, lp] : t.top) top.push_back({{"token", tok}, {"logprob", lp}});
            tokens.push_back({{"token", t.token}, {"logprob", t.logprob}, {"top", std::move(top)}});
        }
        j["token_logprobs"] = std::move(tokens);
    } else {
        j["token_logprobs"] = nullptr;
    }
    return j;
}

CompletionResponse completion_response_from_json(const json& j) {
    CompletionResponse r;
    r.text = j.at("text").get<std::string>();
    if (j.contains("provider_meta")) r.provider_meta = j.at("provider_meta");
    if (j.contains("token_logprobs") && !j.at("token_logprobs").is_null()) {
        std::vector<TokenLogprob> tokens;
        for (const auto& t : j.at("token_logprobs")) {
            TokenLogprob tl{t.at("token").get<std::string>(), t.at("logprob").get<double>(), {}};
            if (t.contains("top")) {
                for (const auto& alt : t.at("top")) {
                    tl.top.emplace_back(alt.at("token").get<std::string>(),
                                        alt.at("logprob").get<double>());
                }
            }
            tokens.push_back(std::move(tl));
        }
        r.token_logprobs = std::move(tokens);
    }
    return r;
}

}  // namespace uncttp
