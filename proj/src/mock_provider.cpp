#include "uncttp/mock_provider.hpp"

#include <cmath>

#include "uncttp/cache.hpp"
#include "uncttp/error.hpp"
#include "uncttp/rng.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

namespace {

enum Stream : std::uint64_t {
    kBase = 1,
    kBaseWrong,
    kRight,
    kWrong,
    kRefuse,
    kFlip,
    kFlipTarget,
    kConfidence,
    kScore,
};

void check_rate(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(std::string("mock profile ") + name + " must lie in [0, 1]");
    }
}

}  // namespace

MockProfile mock_profile_from_json(const nlohmann::json& j) {
    MockProfile p;
    p.p0 = j.value("p0", p.p0);
    p.f_r = j.value("f_r", p.f_r);
    p.f_w = j.value("f_w", p.f_w);
    p.refusal_rate = j.value("refusal_rate", p.refusal_rate);
    p.flip_rate = j.value("flip_rate", p.flip_rate);
    p.logprobs = j.value("logprobs", p.logprobs);
    if (j.contains("constant_answer") && !j.at("constant_answer").is_null()) {
        p.constant_answer = j.at("constant_answer").get<std::string>();
    }
    check_rate(p.p0, "p0");
    check_rate(p.f_r, "f_r");
    check_rate(p.f_w, "f_w");
    check_rate(p.refusal_rate, "refusal_rate");
    check_rate(p.flip_rate, "flip_rate");
    return p;
}

nlohmann::json to_json(const MockProfile& p) {
    nlohmann::json j{{"p0", p.p0},
                     {"f_r", p.f_r},
                     {"f_w", p.f_w},
                     {"refusal_rate", p.refusal_rate},
                     {"flip_rate", p.flip_rate},
                     {"logprobs", p.logprobs}};
    j["constant_answer"] = p.constant_answer ? nlohmann::json(*p.constant_answer) : nlohmann::json(nullptr);
    return j;
}

MockFixture MockFixture::from_lines(const std::vector<nlohmann::json>& lines) {
    MockFixture f;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& j = lines[i];
        try {
            if (j.contains("profile")) {
                auto profile = mock_profile_from_json(j.at("profile"));
                if (j.contains("instance_id")) {
                    f.instance_profiles[j.at("instance_id").get<std::string>()] = profile;
                } else {
                    f.profile = profile;
                }
            } else if (j.contains("answer")) {
                Key key{j.at("instance_id").get<std::string>(), j.at("setting").get<std::string>(),
                        std::nullopt};
                if (j.contains("sample")) key.sample = j.at("sample").get<std::uint64_t>();
                f.script[std::move(key)] = j.at("answer").get<std::string>();
            } else if (j.contains("seed")) {
                f.seed = j.at("seed").get<std::uint64_t>();
            } else {
                throw FormatError("unrecognised fixture entry");
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("fixture entry " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return f;
}

MockFixture MockFixture::load(const std::string& path) {
    try {
        return from_lines(read_jsonl_lines(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

MockProvider::MockProvider(LabelSet labels, std::unordered_map<std::string, std::string> gold_by_id,
                           MockFixture fixture, std::string model_id)
    : labels_(std::move(labels)),
      gold_(std::move(gold_by_id)),
      fixture_(std::move(fixture)),
      model_id_(std::move(model_id)) {
    nlohmann::json canonical;
    canonical["seed"] = fixture_.seed;
    canonical["profile"] = fixture_.profile ? to_json(*fixture_.profile) : nlohmann::json(nullptr);
    for (const auto& [id, p] : fixture_.instance_profiles) canonical["instance_profiles"][id] = to_json(p);
    for (const auto& [k, answer] : fixture_.script) {
        canonical["script"].push_back(nlohmann::json::array(
            {k.instance_id, k.purpose, k.sample ? nlohmann::json(*k.sample) : nlohmann::json(nullptr), answer}));
    }
    fixture_digest_ = sha256_hex(canonical.dump()).substr(0, 16);
}

std::string MockProvider::endpoint_id() const {
    return "mock:" + model_id_ + ":" + fixture_digest_;
}

bool MockProvider::supports_logprobs() const {
    return fixture_.profile && fixture_.profile->logprobs;
}

std::size_t MockProvider::calls_for(const std::string& purpose) const {
    std::lock_guard lock(counter_mu_);
    auto it = per_purpose_.find(purpose);
    return it == per_purpose_.end() ? 0 : it->second;
}

void MockProvider::reset_counters() {
    std::lock_guard lock(counter_mu_);
    calls_ = 0;
    per_purpose_.clear();
}

const MockProfile* MockProvider::profile_for(const std::string& id) const {
    if (auto it = fixture_.instance_profiles.find(id); it != fixture_.instance_profiles.end()) {
        return &it->second;
    }
    return fixture_.profile ? &*fixture_.profile : nullptr;
}

const std::string& MockProvider::gold_of(const std::string& id) const {
    auto it = gold_.find(id);
    if (it == gold_.end()) throw UnknownInstance("mock has no gold label for '" + id + "'");
    return it->second;
}

std::string MockProvider::base_answer(const MockProfile& profile, const std::string& id) const {
    const auto& gold = gold_of(id);
    if (counter_uniform(fixture_.seed, id, 0, kBase) < profile.p0) return gold;
    std::vector<std::string> wrong;
    for (const auto& l : labels_) {
        if (!text::labels_equal(l, gold)) wrong.push_back(l);
    }
    const auto u = counter_uniform(fixture_.seed, id, 0, kBaseWrong);
    return wrong[std::min(wrong.size() - 1, static_cast<std::size_t>(u * wrong.size()))];
}

double MockProvider::confidence(const std::string& id) const {
    return 0.55 + 0.4 * counter_uniform(fixture_.seed, id, 0, kConfidence);
}

std::optional<std::string> MockProvider::behave(const MockProfile& profile,
                                                const std::string& instance_id,
                                                const std::string& purpose,
                                                const std::string& injected, double temperature,
                                                std::int64_t seed_hint,
                                                std::uint64_t sample_index) const {
    const std::uint64_t sample_seed =
        fixture_.seed ^ splitmix64(static_cast<std::uint64_t>(seed_hint)) ^ text::fnv1a(purpose);
    if (profile.refusal_rate > 0.0 &&
        counter_uniform(sample_seed, instance_id, sample_index, kRefuse) < profile.refusal_rate) {
        return std::nullopt;
    }
    if (profile.constant_answer) return profile.constant_answer;

    const std::string own = base_answer(profile, instance_id);
    if (purpose == "right_label" &&
        counter_uniform(fixture_.seed, instance_id, 0, kRight) < profile.f_r) {
        return injected;
    }
    if (purpose == "wrong_label" &&
        counter_uniform(fixture_.seed, instance_id, 0, kWrong) < profile.f_w) {
        return injected;
    }
    if (temperature > 0.0 && profile.flip_rate > 0.0 &&
        counter_uniform(sample_seed, instance_id, sample_index, kFlip) < profile.flip_rate) {
        std::vector<std::string> others;
        for (const auto& l : labels_) {
            if (!text::labels_equal(l, own)) others.push_back(l);
        }
        const auto u = counter_uniform(sample_seed, instance_id, sample_index, kFlipTarget);
        return others[std::min(others.size() - 1, static_cast<std::size_t>(u * others.size()))];
    }
    return own;
}

CompletionResponse MockProvider::answer_with_logprobs(const std::string& label,
                                                      const std::string& id) const {
    const double c = confidence(id);
    const double rest = (1.0 - c) / static_cast<double>(labels_.size() - 1);
    TokenLogprob tok{label, std::log(c), {}};
    tok.top.emplace_back(label, std::log(c));
    for (const auto& l : labels_) {
        if (!text::labels_equal(l, label)) tok.top.emplace_back(l, std::log(rest));
    }
    CompletionResponse r;
    r.text = label;
    r.token_logprobs = std::vector<TokenLogprob>{std::move(tok)};
    return r;
}

CompletionResponse MockProvider::complete(const CompletionRequest& request) {
    ++calls_;
    const std::string purpose = request.tag ? request.tag->purpose : std::string();
    {
        std::lock_guard lock(counter_mu_);
        ++per_purpose_[purpose];
    }
    if (!request.tag) throw UnknownInstance("mock provider requires a tagged request");
    const auto& tag = *request.tag;
    if (request.logprobs_wanted && !supports_logprobs()) {
        throw CapabilityError("mock fixture does not provide token log-probabilities");
    }

    CompletionResponse response;
    response.provider_meta = {{"backend", "mock"}, {"model", model_id_}};

    auto scripted = [&]() -> const std::string* {
        if (auto it = fixture_.script.find({tag.instance_id, tag.purpose, tag.sample_index});
            it != fixture_.script.end()) {
            return &it->second;
        }
        if (auto it = fixture_.script.find({tag.instance_id, tag.purpose, std::nullopt});
            it != fixture_.script.end()) {
            return &it->second;
        }
        if (tag.purpose == purpose::kIcl) {
            if (auto it = fixture_.script.find({tag.instance_id, "no_label", std::nullopt});
                it != fixture_.script.end()) {
                return &it->second;
            }
        }
        return nullptr;
    }();
    if (scripted) {
        response.text = *scripted;
        if (request.logprobs_wanted) {
            response.token_logprobs = std::vector<TokenLogprob>{{*scripted, 0.0, {{*scripted, 0.0}}}};
        }
        return response;
    }

    const MockProfile* profile = profile_for(tag.instance_id);
    if (!profile) {
        throw UnknownInstance("fixture has no answer for instance '" + tag.instance_id +
                              "' under '" + tag.purpose + "'");
    }
    const std::int64_t seed_hint = request.seed_hint.value_or(0);

    if (tag.purpose == purpose::kScore) {
        std::string content = request.messages.empty() ? "" : request.messages.back().content;
        if (const auto cut = content.rfind("\n\n"); cut != std::string::npos) content.erase(0, cut + 2);
        std::vector<TokenLogprob> tokens;
        const auto words = text::tokenize(content);
        for (std::size_t i = 0; i < words.size(); ++i) {
            const double lp = -(0.25 + 2.5 * counter_uniform(fixture_.seed, tag.instance_id, i, kScore));
            tokens.push_back({words[i], lp, {{words[i], lp}}});
        }
        response.text = content;
        if (request.logprobs_wanted) response.token_logprobs = std::move(tokens);
        return response;
    }

    if (tag.purpose == purpose::kVerify) {
        const auto believed = behave(*profile, tag.instance_id, "no_label", {}, request.temperature,
                                     seed_hint, tag.sample_index);
        const bool agrees = believed && text::labels_equal(*believed, tag.injected);
        response.text = agrees ? "True" : "False";
        if (request.logprobs_wanted) {
            const double c = confidence(tag.instance_id);
            const double p_true = agrees ? c : 1.0 - c;
            TokenLogprob tok{response.text, std::log(agrees ? p_true : 1.0 - p_true), {}};
            tok.top = {{"True", std::log(p_true)}, {"False", std::log(1.0 - p_true)}};
            response.token_logprobs = std::vector<TokenLogprob>{std::move(tok)};
        }
        return response;
    }

    const std::string behaviour_purpose =
        tag.purpose == purpose::kIcl ? std::string("no_label") : tag.purpose;
    const auto answer = behave(*profile, tag.instance_id, behaviour_purpose, tag.injected,
                               request.temperature, seed_hint, tag.sample_index);
    if (!answer) {
        response.text = kRefusalText;
        if (request.logprobs_wanted) {
            response.token_logprobs = std::vector<TokenLogprob>{{"I", 0.0, {{"I", 0.0}}}};
        }
        return response;
    }
    if (request.logprobs_wanted) {
        auto r = answer_with_logprobs(*answer, tag.instance_id);
        r.provider_meta = response.provider_meta;
        return r;
    }
    response.text = "The text is " + *answer + ".";
    return response;
}

}  // namespace uncttp
