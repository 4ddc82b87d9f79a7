#include "uncttp/tripartite.hpp"

#include <cmath>
#include <map>

#include "uncttp/error.hpp"
#include "uncttp/parallel.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

namespace {

CompletionRequest make_request(const MeasureOptions& o, std::vector<Message> messages,
                               RequestTag tag, double temperature) {
    CompletionRequest r;
    r.model_id = o.model_id;
    r.messages = std::move(messages);
    r.temperature = temperature;
    r.max_tokens = o.max_tokens;
    if (temperature > 0.0) r.seed_hint = o.sample_seed;
    r.tag = std::move(tag);
    return r;
}

bool is_correct(const ParsedAnswer& a, const std::string& gold) {
    return a && text::labels_equal(*a, gold);
}

ParsedAnswer first_stage(const Instance& instance, const LabelSet& labels, Provider& provider,
                         const PromptTemplate& tmpl, const MeasureOptions& o) {
    auto req = make_request(o, render(instance, labels, Setting::no_label(), tmpl),
                            {instance.id, "no_label", {}, 0}, 0.0);
    return parse_answer(provider.complete(req).text, labels);
}

std::string proposed_text(const ParsedAnswer& a) { return a ? *a : std::string("Failed"); }

ojson answers_json(std::span<const ParsedAnswer> answers) {
    ojson out = ojson::array();
    for (const auto& a : answers) out.push_back(a ? ojson(*a) : ojson(nullptr));
    return out;
}

std::vector<ParsedAnswer> answers_from_json(const nlohmann::json& j) {
    std::vector<ParsedAnswer> out;
    for (const auto& a : j) {
        out.push_back(a.is_null() ? ParsedAnswer{} : ParsedAnswer{a.get<std::string>()});
    }
    return out;
}

}  // namespace

TripartiteRecord run_unc_ttp(const Instance& instance, const LabelSet& labels, Provider& provider,
                             const PromptTemplate& tmpl, const MeasureOptions& options) {
    const auto gold = labels.canonical(instance.gold);
    if (!gold) throw InvalidInstance("gold label of " + instance.id + " is not in the label set");
    const auto wrong = choose_wrong_label(instance, labels, options.seed);
    const std::array<Setting, 3> settings{Setting::no_label(), Setting::right_label(*gold),
                                          Setting::wrong_label(wrong)};

    TripartiteRecord rec;
    rec.instance_id = instance.id;
    rec.model_id = options.model_id;
    std::array<bool, 3> bits{};
    for (std::size_t i = 0; i < settings.size(); ++i) {
        RequestTag tag{instance.id, std::string(to_string(settings[i].kind)), settings[i].injected, 0};
        auto req = make_request(options, render(instance, labels, settings[i], tmpl), std::move(tag), 0.0);
        rec.raw_answers[i] = parse_answer(provider.complete(req).text, labels);
        bits[i] = is_correct(rec.raw_answers[i], *gold);
    }
    rec.bits = {bits[0], bits[1], bits[2]};
    rec.category = category_of(rec.bits);
    return rec;
}

std::vector<TripartiteRecord> run_unc_ttp_all(std::span<const Instance> instances,
                                              const LabelSet& labels, Provider& provider,
                                              const PromptTemplate& tmpl,
                                              const MeasureOptions& options) {
    return parallel_map(instances.size(), options.max_in_flight, [&](std::size_t i) {
        return run_unc_ttp(instances[i], labels, provider, tmpl, options);
    });
}

CategoryGroup vanilla_group(std::span<const ParsedAnswer> answers, const std::string& gold) {
    if (answers.empty()) return CategoryGroup::Unc;
    bool all_gold = true;
    bool all_equal = true;
    for (const auto& a : answers) {
        all_gold = all_gold && is_correct(a, gold);
        const auto& first = answers.front();
        const bool same = (!a && !first) || (a && first && text::labels_equal(*a, *first));
        all_equal = all_equal && same;
    }
    if (all_gold) return CategoryGroup::CerR;
    if (all_equal) return CategoryGroup::CerW;
    return CategoryGroup::Unc;
}

std::optional<std::string> strict_majority(std::span<const ParsedAnswer> answers) {
    std::map<std::string, std::size_t> counts;
    for (const auto& a : answers) {
        if (a) ++counts[text::casefold(*a)];
    }
    for (const auto& a : answers) {
        if (a && 2 * counts[text::casefold(*a)] > answers.size()) return *a;
    }
    return std::nullopt;
}

VanillaRecord run_vanilla(const Instance& instance, const LabelSet& labels, Provider& provider,
                          const PromptTemplate& tmpl, const MeasureOptions& options) {
    if (options.q < 1) throw std::invalid_argument("q must be positive");
    if (!(options.temperature > 0.0)) {
        throw std::invalid_argument("vanilla sampling needs a positive temperature");
    }
    const auto gold = labels.canonical(instance.gold);
    if (!gold) throw InvalidInstance("gold label of " + instance.id + " is not in the label set");
    VanillaRecord rec;
    rec.instance_id = instance.id;
    rec.model_id = options.model_id;
    const auto messages = render(instance, labels, Setting::no_label(), tmpl);
    for (int s = 0; s < options.q; ++s) {
        auto req = make_request(options, messages,
                                {instance.id, "no_label", {}, static_cast<std::uint64_t>(s)},
                                options.temperature);
        rec.answers.push_back(parse_answer(provider.complete(req).text, labels));
    }
    rec.majority = strict_majority(rec.answers);
    rec.group = vanilla_group(rec.answers, *gold);
    return rec;
}

std::vector<VanillaRecord> run_vanilla_all(std::span<const Instance> instances,
                                           const LabelSet& labels, Provider& provider,
                                           const PromptTemplate& tmpl,
                                           const MeasureOptions& options) {
    return parallel_map(instances.size(), options.max_in_flight, [&](std::size_t i) {
        return run_vanilla(instances[i], labels, provider, tmpl, options);
    });
}

const std::vector<std::string>& vanilla_buckets() {
    static const std::vector<std::string> buckets{"000", "111", "001/010/100", "011/101/110"};
    return buckets;
}

std::string vanilla_bucket(const VanillaRecord& record, const std::string& gold) {
    switch (record.group) {
        case CategoryGroup::CerW: return "000";
        case CategoryGroup::CerR: return "111";
        case CategoryGroup::Unc: break;
    }
    std::size_t correct = 0;
    for (const auto& a : record.answers) correct += is_correct(a, gold) ? 1 : 0;
    return 2 * correct > record.answers.size() ? "011/101/110" : "001/010/100";
}

std::string_view to_string(VerificationMethod m) {
    return m == VerificationMethod::PTrue ? "ptrue" : "selfcheck";
}

VerificationMethod verification_method_from_string(std::string_view name) {
    if (name == "ptrue") return VerificationMethod::PTrue;
    if (name == "selfcheck") return VerificationMethod::SelfCheck;
    throw std::invalid_argument("unknown verification method '" + std::string(name) + "'");
}

std::optional<double> true_probability(const CompletionResponse& response) {
    if (!response.token_logprobs || response.token_logprobs->empty()) return std::nullopt;
    const auto& first = response.token_logprobs->front();
    double p_true = 0.0;
    double p_false = 0.0;
    auto add = [&](const std::string& token, double lp) {
        const auto t = text::casefold(text::trim(token));
        if (t == "true") p_true += std::exp(lp);
        if (t == "false") p_false += std::exp(lp);
    };
    if (first.top.empty()) {
        add(first.token, first.logprob);
    } else {
        for (const auto& [tok, lp] : first.top) add(tok, lp);
    }
    if (p_true + p_false <= 0.0) return std::nullopt;
    return p_true / (p_true + p_false);
}

namespace {

std::vector<std::optional<bool>> sampled_verdicts(const Instance& instance, const LabelSet& labels,
                                                  Provider& provider, const PromptTemplate& tmpl,
                                                  const MeasureOptions& o,
                                                  const std::string& proposed) {
    const auto messages = render_verification(instance, labels, proposed, tmpl);
    std::vector<std::optional<bool>> verdicts;
    for (int s = 0; s < o.q; ++s) {
        auto req = make_request(o, messages,
                                {instance.id, purpose::kVerify, proposed, static_cast<std::uint64_t>(s)},
                                o.temperature);
        verdicts.push_back(parse_verdict(provider.complete(req).text));
    }
    return verdicts;
}

}  // namespace

VerificationScore score_ptrue(const Instance& instance, const LabelSet& labels, Provider& provider,
                              const PromptTemplate& tmpl, const MeasureOptions& options) {
    VerificationScore out{instance.id, options.model_id, VerificationMethod::PTrue, 0.0, {}};
    out.first_answer = first_stage(instance, labels, provider, tmpl, options);
    const auto proposed = proposed_text(out.first_answer);

    if (provider.supports_logprobs()) {
        auto req = make_request(options, render_verification(instance, labels, proposed, tmpl),
                                {instance.id, purpose::kVerify, proposed, 0}, 0.0);
        req.logprobs_wanted = true;
        if (auto p = true_probability(provider.complete(req))) {
            out.score = *p;
            return out;
        }
    }
    if (options.q < 1) throw CapabilityError("no log-probabilities and no sampling budget (q = 0)");
    const auto verdicts = sampled_verdicts(instance, labels, provider, tmpl, options, proposed);
    std::size_t yes = 0;
    for (const auto& v : verdicts) yes += (v && *v) ? 1 : 0;
    out.score = static_cast<double>(yes) / static_cast<double>(verdicts.size());
    return out;
}

VerificationScore score_selfcheck(const Instance& instance, const LabelSet& labels,
                                  Provider& provider, const PromptTemplate& tmpl,
                                  const MeasureOptions& options) {
    if (options.q < 1) throw std::invalid_argument("q must be positive");
    VerificationScore out{instance.id, options.model_id, VerificationMethod::SelfCheck, 0.0, {}};
    out.first_answer = first_stage(instance, labels, provider, tmpl, options);
    const auto verdicts =
        sampled_verdicts(instance, labels, provider, tmpl, options, proposed_text(out.first_answer));
    std::size_t contradicting = 0;
    for (const auto& v : verdicts) contradicting += (v && *v) ? 0 : 1;
    out.score = static_cast<double>(contradicting) / static_cast<double>(verdicts.size());
    return out;
}

std::vector<VerificationScore> score_all(VerificationMethod method,
                                         std::span<const Instance> instances,
                                         const LabelSet& labels, Provider& provider,
                                         const PromptTemplate& tmpl, const MeasureOptions& options) {
    return parallel_map(instances.size(), options.max_in_flight, [&](std::size_t i) {
        return method == VerificationMethod::PTrue
                   ? score_ptrue(instances[i], labels, provider, tmpl, options)
                   : score_selfcheck(instances[i], labels, provider, tmpl, options);
    });
}

ojson to_json(const VanillaRecord& r) {
    return ojson{{"instance_id", r.instance_id},
                 {"model_id", r.model_id},
                 {"answers", answers_json(r.answers)},
                 {"majority", r.majority ? ojson(*r.majority) : ojson(nullptr)},
                 {"group", std::string(to_string(r.group))}};
}

VanillaRecord vanilla_record_from_json(const nlohmann::json& j) {
    VanillaRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.answers = answers_from_json(j.at("answers"));
    if (!j.at("majority").is_null()) r.majority = j.at("majority").get<std::string>();
    r.group = group_from_string(j.at("group").get<std::string>());
    return r;
}

ojson to_json(const VerificationScore& s) {
    return ojson{{"instance_id", s.instance_id},
                 {"model_id", s.model_id},
                 {"method", std::string(to_string(s.method))},
                 {"score", s.score},
                 {"first_answer", s.first_answer ? ojson(*s.first_answer) : ojson(nullptr)}};
}

VerificationScore verification_score_from_json(const nlohmann::json& j) {
    VerificationScore s;
    s.instance_id = j.at("instance_id").get<std::string>();
    s.model_id = j.at("model_id").get<std::string>();
    s.method = verification_method_from_string(j.at("method").get<std::string>());
    s.score = j.at("score").get<double>();
    if (j.contains("first_answer") && !j.at("first_answer").is_null()) {
        s.first_answer = j.at("first_answer").get<std::string>();
    }
    if (!(s.score >= 0.0 && s.score <= 1.0)) throw FormatError("score outside [0, 1]");
    return s;
}

}  // namespace uncttp
