#include "uncttp/uncertainty_scores.hpp"

#include "uncttp/error.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

Eigen::VectorXd label_distribution(const CompletionResponse& response, const LabelSet& labels) {
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels.size()));
    if (!response.token_logprobs || response.token_logprobs->empty()) return mass;
    const auto& first = response.token_logprobs->front();
    std::vector<std::pair<std::string, double>> alternatives = first.top;
    if (alternatives.empty()) alternatives.emplace_back(first.token, first.logprob);

    std::vector<std::string> folded;
    for (const auto& l : labels) folded.push_back(text::casefold(l));
    for (const auto& [token, lp] : alternatives) {
        const auto t = text::casefold(text::trim(token));
        if (t.empty()) continue;
        std::optional<std::size_t> match;
        bool ambiguous = false;
        for (std::size_t i = 0; i < folded.size(); ++i) {
            if (folded[i].compare(0, t.size(), t) == 0) {
                ambiguous = ambiguous || match.has_value();
                match = i;
            }
        }
        if (match && !ambiguous) mass(static_cast<Eigen::Index>(*match)) += std::exp(lp);
    }
    return mass;
}

double score_entropy(const Instance& instance, const LabelSet& labels, Provider& provider,
                     const PromptTemplate& tmpl, const MeasureOptions& options) {
    if (!provider.supports_logprobs()) {
        throw CapabilityError("entropy scoring needs token log-probabilities");
    }
    CompletionRequest req;
    req.model_id = options.model_id;
    req.messages = render(instance, labels, Setting::no_label(), tmpl);
    req.temperature = 0.0;
    req.max_tokens = options.max_tokens;
    req.logprobs_wanted = true;
    req.tag = RequestTag{instance.id, "no_label", {}, 0};
    const auto mass = label_distribution(provider.complete(req), labels);
    if (!(mass.sum() > 0.0)) return std::log(static_cast<double>(labels.size()));
    return label_entropy(mass);
}

double score_perplexity(const Instance& instance, Provider& provider, const MeasureOptions& options) {
    if (!provider.supports_logprobs()) {
        throw CapabilityError("perplexity scoring needs token log-probabilities");
    }
    CompletionRequest req;
    req.model_id = options.model_id;
    req.messages = {{Message::Role::User, "Repeat the following text exactly.\n\n" + instance.text}};
    req.temperature = 0.0;
    req.max_tokens = static_cast<int>(2 * text::tokenize(instance.text).size() + 8);
    req.logprobs_wanted = true;
    req.tag = RequestTag{instance.id, purpose::kScore, {}, 0};
    const auto response = provider.complete(req);
    if (!response.token_logprobs || response.token_logprobs->empty()) {
        throw CapabilityError("scoring call returned no token log-probabilities");
    }
    Eigen::VectorXd lps(static_cast<Eigen::Index>(response.token_logprobs->size()));
    for (std::size_t i = 0; i < response.token_logprobs->size(); ++i) {
        lps(static_cast<Eigen::Index>(i)) = (*response.token_logprobs)[i].logprob;
    }
    return perplexity(lps);
}

}  // namespace uncttp
