#pragma once

#include <cmath>
#include <span>

#include <Eigen/Core>

#include "uncttp/core.hpp"
#include "uncttp/prompting.hpp"
#include "uncttp/provider.hpp"
#include "uncttp/tripartite.hpp"

namespace uncttp {

/// Shannon entropy (nats) of `probs` after normalising them to sum to one.
template <typename Derived>
typename Derived::Scalar label_entropy(const Eigen::MatrixBase<Derived>& probs) {
    using Scalar = typename Derived::Scalar;
    const Scalar total = probs.sum();
    if (!(total > Scalar(0))) throw std::invalid_argument("label distribution has no mass");
    Scalar h = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const Scalar p = probs(i) / total;
        if (p > Scalar(0)) h -= p * std::log(p);
    }
    return h;
}

/// exp of the negated mean token log-probability.
template <typename Derived>
typename Derived::Scalar perplexity(const Eigen::MatrixBase<Derived>& token_logprobs) {
    if (token_logprobs.size() == 0) throw std::invalid_argument("perplexity of an empty sequence");
    return std::exp(-token_logprobs.mean());
}

/// Probability mass per label at the first answer position. Alternatives
/// are attributed to the single label they are a case-folded prefix of;
/// ambiguous or unmatched tokens are ignored.
Eigen::VectorXd label_distribution(const CompletionResponse& response, const LabelSet& labels);

/// Entropy of the label distribution of a greedy no-label answer. If no
/// alternative matches a label the result is ln K. CapabilityError when
/// the provider has no log-probabilities.
double score_entropy(const Instance& instance, const LabelSet& labels, Provider& provider,
                     const PromptTemplate& tmpl, const MeasureOptions& options);

/// Perplexity of the instance text from a scoring call that asks the model
/// to repeat it. CapabilityError when the provider has no log-probabilities.
double score_perplexity(const Instance& instance, Provider& provider, const MeasureOptions& options);

}  // namespace uncttp
