#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uncttp/core.hpp"
#include "uncttp/prompting.hpp"
#include "uncttp/provider.hpp"

namespace uncttp {

struct MeasureOptions {
    std::string model_id = "mock";
    /// Sampling temperature for vanilla sampling and verification samples.
    double temperature = 0.7;
    int q = 3;
    /// Seeds the wrong-label choice per instance.
    std::uint64_t seed = 13;
    /// Passed as the request seed for sampled calls.
    std::int64_t sample_seed = 0;
    int max_tokens = 20;
    std::size_t max_in_flight = 4;
};

/// Three greedy calls under {no, right, wrong} label injection.
TripartiteRecord run_unc_ttp(const Instance& instance, const LabelSet& labels, Provider& provider,
                             const PromptTemplate& tmpl, const MeasureOptions& options);

std::vector<TripartiteRecord> run_unc_ttp_all(std::span<const Instance> instances,
                                              const LabelSet& labels, Provider& provider,
                                              const PromptTemplate& tmpl,
                                              const MeasureOptions& options);

struct VanillaRecord {
    std::string instance_id;
    std::string model_id;
    std::vector<ParsedAnswer> answers;
    /// Label holding a strict majority of the answers, if any.
    std::optional<std::string> majority;
    CategoryGroup group = CategoryGroup::Unc;
};

/// Cer_R iff every answer is gold; Cer_W iff every answer is the same
/// non-gold value (all Failed included); Unc otherwise.
CategoryGroup vanilla_group(std::span<const ParsedAnswer> answers, const std::string& gold);
std::optional<std::string> strict_majority(std::span<const ParsedAnswer> answers);

/// `q` sampled no-label completions.
VanillaRecord run_vanilla(const Instance& instance, const LabelSet& labels, Provider& provider,
                          const PromptTemplate& tmpl, const MeasureOptions& options);

std::vector<VanillaRecord> run_vanilla_all(std::span<const Instance> instances,
                                           const LabelSet& labels, Provider& provider,
                                           const PromptTemplate& tmpl, const MeasureOptions& options);

/// Vanilla candidate buckets used for category picking: "000", "111",
/// "001/010/100" (Unc with a minority of correct samples) and
/// "011/101/110" (Unc with a majority of correct samples).
std::string vanilla_bucket(const VanillaRecord& record, const std::string& gold);
const std::vector<std::string>& vanilla_buckets();

enum class VerificationMethod { PTrue, SelfCheck };

std::string_view to_string(VerificationMethod m);
VerificationMethod verification_method_from_string(std::string_view name);

struct VerificationScore {
    std::string instance_id;
    std::string model_id;
    VerificationMethod method = VerificationMethod::PTrue;
    /// P(True): probability mass on "True". SelfCheck: fraction of
    /// verifications contradicting the first answer.
    double score = 0.0;
    ParsedAnswer first_answer;
};

/// Probability of "True" over the two verdict tokens at the first position
/// of `response`; nullopt if neither verdict token is among the
/// alternatives.
std::optional<double> true_probability(const CompletionResponse& response);

/// One greedy first-stage answer, then either one log-probability
/// verification (if the provider exposes log-probs) or `q` sampled ones.
VerificationScore score_ptrue(const Instance& instance, const LabelSet& labels, Provider& provider,
                              const PromptTemplate& tmpl, const MeasureOptions& options);

/// One greedy first-stage answer, then `q` sampled verifications; an
/// unparseable verdict counts as contradicting.
VerificationScore score_selfcheck(const Instance& instance, const LabelSet& labels,
                                  Provider& provider, const PromptTemplate& tmpl,
                                  const MeasureOptions& options);

std::vector<VerificationScore> score_all(VerificationMethod method,
                                         std::span<const Instance> instances,
                                         const LabelSet& labels, Provider& provider,
                                         const PromptTemplate& tmpl, const MeasureOptions& options);

ojson to_json(const VanillaRecord& r);
VanillaRecord vanilla_record_from_json(const nlohmann::json& j);
ojson to_json(const VerificationScore& s);
VerificationScore verification_score_from_json(const nlohmann::json& j);

}  // namespace uncttp
