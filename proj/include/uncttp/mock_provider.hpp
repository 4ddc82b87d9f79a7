#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "uncttp/core.hpp"
#include "uncttp/provider.hpp"

namespace uncttp {

/// Parametric model of a sycophancy-prone classifier.
///
/// Each instance gets a base answer: gold with probability `p0`, otherwise a
/// fixed wrong label. Under right-label injection the mock adopts the
/// injected label with probability `f_r`, under wrong-label injection with
/// probability `f_w`; otherwise it keeps its base answer. Sampled
/// (temperature > 0) answers additionally flip to a different label with
/// probability `flip_rate`. All draws are counter-based on
/// (seed, instance id, sample index).
struct MockProfile {
    double p0 = 1.0;
    double f_r = 1.0;
    double f_w = 0.0;
    double refusal_rate = 0.0;
    double flip_rate = 0.0;
    /// Whether responses carry token log-probabilities.
    bool logprobs = false;
    /// Answer every classification request with this text.
    std::optional<std::string> constant_answer;
};

MockProfile mock_profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MockProfile& p);

inline constexpr const char* kRefusalText = "I cannot determine this.";

/// Scripted answers plus optional profiles. Lookup order for a request:
/// (id, purpose, sample) -> (id, purpose) -> (id, no_label) for icl
/// requests -> per-instance profile -> global profile. Without any profile
/// the fixture is exhaustive and unscripted requests raise UnknownInstance.
struct MockFixture {
    struct Key {
        std::string instance_id;
        std::string purpose;
        std::optional<std::uint64_t> sample;
        friend auto operator<=>(const Key&, const Key&) = default;
    };

    std::map<Key, std::string> script;
    std::optional<MockProfile> profile;
    std::map<std::string, MockProfile> instance_profiles;
    std::uint64_t seed = 0;

    bool exhaustive() const { return !profile && instance_profiles.empty(); }

    /// JSONL: `{"instance_id","setting","answer"[,"sample"]}` lines,
    /// `{"profile":{...}[,"instance_id"]}` lines, and `{"seed":n}`.
    static MockFixture load(const std::string& path);
    static MockFixture from_lines(const std::vector<nlohmann::json>& lines);
};

/// Deterministic offline provider. Needs the gold label of every instance
/// it may be asked about.
class MockProvider final : public Provider {
public:
    MockProvider(LabelSet labels, std::unordered_map<std::string, std::string> gold_by_id,
                 MockFixture fixture, std::string model_id = "mock");

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string endpoint_id() const override;
    bool supports_logprobs() const override;

    std::size_t calls() const noexcept { return calls_; }
    std::size_t calls_for(const std::string& purpose) const;
    void reset_counters();

    /// The label the mock would answer for `(instance, setting)` under its
    /// profile, or nullopt for a refusal. Exposed for oracle tests.
    std::optional<std::string> behave(const MockProfile& profile, const std::string& instance_id,
                                      const std::string& purpose, const std::string& injected,
                                      double temperature, std::int64_t seed_hint,
                                      std::uint64_t sample_index) const;

private:
    const MockProfile* profile_for(const std::string& id) const;
    const std::string& gold_of(const std::string& id) const;
    std::string base_answer(const MockProfile& profile, const std::string& id) const;
    double confidence(const std::string& id) const;
    CompletionResponse answer_with_logprobs(const std::string& label, const std::string& id) const;

    LabelSet labels_;
    std::unordered_map<std::string, std::string> gold_;
    MockFixture fixture_;
    std::string model_id_;
    std::string fixture_digest_;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex counter_mu_;
    std::map<std::string, std::size_t> per_purpose_;
};

}  // namespace uncttp
