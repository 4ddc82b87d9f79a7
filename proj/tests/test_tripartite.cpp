#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "uncttp/error.hpp"
#include "uncttp/tripartite.hpp"

using namespace uncttp;
using testing::FnProvider;

namespace {

const LabelSet kSh({"sarcastic", "non-sarcastic"});
const LabelSet kFp({"positive", "neutral", "negative"});
const Instance kInst{"sh-1", "Oh great, another Monday.", "sarcastic"};

/// Answers each tripartite setting from a table keyed by request purpose.
FnProvider by_purpose(std::map<std::string, std::string> answers) {
    return FnProvider([answers](const CompletionRequest& r) {
        return testing::text_response(answers.at(r.tag->purpose));
    });
}

/// Answers the i-th call (in issue order) with answers[i].
FnProvider sequence(std::vector<std::string> answers) {
    auto next = std::make_shared<std::atomic<std::size_t>>(0);
    return FnProvider([answers, next](const CompletionRequest&) {
        return testing::text_response(answers.at((*next)++));
    });
}

MeasureOptions serial() {
    MeasureOptions o;
    o.max_in_flight = 1;
    return o;
}

}  // namespace

TEST_CASE("Unc-TTP examples") {
    const auto t = PromptTemplate::defaults();
    auto p1 = by_purpose({{"no_label", "sarcastic"}, {"right_label", "sarcastic"}, {"wrong_label", "sarcastic"}});
    const auto r1 = run_unc_ttp(kInst, kSh, p1, t, serial());
    CHECK(r1.category.code() == "111");
    CHECK(r1.category.group() == CategoryGroup::CerR);

    auto p2 = by_purpose({{"no_label", "non-sarcastic"}, {"right_label", "sarcastic"}, {"wrong_label", "non-sarcastic"}});
    const auto r2 = run_unc_ttp(kInst, kSh, p2, t, serial());
    CHECK(r2.category.code() == "010");
    CHECK(r2.category.group() == CategoryGroup::Unc);

    auto p3 = by_purpose({{"no_label", "I cannot determine this."}, {"right_label", "sarcastic"}, {"wrong_label", "Sarcastic."}});
    const auto r3 = run_unc_ttp(kInst, kSh, p3, t, serial());
    CHECK(r3.category.code() == "011");
    CHECK_FALSE(r3.raw_answers[0]);
    CHECK(r3.raw_answers[2] == std::optional<std::string>("sarcastic"));
}

TEST_CASE("Unc-TTP issues three greedy calls with the right injections") {
    std::vector<CompletionRequest> seen;
    std::mutex mu;
    FnProvider p([&](const CompletionRequest& r) {
        std::lock_guard lock(mu);
        seen.push_back(r);
        return testing::text_response("positive");
    });
    const Instance inst{"fp-3", "Sales doubled.", "positive"};
    run_unc_ttp(inst, kFp, p, PromptTemplate::defaults(), serial());
    REQUIRE(seen.size() == 3);
    for (const auto& r : seen) CHECK(r.temperature == 0.0);
    CHECK(seen[0].tag->purpose == "no_label");
    CHECK(seen[1].tag->injected == "positive");
    CHECK(seen[2].tag->purpose == "wrong_label");
    CHECK(seen[2].tag->injected == choose_wrong_label(inst, kFp, serial().seed));
    CHECK(seen[2].tag->injected != "positive");
}

TEST_CASE("vanilla groups") {
    using A = std::vector<ParsedAnswer>;
    const std::string g = "sarcastic";
    CHECK(vanilla_group(A{g, g, g}, g) == CategoryGroup::CerR);
    CHECK(vanilla_group(A{g, g, "non-sarcastic"}, g) == CategoryGroup::Unc);
    CHECK(vanilla_group(A{"non-sarcastic", "non-sarcastic", "non-sarcastic"}, g) == CategoryGroup::CerW);
    CHECK(vanilla_group(A{std::nullopt, std::nullopt, std::nullopt}, g) == CategoryGroup::CerW);
    CHECK(vanilla_group(A{std::nullopt, g, g}, g) == CategoryGroup::Unc);

    CHECK(strict_majority(A{g, g, "non-sarcastic"}) == std::optional<std::string>(g));
    CHECK_FALSE(strict_majority(A{"positive", "neutral", "negative"}));
    CHECK_FALSE(strict_majority(A{std::nullopt, std::nullopt, g}));
}

TEST_CASE("vanilla run on FP with three distinct answers") {
    auto p = sequence({"positive", "neutral", "negative"});
    const auto r = run_vanilla({"fp-1", "x", "positive"}, kFp, p, PromptTemplate::defaults(), serial());
    CHECK(p.calls() == 3);
    CHECK_FALSE(r.majority);
    CHECK(r.group == CategoryGroup::Unc);
    CHECK(vanilla_bucket(r, "positive") == "001/010/100");
}

TEST_CASE("vanilla samples are distinct requests") {
    std::vector<CompletionRequest> seen;
    FnProvider p([&](const CompletionRequest& r) {
        seen.push_back(r);
        return testing::text_response("sarcastic");
    });
    const auto r = run_vanilla(kInst, kSh, p, PromptTemplate::defaults(), serial());
    CHECK(r.group == CategoryGroup::CerR);
    REQUIRE(seen.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(seen[i].temperature == doctest::Approx(0.7));
        CHECK(seen[i].tag->sample_index == i);
    }
    auto zero = serial();
    zero.temperature = 0.0;
    CHECK_THROWS(run_vanilla(kInst, kSh, p, PromptTemplate::defaults(), zero));
}

TEST_CASE("vanilla buckets") {
    VanillaRecord r;
    r.answers = {std::string("sarcastic"), std::string("sarcastic"), std::string("non-sarcastic")};
    r.group = CategoryGroup::Unc;
    CHECK(vanilla_bucket(r, "sarcastic") == "011/101/110");
    CHECK(vanilla_bucket(r, "non-sarcastic") == "001/010/100");
    r.group = CategoryGroup::CerR;
    CHECK(vanilla_bucket(r, "sarcastic") == "111");
}

TEST_CASE("P(True) from log-probabilities normalises the two verdict masses") {
    CompletionResponse r;
    r.text = "True";
    r.token_logprobs = std::vector<TokenLogprob>{{"True", std::log(0.9), {{"True", std::log(0.9)}, {"False", std::log(0.1)}}}};
    CHECK(*true_probability(r) == doctest::Approx(0.9).epsilon(1e-12));

    // Unnormalised masses: 0.6 vs 0.2 -> 0.75.
    r.token_logprobs = std::vector<TokenLogprob>{{"True", std::log(0.6), {{"True", std::log(0.6)}, {" false", std::log(0.2)}, {"Maybe", std::log(0.2)}}}};
    CHECK(*true_probability(r) == doctest::Approx(0.75));

    r.token_logprobs = std::vector<TokenLogprob>{{"Maybe", -0.1, {{"Maybe", -0.1}}}};
    CHECK_FALSE(true_probability(r));
}

TEST_CASE("P(True) with a log-probability provider takes two calls") {
    FnProvider p(
        [](const CompletionRequest& r) {
            if (r.tag->purpose == purpose::kVerify) {
                CHECK(r.logprobs_wanted);
                CompletionResponse resp;
                resp.text = "True";
                resp.token_logprobs = std::vector<TokenLogprob>{{"True", std::log(0.9), {{"True", std::log(0.9)}, {"False", std::log(0.1)}}}};
                return resp;
            }
            return testing::text_response("sarcastic");
        },
        true);
    const auto s = score_ptrue(kInst, kSh, p, PromptTemplate::defaults(), serial());
    CHECK(s.score == doctest::Approx(0.9));
    CHECK(p.calls() == 2);
    CHECK(s.first_answer == std::optional<std::string>("sarcastic"));
}

TEST_CASE("P(True) by sampling counts True verdicts") {
    auto p = sequence({"sarcastic", "True", "True", "False"});
    const auto s = score_ptrue(kInst, kSh, p, PromptTemplate::defaults(), serial());
    CHECK(s.score == doctest::Approx(2.0 / 3.0));
    CHECK(p.calls() == 4);
}

TEST_CASE("SelfCheck scores the contradicting fraction") {
    auto agree = sequence({"sarcastic", "True", "True", "True"});
    CHECK(score_selfcheck(kInst, kSh, agree, PromptTemplate::defaults(), serial()).score == 0.0);
    auto one = sequence({"sarcastic", "True", "False", "True"});
    CHECK(score_selfcheck(kInst, kSh, one, PromptTemplate::defaults(), serial()).score == doctest::Approx(1.0 / 3.0));
    auto garbled = sequence({"sarcastic", "True", "unsure", "True"});
    CHECK(score_selfcheck(kInst, kSh, garbled, PromptTemplate::defaults(), serial()).score == doctest::Approx(1.0 / 3.0));
    CHECK(one.calls() == 4);
}

TEST_CASE("verification of a Failed first answer proposes the word Failed") {
    std::vector<std::string> proposed;
    FnProvider p([&](const CompletionRequest& r) {
        if (r.tag->purpose == purpose::kVerify) {
            proposed.push_back(r.tag->injected);
            return testing::text_response("False");
        }
        return testing::text_response("no idea");
    });
    const auto s = score_selfcheck(kInst, kSh, p, PromptTemplate::defaults(), serial());
    CHECK_FALSE(s.first_answer);
    CHECK(s.score == 1.0);
    CHECK(proposed == std::vector<std::string>{"Failed", "Failed", "Failed"});
}

TEST_CASE("call counts against the mock") {
    const auto ds = testing::make_dataset(kFp, 4, 0, 0);
    const auto& train = ds.split("train");
    MockProfile profile;
    profile.p0 = 0.6;
    profile.f_w = 0.5;
    profile.flip_rate = 0.2;
    MockProvider mock(kFp, testing::gold_map(train), testing::profile_fixture(profile, 3));
    const auto t = PromptTemplate::defaults();
    for (int q : {1, 3, 5}) {
        MeasureOptions o;
        o.q = q;
        mock.reset_counters();
        run_unc_ttp_all(train, kFp, mock, t, o);
        CHECK(mock.calls() == 3 * train.size());
        mock.reset_counters();
        run_vanilla_all(train, kFp, mock, t, o);
        CHECK(mock.calls() == q * train.size());
        mock.reset_counters();
        score_all(VerificationMethod::PTrue, train, kFp, mock, t, o);
        CHECK(mock.calls() == (q + 1) * train.size());
        mock.reset_counters();
        score_all(VerificationMethod::SelfCheck, train, kFp, mock, t, o);
        CHECK(mock.calls() == (q + 1) * train.size());
    }
}

TEST_CASE("group partitions are exhaustive and exclusive") {
    const auto ds = testing::make_dataset(kFp, 30, 0, 0);
    const auto& train = ds.split("train");
    MockProfile profile;
    profile.p0 = 0.5;
    profile.f_r = 0.7;
    profile.f_w = 0.4;
    profile.flip_rate = 0.3;
    profile.refusal_rate = 0.05;
    MockProvider mock(kFp, testing::gold_map(train), testing::profile_fixture(profile, 11));
    const auto t = PromptTemplate::defaults();
    const auto tri = run_unc_ttp_all(train, kFp, mock, t, MeasureOptions{});
    const auto van = run_vanilla_all(train, kFp, mock, t, MeasureOptions{});
    std::map<std::string, int> tri_groups, van_groups;
    for (const auto& r : tri) ++tri_groups[std::string(to_string(r.category.group()))];
    for (const auto& r : van) ++van_groups[std::string(to_string(r.group))];
    int tri_total = 0, van_total = 0;
    for (auto& [_, n] : tri_groups) tri_total += n;
    for (auto& [_, n] : van_groups) van_total += n;
    CHECK(tri_total == static_cast<int>(train.size()));
    CHECK(van_total == static_cast<int>(train.size()));
}

TEST_CASE("record JSON round-trips") {
    VanillaRecord v{"i", "m", {std::string("a"), std::nullopt, std::string("a")}, std::string("a"), CategoryGroup::Unc};
    const auto vj = to_json(v).dump();
    CHECK(vj == R"({"instance_id":"i","model_id":"m","answers":["a",null,"a"],"majority":"a","group":"Unc"})");
    const auto v2 = vanilla_record_from_json(nlohmann::json::parse(vj));
    CHECK(v2.answers == v.answers);
    CHECK(v2.majority == v.majority);

    VerificationScore s{"i", "m", VerificationMethod::SelfCheck, 1.0 / 3.0, std::string("a")};
    const auto s2 = verification_score_from_json(nlohmann::json::parse(to_json(s).dump()));
    CHECK(s2.method == VerificationMethod::SelfCheck);
    CHECK(s2.score == s.score);
    auto bad = nlohmann::json::parse(to_json(s).dump());
    bad["score"] = 1.5;
    CHECK_THROWS_AS(verification_score_from_json(bad), FormatError);
}
