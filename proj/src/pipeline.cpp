#include "uncttp/pipeline.hpp"

#include <filesystem>
#include <memory>

#include "uncttp/clustering.hpp"
#include "uncttp/error.hpp"
#include "uncttp/parallel.hpp"
#include "uncttp/uncertainty_scores.hpp"

namespace uncttp {

namespace {

struct StrategyName {
    Strategy strategy;
    const char* name;
};

constexpr StrategyName kNames[] = {
    {Strategy::Random, "random"},         {Strategy::Similarity, "similarity"},
    {Strategy::Bm25, "bm25"},             {Strategy::Diversity, "diversity"},
    {Strategy::Entropy, "entropy"},       {Strategy::Perplexity, "perplexity"},
    {Strategy::UncTtp, "uncttp"},         {Strategy::Vanilla, "vanilla"},
    {Strategy::PTrue, "ptrue"},           {Strategy::SelfCheck, "selfcheck"},
};

std::unordered_map<std::string, double> verification_scores(const Classification& c) {
    std::unordered_map<std::string, double> out;
    for (const auto& s : c.verification) out[s.instance_id] = s.score;
    return out;
}

/// Default category for verification scores: the uncertain end.
std::string default_verification_category(Strategy s) { return s == Strategy::PTrue ? "min" : "max"; }

ScoreOrder order_for(const std::string& category) {
    if (category == "max") return ScoreOrder::Descending;
    if (category == "min") return ScoreOrder::Ascending;
    throw ConfigError("verification category must be 'min' or 'max', not '" + category + "'");
}

}  // namespace

std::string_view to_string(Strategy s) {
    for (const auto& n : kNames) {
        if (n.strategy == s) return n.name;
    }
    return "random";
}

Strategy strategy_from_string(std::string_view name) {
    for (const auto& n : kNames) {
        if (name == n.name) return n.strategy;
    }
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all = [] {
        std::vector<Strategy> v;
        for (const auto& n : kNames) v.push_back(n.strategy);
        return v;
    }();
    return all;
}

bool is_per_test(Strategy s) { return s == Strategy::Similarity || s == Strategy::Bm25; }

std::vector<std::uint64_t> default_seeds(std::size_t count) {
    std::vector<std::uint64_t> seeds{13, 42, 87};
    for (std::uint64_t next = 100; seeds.size() < count; ++next) seeds.push_back(next);
    seeds.resize(count);
    return seeds;
}

std::string Classification::model_id() const {
    if (!tripartite.empty()) return tripartite.front().model_id;
    if (!vanilla.empty()) return vanilla.front().model_id;
    if (!verification.empty()) return verification.front().model_id;
    return {};
}

Classification classify(Strategy strategy, std::span<const Instance> train, const LabelSet& labels,
                        Provider& provider, const PromptTemplate& tmpl, const MeasureOptions& options) {
    Classification c;
    switch (strategy) {
        case Strategy::UncTtp:
            c.tripartite = run_unc_ttp_all(train, labels, provider, tmpl, options);
            break;
        case Strategy::Vanilla:
            c.vanilla = run_vanilla_all(train, labels, provider, tmpl, options);
            break;
        case Strategy::PTrue:
            c.verification = score_all(VerificationMethod::PTrue, train, labels, provider, tmpl, options);
            break;
        case Strategy::SelfCheck:
            c.verification = score_all(VerificationMethod::SelfCheck, train, labels, provider, tmpl, options);
            break;
        case Strategy::Entropy:
        case Strategy::Perplexity: {
            if (!provider.supports_logprobs()) {
                throw CapabilityError(std::string(to_string(strategy)) +
                                      " selection needs a provider with token log-probabilities");
            }
            const auto values = parallel_map(train.size(), options.max_in_flight, [&](std::size_t i) {
                return strategy == Strategy::Entropy
                           ? score_entropy(train[i], labels, provider, tmpl, options)
                           : score_perplexity(train[i], provider, options);
            });
            for (std::size_t i = 0; i < train.size(); ++i) c.scores[train[i].id] = values[i];
            break;
        }
        default:
            break;
    }
    return c;
}

std::vector<std::string> candidates_for(Strategy s) {
    switch (s) {
        case Strategy::UncTtp: return {all_codes().begin(), all_codes().end()};
        case Strategy::Vanilla: return vanilla_buckets();
        case Strategy::PTrue:
        case Strategy::SelfCheck: return {"min", "max"};
        default: return {};
    }
}

DemoPlan plan_demonstrations(Strategy strategy, const DatasetSpec& dataset,
                             const Classification& classification, Provider& evaluator,
                             const PromptTemplate& tmpl, Embedder* embedder,
                             const PipelineConfig& config) {
    const auto& train = dataset.split("train");
    const auto& labels = dataset.labels;
    const std::size_t ways = labels.size();
    const std::size_t shots = config.shots;

    DemoPlan plan;
    plan.strategy = strategy;
    plan.guide_model_id = classification.model_id();

    std::shared_ptr<Embedder> owned_embedder;
    if (!embedder) {
        owned_embedder = std::make_shared<TfidfEmbedder>();
        embedder = owned_embedder.get();
    }
    auto tagged = [strategy](DemonstrationSet set, const std::string& category, std::uint64_t seed) {
        set.strategy = std::string(to_string(strategy));
        set.category = category;
        set.seed = seed;
        return set;
    };

    switch (strategy) {
        case Strategy::Random:
            plan.fixed = [=, &train, &labels](std::uint64_t seed) {
                Rng rng(seed);
                return tagged(select_random(train, labels, ways, shots, rng), "", seed);
            };
            return plan;

        case Strategy::Diversity:
            plan.fixed = [=, &train, &labels](std::uint64_t seed) {
                (void)owned_embedder;
                Rng rng(seed);
                return tagged(select_diversity(train, labels, ways, shots, *embedder, rng), "", seed);
            };
            return plan;

        case Strategy::Similarity: {
            auto ranker = std::make_shared<SimilarityRanker>(train, *embedder);
            plan.per_test = [=, &train, &labels](std::uint64_t seed, const Instance& test) {
                (void)owned_embedder;
                auto rng = Rng::for_instance(seed, test.id);
                return tagged(select_from_ranking(ranker->rank(test.text), train, labels, ways, shots, rng), "", seed);
            };
            return plan;
        }

        case Strategy::Bm25: {
            auto index = std::make_shared<Bm25Index>(train, config.bm25);
            plan.per_test = [=, &train, &labels](std::uint64_t seed, const Instance& test) {
                auto rng = Rng::for_instance(seed, test.id);
                return tagged(select_from_ranking(index->rank(test.text), train, labels, ways, shots, rng), "", seed);
            };
            return plan;
        }

        case Strategy::Entropy:
        case Strategy::Perplexity:
        case Strategy::PTrue:
        case Strategy::SelfCheck: {
            const bool verification = strategy == Strategy::PTrue || strategy == Strategy::SelfCheck;
            auto scores = std::make_shared<std::unordered_map<std::string, double>>(
                verification ? verification_scores(classification) : classification.scores);
            if (scores->empty() && !train.empty()) {
                throw MissingRecords("no " + std::string(to_string(strategy)) + " scores for the training split");
            }
            plan.category = verification ? config.category.value_or(default_verification_category(strategy))
                                         : "max";
            const auto order = order_for(plan.category);
            plan.fixed = [=, &train, &labels, category = plan.category](std::uint64_t seed) {
                Rng rng(seed);
                return tagged(select_by_score(train, *scores, labels, ways, shots, order, rng), category, seed);
            };
            return plan;
        }

        case Strategy::UncTtp:
        case Strategy::Vanilla: {
            auto pool = std::make_shared<CategoryPool>(
                strategy == Strategy::UncTtp ? category_pool(classification.tripartite, train)
                                             : vanilla_pool(classification.vanilla, train));
            for (const auto& [name, members] : *pool) {
                if (members.empty()) plan.dropped.push_back(name);
            }
            if (config.category) {
                if (!pool->contains(*config.category)) {
                    throw ConfigError("unknown category '" + *config.category + "' for " +
                                      std::string(to_string(strategy)));
                }
                if (pool->at(*config.category).empty()) {
                    throw AllDropped("category " + *config.category + " has no instances");
                }
                plan.category = *config.category;
            } else {
                const auto& validation = dataset.split("validation");
                const auto candidates = candidates_for(strategy);
                auto runner = [&](const std::string& name, std::uint64_t seed) -> std::optional<double> {
                    Rng rng(seed);
                    auto set = assemble(pool->at(name), labels, ways, config.validation_shots, rng, train);
                    if (!set) return std::nullopt;
                    return run_icl(tagged(*set, name, seed), validation, labels, evaluator, tmpl,
                                   config.icl, seed, "validation")
                        .accuracy;
                };
                plan.choice = pick_best_category(candidates, config.seeds, runner);
                plan.category = plan.choice->chosen;
            }
            plan.fixed = [=, &train, &labels, category = plan.category](std::uint64_t seed) {
                Rng rng(seed);
                auto set = assemble(pool->at(category), labels, ways, shots, rng, train);
                return tagged(*set, category, seed);
            };
            return plan;
        }
    }
    throw ConfigError("unhandled strategy");
}

EvalReport evaluate_plan(const DemoPlan& plan, const DatasetSpec& dataset, Provider& evaluator,
                         const PromptTemplate& tmpl, const PipelineConfig& config,
                         const std::string& split_name) {
    if (config.seeds.empty()) throw ConfigError("at least one seed is required");
    const auto& eval_split = dataset.split(split_name);
    std::vector<EvalRun> runs;
    for (auto seed : config.seeds) {
        if (plan.fixed) {
            runs.push_back(run_icl(plan.fixed(seed), eval_split, dataset.labels, evaluator, tmpl,
                                   config.icl, seed, split_name));
        } else {
            DemoSource source = [&](const Instance& test) { return plan.per_test(seed, test); };
            runs.push_back(run_icl(source, eval_split, dataset.labels, evaluator, tmpl, config.icl,
                                   seed, split_name));
        }
    }
    auto report = aggregate(runs);
    report.method = std::string(to_string(plan.strategy));
    report.dataset = dataset.name;
    report.model_id = config.icl.model_id;
    report.guide_model_id = plan.guide_model_id;
    report.category = plan.category;
    report.dropped = plan.dropped;
    report.choice = plan.choice;
    return report;
}

EvalReport run_pipeline(Strategy strategy, const DatasetSpec& dataset, Provider& guide,
                        Provider& evaluator, const PromptTemplate& tmpl, Embedder* embedder,
                        const PipelineConfig& config) {
    const auto classification =
        classify(strategy, dataset.split("train"), dataset.labels, guide, tmpl, config.measure);
    const auto plan = plan_demonstrations(strategy, dataset, classification, evaluator, tmpl, embedder, config);
    return evaluate_plan(plan, dataset, evaluator, tmpl, config);
}

Classification load_classification(Strategy strategy, const std::string& path) {
    if (!std::filesystem::exists(path)) throw MissingRecords("records file not found: " + path);
    Classification c;
    switch (strategy) {
        case Strategy::UncTtp:
            c.tripartite = read_jsonl(path, tripartite_record_from_json);
            break;
        case Strategy::Vanilla:
            c.vanilla = read_jsonl(path, vanilla_record_from_json);
            break;
        case Strategy::PTrue:
        case Strategy::SelfCheck:
            c.verification = read_jsonl(path, verification_score_from_json);
            break;
        default:
            throw ConfigError("strategy " + std::string(to_string(strategy)) + " does not use records");
    }
    return c;
}

EvalReport transfer_eval(Strategy strategy, const std::string& records_path,
                         const DatasetSpec& dataset, Provider& evaluator,
                         const PromptTemplate& tmpl, Embedder* embedder,
                         const PipelineConfig& config) {
    const auto classification = load_classification(strategy, records_path);
    const auto plan = plan_demonstrations(strategy, dataset, classification, evaluator, tmpl, embedder, config);
    return evaluate_plan(plan, dataset, evaluator, tmpl, config);
}

}  // namespace uncttp
