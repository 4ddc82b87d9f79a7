#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "uncttp/dataset.hpp"
#include "uncttp/evaluation.hpp"
#include "uncttp/retrieval.hpp"
#include "uncttp/selection.hpp"
#include "uncttp/tripartite.hpp"

namespace uncttp {

enum class Strategy {
    Random,
    Similarity,
    Bm25,
    Diversity,
    Entropy,
    Perplexity,
    UncTtp,
    Vanilla,
    PTrue,
    SelfCheck,
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);
const std::vector<Strategy>& all_strategies();
/// Similarity and BM25 choose demonstrations per test instance.
bool is_per_test(Strategy s);

/// 13, 42, 87, then 100, 101, ... for counts above three.
std::vector<std::uint64_t> default_seeds(std::size_t count = 3);

/// Per-instance measurements on the training split that a strategy
/// selects from. Only the member matching the strategy is filled.
struct Classification {
    std::vector<TripartiteRecord> tripartite;
    std::vector<VanillaRecord> vanilla;
    std::vector<VerificationScore> verification;
    /// Entropy or perplexity per instance id.
    std::unordered_map<std::string, double> scores;

    /// Model that produced the measurements, if any.
    std::string model_id() const;
};

struct PipelineConfig {
    MeasureOptions measure;
    IclOptions icl;
    std::size_t shots = 1;
    /// Shots used when comparing candidate categories on validation.
    std::size_t validation_shots = 1;
    std::vector<std::uint64_t> seeds = default_seeds();
    /// Fixed category; skips validation picking.
    std::optional<std::string> category;
    Bm25Params bm25;
};

Classification classify(Strategy strategy, std::span<const Instance> train, const LabelSet& labels,
                        Provider& provider, const PromptTemplate& tmpl, const MeasureOptions& options);

/// How demonstrations are drawn for each evaluation seed.
struct DemoPlan {
    Strategy strategy = Strategy::Random;
    std::string category;
    std::optional<CategoryChoice> choice;
    std::vector<std::string> dropped;
    std::string guide_model_id;
    /// Set for strategies with one demonstration set per seed.
    std::function<DemonstrationSet(std::uint64_t seed)> fixed;
    /// Set for strategies that choose per test instance.
    std::function<DemonstrationSet(std::uint64_t seed, const Instance& test)> per_test;
};

/// Candidate names for category picking: the eight codes, the four vanilla
/// buckets, or {min, max} for the verification scores.
std::vector<std::string> candidates_for(Strategy s);

/// Builds the plan. Category strategies pick their category on the
/// validation split with `evaluator` unless `config.category` is set.
/// `embedder` defaults to TF-IDF when null.
DemoPlan plan_demonstrations(Strategy strategy, const DatasetSpec& dataset,
                             const Classification& classification, Provider& evaluator,
                             const PromptTemplate& tmpl, Embedder* embedder,
                             const PipelineConfig& config);

/// Runs the plan on `split_name` once per configured seed.
EvalReport evaluate_plan(const DemoPlan& plan, const DatasetSpec& dataset, Provider& evaluator,
                         const PromptTemplate& tmpl, const PipelineConfig& config,
                         const std::string& split_name = "test");

/// classify (with `guide`) -> pick category -> evaluate (with `evaluator`).
EvalReport run_pipeline(Strategy strategy, const DatasetSpec& dataset, Provider& guide,
                        Provider& evaluator, const PromptTemplate& tmpl, Embedder* embedder,
                        const PipelineConfig& config);

/// Reads a records file (Unc-TTP, vanilla or verification JSONL) into a
/// Classification. Throws MissingRecords if the file does not exist.
Classification load_classification(Strategy strategy, const std::string& path);

/// Selects with another model's records and evaluates with `evaluator`.
EvalReport transfer_eval(Strategy strategy, const std::string& records_path,
                         const DatasetSpec& dataset, Provider& evaluator,
                         const PromptTemplate& tmpl, Embedder* embedder,
                         const PipelineConfig& config);

}  // namespace uncttp
