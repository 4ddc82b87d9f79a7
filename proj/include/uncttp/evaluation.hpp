#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uncttp/core.hpp"
#include "uncttp/prompting.hpp"
#include "uncttp/provider.hpp"
#include "uncttp/selection.hpp"
#include "uncttp/tripartite.hpp"

namespace uncttp {

struct IclOptions {
    std::string model_id = "mock";
    double temperature = 0.7;
    int max_tokens = 20;
    std::size_t max_in_flight = 4;
};

struct InstanceOutcome {
    std::string instance_id;
    ParsedAnswer predicted;
    bool correct = false;
    /// Filled for strategies that pick demonstrations per test instance.
    std::vector<std::string> demonstration_ids;
};

struct EvalRun {
    std::uint64_t seed = 0;
    std::string eval_split_id;
    std::optional<DemonstrationSet> demonstrations;
    std::vector<InstanceOutcome> per_instance;
    double accuracy = 0.0;

    std::size_t failed() const;
};

/// Chooses the demonstrations for one test instance.
using DemoSource = std::function<DemonstrationSet(const Instance& test)>;

/// One sampled completion per evaluation instance with `demonstrations`
/// prepended. Failed answers count as incorrect. Throws LeakageError if a
/// demonstration belongs to `eval_split`.
EvalRun run_icl(const DemonstrationSet& demonstrations, std::span<const Instance> eval_split,
                const LabelSet& labels, Provider& provider, const PromptTemplate& tmpl,
                const IclOptions& options, std::uint64_t seed, std::string eval_split_id = "test");

EvalRun run_icl(const DemoSource& per_test, std::span<const Instance> eval_split,
                const LabelSet& labels, Provider& provider, const PromptTemplate& tmpl,
                const IclOptions& options, std::uint64_t seed, std::string eval_split_id = "test");

struct Summary {
    double mean = 0.0;
    /// Sample (n - 1) standard deviation; 0 for a single value.
    double std_dev = 0.0;
    std::size_t n = 0;
};

/// Order-independent: values are summed in sorted order.
Summary summarize(std::span<const double> values);

/// Rounds to one decimal place.
double round1(double v);

struct CandidateResult {
    std::string name;
    bool dropped = false;
    std::vector<double> accuracies;
    Summary summary;
};

struct CategoryChoice {
    std::string chosen;
    std::vector<CandidateResult> candidates;
};

/// Validation accuracy of `candidate` for one seed; nullopt when the
/// candidate is dropped (no instances).
using CandidateRunner = std::function<std::optional<double>(const std::string& candidate, std::uint64_t seed)>;

/// Argmax of mean validation accuracy over `seeds`. Ties go to a member of
/// the uncertain group (any code other than 000 and 111), then to the
/// lexicographically smallest name. Throws AllDropped if every candidate is
/// dropped.
CategoryChoice pick_best_category(std::span<const std::string> candidates,
                                  std::span<const std::uint64_t> seeds,
                                  const CandidateRunner& runner);

bool is_uncertain_candidate(const std::string& name);

ojson to_json(const CategoryChoice& choice);
CategoryChoice category_choice_from_json(const nlohmann::json& j);

struct EvalReport {
    std::string method;
    std::string dataset;
    std::string model_id;
    /// Model whose records guided selection, when it differs (transfer).
    std::string guide_model_id;
    std::string category;
    std::vector<std::uint64_t> seeds;
    std::vector<double> accuracies;
    std::vector<std::size_t> failed;
    /// Percentage points.
    double mean = 0.0;
    double std_dev = 0.0;
    bool single_run = false;
    std::vector<std::string> dropped;
    std::optional<CategoryChoice> choice;

    /// "mean (std)" with one decimal.
    std::string cell() const;
};

/// Mean and sample standard deviation in percentage points. Runs are
/// ordered by seed so the result does not depend on input order.
EvalReport aggregate(std::span<const EvalRun> runs);

ojson to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

/// Method x dataset grid of "mean (std)" cells, rows and columns in order
/// of first appearance.
std::string report_grid_csv(std::span<const EvalReport> reports);

struct DistributionTable {
    std::string model_id;
    std::vector<std::string> rows;
    std::vector<std::string> labels;
    /// counts[row][label]
    std::vector<std::vector<std::size_t>> counts;
    std::size_t cer_w = 0;
    std::size_t cer_r = 0;
    std::size_t unc = 0;

    std::size_t total() const { return cer_w + cer_r + unc; }
    std::size_t row_total(std::size_t row) const;
    /// |Unc| / total; nullopt for an empty table.
    std::optional<double> wavering() const;
    std::string to_csv() const;
    ojson to_json() const;
};

/// Counts per category code and gold label. Without `instances` all
/// counts go to a single "all" column.
DistributionTable distribution_report(std::span<const TripartiteRecord> records,
                                      std::span<const Instance> instances = {},
                                      const LabelSet* labels = nullptr);

/// Counts per vanilla bucket (000, 111, 001/010/100, 011/101/110).
DistributionTable distribution_report(std::span<const VanillaRecord> records,
                                      std::span<const Instance> instances,
                                      const LabelSet& labels);

}  // namespace uncttp
