#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "uncttp/core.hpp"
#include "uncttp/rng.hpp"
#include "uncttp/tripartite.hpp"

namespace uncttp {

/// K-way N-shot in-context demonstrations with provenance.
struct DemonstrationSet {
    std::vector<Demonstration> items;
    std::string strategy;
    std::string category;
    std::uint64_t seed = 0;
    std::size_t ways = 0;
    std::size_t shots = 0;
    /// How many items came from the random same-label fallback.
    std::size_t supplemented = 0;
};

ojson to_json(const DemonstrationSet& set);
DemonstrationSet demonstration_set_from_json(const nlohmann::json& j);

/// Instances grouped by category code (or vanilla bucket), in training order.
using CategoryPool = std::map<std::string, std::vector<Instance>>;

/// One entry per code in all_codes(), possibly empty. Throws MissingRecords
/// if a training instance has no record.
CategoryPool category_pool(std::span<const TripartiteRecord> records, std::span<const Instance> train);
/// One entry per vanilla bucket.
CategoryPool vanilla_pool(std::span<const VanillaRecord> records, std::span<const Instance> train);

/// Label-interleaved round-robin followed by one seeded shuffle.
std::vector<Demonstration> order_demonstrations(
    const std::vector<std::vector<Demonstration>>& per_label, Rng& rng);

/// Draws N per label from `category` without replacement and fills any
/// shortfall from same-label `fallback` instances not already chosen.
/// Returns nullopt (the category is dropped) when `category` is empty.
/// Throws InsufficientData when a label cannot reach N.
std::optional<DemonstrationSet> assemble(std::span<const Instance> category,
                                         const LabelSet& labels, std::size_t ways,
                                         std::size_t shots, Rng& rng,
                                         std::span<const Instance> fallback);

DemonstrationSet select_random(std::span<const Instance> train, const LabelSet& labels,
                               std::size_t ways, std::size_t shots, Rng& rng);

enum class ScoreOrder { Descending, Ascending };

/// Per label, the N instances with the most extreme score in `order`.
/// Ties are broken by a seeded shuffle so repeats draw different sets.
DemonstrationSet select_by_score(std::span<const Instance> train,
                                 const std::unordered_map<std::string, double>& scores,
                                 const LabelSet& labels, std::size_t ways, std::size_t shots,
                                 ScoreOrder order, Rng& rng);

/// (instance id, score) pairs, descending by score, ties by ascending id.
struct RankedList {
    std::vector<std::pair<std::string, double>> entries;

    static RankedList from_scores(std::span<const Instance> items, std::span<const double> scores);
};

/// The top N of each label from `ranking`, then ordered like any other set.
DemonstrationSet select_from_ranking(const RankedList& ranking, std::span<const Instance> train,
                                     const LabelSet& labels, std::size_t ways, std::size_t shots,
                                     Rng& rng);

/// Throws LeakageError if any demonstration id is in `eval_ids`.
void check_no_leakage(const DemonstrationSet& set, std::span<const Instance> eval_split);

}  // namespace uncttp
