#include "uncttp/selection.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "uncttp/error.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

namespace {

void check_shape(const LabelSet& labels, std::size_t ways, std::size_t shots) {
    if (ways != labels.size()) {
        throw std::invalid_argument("K = " + std::to_string(ways) + " but the label set has " +
                                    std::to_string(labels.size()) + " labels");
    }
    if (shots == 0) throw std::invalid_argument("N must be at least 1");
}

std::vector<std::vector<const Instance*>> by_label(std::span<const Instance> items,
                                                   const LabelSet& labels) {
    std::vector<std::vector<const Instance*>> out(labels.size());
    for (const auto& inst : items) {
        const auto idx = labels.index_of(inst.gold);
        if (!idx) throw UnknownLabel("instance " + inst.id + " has label '" + inst.gold + "'");
        out[*idx].push_back(&inst);
    }
    return out;
}

Demonstration demo_of(const Instance& inst, const LabelSet& labels) {
    return {inst.id, inst.text, *labels.canonical(inst.gold)};
}

template <typename Map>
CategoryPool pool_from(std::span<const Instance> train, const Map& key_of,
                       const std::vector<std::string>& keys) {
    CategoryPool pool;
    for (const auto& k : keys) pool[k];
    for (const auto& inst : train) {
        auto it = key_of.find(inst.id);
        if (it == key_of.end()) throw MissingRecords("no record for training instance " + inst.id);
        pool[it->second].push_back(inst);
    }
    return pool;
}

}  // namespace

ojson to_json(const DemonstrationSet& set) {
    ojson items = ojson::array();
    for (const auto& d : set.items) {
        items.push_back({{"id", d.instance_id}, {"text", d.text}, {"label", d.label}});
    }
    return ojson{{"strategy", set.strategy}, {"category", set.category},
                 {"seed", set.seed},         {"shape", {set.ways, set.shots}},
                 {"supplemented", set.supplemented}, {"items", std::move(items)}};
}

DemonstrationSet demonstration_set_from_json(const nlohmann::json& j) {
    DemonstrationSet s;
    s.strategy = j.at("strategy").get<std::string>();
    s.category = j.value("category", std::string());
    s.seed = j.value("seed", std::uint64_t{0});
    s.ways = j.at("shape").at(0).get<std::size_t>();
    s.shots = j.at("shape").at(1).get<std::size_t>();
    s.supplemented = j.value("supplemented", std::size_t{0});
    for (const auto& item : j.at("items")) {
        s.items.push_back({item.at("id").get<std::string>(), item.at("text").get<std::string>(),
                           item.at("label").get<std::string>()});
    }
    return s;
}

CategoryPool category_pool(std::span<const TripartiteRecord> records,
                           std::span<const Instance> train) {
    std::unordered_map<std::string, std::string> code_of;
    for (const auto& r : records) code_of[r.instance_id] = r.category.code();
    return pool_from(train, code_of, {all_codes().begin(), all_codes().end()});
}

CategoryPool vanilla_pool(std::span<const VanillaRecord> records, std::span<const Instance> train) {
    std::unordered_map<std::string, const VanillaRecord*> rec_of;
    for (const auto& r : records) rec_of[r.instance_id] = &r;
    std::unordered_map<std::string, std::string> bucket_of;
    for (const auto& inst : train) {
        if (auto it = rec_of.find(inst.id); it != rec_of.end()) {
            bucket_of[inst.id] = vanilla_bucket(*it->second, inst.gold);
        }
    }
    return pool_from(train, bucket_of, vanilla_buckets());
}

std::vector<Demonstration> order_demonstrations(
    const std::vector<std::vector<Demonstration>>& per_label, Rng& rng) {
    std::vector<Demonstration> out;
    std::size_t longest = 0;
    for (const auto& l : per_label) longest = std::max(longest, l.size());
    for (std::size_t round = 0; round < longest; ++round) {
        for (const auto& l : per_label) {
            if (round < l.size()) out.push_back(l[round]);
        }
    }
    rng.shuffle(out);
    return out;
}

std::optional<DemonstrationSet> assemble(std::span<const Instance> category,
                                         const LabelSet& labels, std::size_t ways,
                                         std::size_t shots, Rng& rng,
                                         std::span<const Instance> fallback) {
    check_shape(labels, ways, shots);
    if (category.empty()) return std::nullopt;

    DemonstrationSet set;
    set.ways = ways;
    set.shots = shots;
    std::unordered_set<std::string> chosen;
    const auto cat_by_label = by_label(category, labels);
    const auto fb_by_label = by_label(fallback, labels);
    std::vector<std::vector<Demonstration>> per_label(labels.size());

    for (std::size_t l = 0; l < labels.size(); ++l) {
        auto pool = cat_by_label[l];
        rng.shuffle(pool);
        for (const Instance* inst : pool) {
            if (per_label[l].size() == shots) break;
            if (!chosen.insert(inst->id).second) continue;
            per_label[l].push_back(demo_of(*inst, labels));
        }
        if (per_label[l].size() == shots) continue;

        std::vector<const Instance*> extra;
        for (const Instance* inst : fb_by_label[l]) {
            if (!chosen.contains(inst->id)) extra.push_back(inst);
        }
        rng.shuffle(extra);
        for (const Instance* inst : extra) {
            if (per_label[l].size() == shots) break;
            if (!chosen.insert(inst->id).second) continue;
            per_label[l].push_back(demo_of(*inst, labels));
            ++set.supplemented;
        }
        if (per_label[l].size() < shots) {
            throw InsufficientData("label '" + labels[l] + "' has only " +
                                   std::to_string(per_label[l].size()) + " of " +
                                   std::to_string(shots) + " required demonstrations");
        }
    }
    set.items = order_demonstrations(per_label, rng);
    return set;
}

DemonstrationSet select_random(std::span<const Instance> train, const LabelSet& labels,
                               std::size_t ways, std::size_t shots, Rng& rng) {
    check_shape(labels, ways, shots);
    auto grouped = by_label(train, labels);
    std::vector<std::vector<Demonstration>> per_label(labels.size());
    for (std::size_t l = 0; l < labels.size(); ++l) {
        auto& pool = grouped[l];
        if (pool.size() < shots) {
            throw InsufficientData("label '" + labels[l] + "' has " + std::to_string(pool.size()) +
                                   " instances, need " + std::to_string(shots));
        }
        rng.shuffle(pool);
        for (std::size_t i = 0; i < shots; ++i) per_label[l].push_back(demo_of(*pool[i], labels));
    }
    DemonstrationSet set;
    set.strategy = "random";
    set.ways = ways;
    set.shots = shots;
    set.items = order_demonstrations(per_label, rng);
    return set;
}

DemonstrationSet select_by_score(std::span<const Instance> train,
                                 const std::unordered_map<std::string, double>& scores,
                                 const LabelSet& labels, std::size_t ways, std::size_t shots,
                                 ScoreOrder order, Rng& rng) {
    check_shape(labels, ways, shots);
    auto grouped = by_label(train, labels);
    std::vector<std::vector<Demonstration>> per_label(labels.size());
    for (std::size_t l = 0; l < labels.size(); ++l) {
        std::vector<std::pair<double, const Instance*>> scored;
        for (const Instance* inst : grouped[l]) {
            auto it = scores.find(inst->id);
            if (it == scores.end()) throw MissingRecords("no score for training instance " + inst->id);
            scored.emplace_back(it->second, inst);
        }
        if (scored.size() < shots) {
            throw InsufficientData("label '" + labels[l] + "' has " + std::to_string(scored.size()) +
                                   " instances, need " + std::to_string(shots));
        }
        rng.shuffle(scored);
        std::stable_sort(scored.begin(), scored.end(), [order](const auto& a, const auto& b) {
            return order == ScoreOrder::Descending ? a.first > b.first : a.first < b.first;
        });
        for (std::size_t i = 0; i < shots; ++i) per_label[l].push_back(demo_of(*scored[i].second, labels));
    }
    DemonstrationSet set;
    set.ways = ways;
    set.shots = shots;
    set.items = order_demonstrations(per_label, rng);
    return set;
}

RankedList RankedList::from_scores(std::span<const Instance> items, std::span<const double> scores) {
    RankedList out;
    out.entries.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) out.entries.emplace_back(items[i].id, scores[i]);
    std::sort(out.entries.begin(), out.entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

DemonstrationSet select_from_ranking(const RankedList& ranking, std::span<const Instance> train,
                                     const LabelSet& labels, std::size_t ways, std::size_t shots,
                                     Rng& rng) {
    check_shape(labels, ways, shots);
    std::unordered_map<std::string, const Instance*> by_id;
    for (const auto& inst : train) by_id[inst.id] = &inst;
    std::vector<std::vector<Demonstration>> per_label(labels.size());
    std::size_t picked = 0;
    for (const auto& [id, score] : ranking.entries) {
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        const auto l = labels.index_of(it->second->gold);
        if (!l || per_label[*l].size() == shots) continue;
        per_label[*l].push_back(demo_of(*it->second, labels));
        if (++picked == ways * shots) break;
    }
    for (std::size_t l = 0; l < labels.size(); ++l) {
        if (per_label[l].size() < shots) {
            throw InsufficientData("ranking holds fewer than " + std::to_string(shots) +
                                   " instances of label '" + labels[l] + "'");
        }
    }
    DemonstrationSet set;
    set.ways = ways;
    set.shots = shots;
    set.items = order_demonstrations(per_label, rng);
    return set;
}

void check_no_leakage(const DemonstrationSet& set, std::span<const Instance> eval_split) {
    std::unordered_set<std::string> eval_ids;
    for (const auto& inst : eval_split) eval_ids.insert(inst.id);
    for (const auto& d : set.items) {
        if (eval_ids.contains(d.instance_id)) {
            throw LeakageError("demonstration " + d.instance_id + " is part of the evaluation split");
        }
    }
}

}  // namespace uncttp
