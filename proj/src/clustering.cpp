#include "uncttp/clustering.hpp"

#include <unordered_set>

namespace uncttp {

DemonstrationSet select_diversity(std::span<const Instance> train, const LabelSet& labels,
                                  std::size_t ways, std::size_t shots, Embedder& embedder, Rng& rng) {
    if (ways != labels.size()) throw std::invalid_argument("K must equal the label count");
    if (shots == 0) throw std::invalid_argument("N must be at least 1");

    std::vector<std::size_t> label_of(train.size());
    std::vector<std::size_t> available(labels.size(), 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto l = labels.index_of(train[i].gold);
        if (!l) throw UnknownLabel("instance " + train[i].id + " has label '" + train[i].gold + "'");
        label_of[i] = *l;
        ++available[*l];
    }
    for (std::size_t l = 0; l < labels.size(); ++l) {
        if (available[l] < shots) {
            throw InsufficientData("label '" + labels[l] + "' has " + std::to_string(available[l]) +
                                   " instances, need " + std::to_string(shots));
        }
    }

    const auto texts = texts_of(train);
    embedder.fit(texts);
    const Eigen::MatrixXd points = embedder.embed(texts);
    if (points.rows() != static_cast<Eigen::Index>(train.size())) {
        throw EmbedderError("embedder returned the wrong number of rows");
    }
    const std::size_t k = ways * shots;
    const auto first = static_cast<Eigen::Index>(rng.uniform_index(train.size()));
    const auto clusters = kmeans(points, k, first);

    // distance of every point to every centroid
    Eigen::MatrixXd dist(static_cast<Eigen::Index>(k), points.rows());
    for (std::size_t c = 0; c < k; ++c) {
        dist.row(static_cast<Eigen::Index>(c)) =
            (points.rowwise() - clusters.centroids.row(static_cast<Eigen::Index>(c))).rowwise().norm().transpose();
    }

    std::vector<std::size_t> pick(k);
    std::unordered_set<std::size_t> used;
    for (std::size_t c = 0; c < k; ++c) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < train.size(); ++i) {
            const double d = dist(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
            if (!used.contains(i) && d < best) {
                best = d;
                best_i = i;
            }
        }
        pick[c] = best_i;
        used.insert(best_i);
    }

    std::vector<std::size_t> count(labels.size(), 0);
    for (auto i : pick) ++count[label_of[i]];
    for (;;) {
        bool balanced = true;
        for (auto c : count) balanced = balanced && c == shots;
        if (balanced) break;

        double best_cost = std::numeric_limits<double>::infinity();
        std::size_t best_cluster = 0;
        std::size_t best_candidate = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (count[label_of[pick[c]]] <= shots) continue;
            const double current = dist(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(pick[c]));
            for (std::size_t i = 0; i < train.size(); ++i) {
                if (used.contains(i) || count[label_of[i]] >= shots) continue;
                const double cost = dist(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) - current;
                if (cost < best_cost) {
                    best_cost = cost;
                    best_cluster = c;
                    best_candidate = i;
                }
            }
        }
        --count[label_of[pick[best_cluster]]];
        used.erase(pick[best_cluster]);
        pick[best_cluster] = best_candidate;
        used.insert(best_candidate);
        ++count[label_of[best_candidate]];
    }

    std::vector<std::vector<Demonstration>> per_label(labels.size());
    for (auto i : pick) {
        per_label[label_of[i]].push_back({train[i].id, train[i].text, labels[label_of[i]]});
    }
    DemonstrationSet set;
    set.strategy = "diversity";
    set.ways = ways;
    set.shots = shots;
    set.items = order_demonstrations(per_label, rng);
    return set;
}

}  // namespace uncttp
