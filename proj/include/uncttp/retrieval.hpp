#pragma once

#include <chrono>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "uncttp/core.hpp"
#include "uncttp/selection.hpp"

namespace uncttp {

/// Cosine of the angle between two vectors; 0 when either is the zero
/// vector.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
    return a.dot(b) / (na * nb);
}

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
};

/// Okapi BM25 over a fixed training corpus. Corpus statistics come from the
/// training documents only; idf(t) = ln(1 + (n - df + 0.5) / (df + 0.5)).
/// Query tokens contribute once per occurrence.
class Bm25Index {
public:
    Bm25Index(std::span<const Instance> corpus, Bm25Params params = {});

    std::vector<double> scores(std::string_view query) const;
    RankedList rank(std::string_view query) const;

    double idf(const std::string& term) const;
    double average_length() const noexcept { return avgdl_; }

private:
    Bm25Params params_;
    std::vector<Instance> docs_;
    std::vector<std::unordered_map<std::string, int>> tf_;
    std::vector<double> length_;
    std::unordered_map<std::string, int> df_;
    double avgdl_ = 0.0;
};

RankedList rank_bm25(const Instance& test, std::span<const Instance> train, Bm25Params params = {});

/// Maps texts to fixed-dimension vectors (one row per text).
class Embedder {
public:
    virtual ~Embedder() = default;
    /// Called once with the training corpus before any embed().
    virtual void fit(std::span<const std::string> corpus) { (void)corpus; }
    virtual Eigen::MatrixXd embed(std::span<const std::string> texts) const = 0;
};

/// TF-IDF with smoothed idf, ln((1 + n) / (1 + df)) + 1, and L2-normalised
/// rows. Terms unseen during fit() are ignored.
class TfidfEmbedder final : public Embedder {
public:
    void fit(std::span<const std::string> corpus) override;
    Eigen::MatrixXd embed(std::span<const std::string> texts) const override;

    std::size_t dimension() const noexcept { return vocab_.size(); }

private:
    std::map<std::string, Eigen::Index> vocab_;
    Eigen::VectorXd idf_;
};

/// OpenAI-style `POST {endpoint}/embeddings` client.
class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(std::string endpoint, std::string model, std::string api_key,
                   std::chrono::seconds timeout = std::chrono::seconds(60));
    Eigen::MatrixXd embed(std::span<const std::string> texts) const override;

private:
    std::string origin_;
    std::string path_;
    std::string model_;
    std::string api_key_;
    std::chrono::seconds timeout_;
};

/// Embeds the training set once and ranks it against test texts by cosine.
class SimilarityRanker {
public:
    SimilarityRanker(std::span<const Instance> train, Embedder& embedder);
    RankedList rank(std::string_view text) const;

private:
    std::vector<Instance> train_;
    Embedder& embedder_;
    Eigen::MatrixXd train_vectors_;
};

RankedList rank_similarity(const Instance& test, std::span<const Instance> train, Embedder& embedder);

std::vector<std::string> texts_of(std::span<const Instance> instances);

}  // namespace uncttp
