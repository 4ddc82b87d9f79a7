#include "uncttp/retrieval.hpp"

#include <cmath>
#include <set>

#include <httplib.h>

#include "uncttp/error.hpp"
#include "uncttp/http_provider.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

std::vector<std::string> texts_of(std::span<const Instance> instances) {
    std::vector<std::string> out;
    out.reserve(instances.size());
    for (const auto& i : instances) out.push_back(i.text);
    return out;
}

Bm25Index::Bm25Index(std::span<const Instance> corpus, Bm25Params params)
    : params_(params), docs_(corpus.begin(), corpus.end()) {
    double total = 0.0;
    for (const auto& doc : docs_) {
        std::unordered_map<std::string, int> tf;
        const auto tokens = text::tokenize(doc.text);
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [t, c] : tf) ++df_[t];
        length_.push_back(static_cast<double>(tokens.size()));
        total += static_cast<double>(tokens.size());
        tf_.push_back(std::move(tf));
    }
    avgdl_ = docs_.empty() ? 0.0 : total / static_cast<double>(docs_.size());
}

double Bm25Index::idf(const std::string& term) const {
    auto it = df_.find(term);
    if (it == df_.end()) return 0.0;
    const double n = static_cast<double>(docs_.size());
    const double df = it->second;
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> Bm25Index::scores(std::string_view query) const {
    std::vector<double> out(docs_.size(), 0.0);
    const auto terms = text::tokenize(query);
    for (const auto& term : terms) {
        if (!df_.contains(term)) continue;
        const double w = idf(term);
        for (std::size_t d = 0; d < docs_.size(); ++d) {
            auto it = tf_[d].find(term);
            if (it == tf_[d].end()) continue;
            const double f = it->second;
            const double rel_len = avgdl_ > 0.0 ? length_[d] / avgdl_ : 0.0;
            const double norm = params_.k1 * (1.0 - params_.b + params_.b * rel_len);
            out[d] += w * f * (params_.k1 + 1.0) / (f + norm);
        }
    }
    return out;
}

RankedList Bm25Index::rank(std::string_view query) const {
    const auto s = scores(query);
    return RankedList::from_scores(docs_, s);
}

RankedList rank_bm25(const Instance& test, std::span<const Instance> train, Bm25Params params) {
    return Bm25Index(train, params).rank(test.text);
}

void TfidfEmbedder::fit(std::span<const std::string> corpus) {
    std::map<std::string, int> df;
    for (const auto& doc : corpus) {
        const auto tokens = text::tokenize(doc);
        for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) ++df[t];
    }
    vocab_.clear();
    idf_.resize(static_cast<Eigen::Index>(df.size()));
    const double n = static_cast<double>(corpus.size());
    Eigen::Index i = 0;
    for (const auto& [term, count] : df) {
        vocab_[term] = i;
        idf_(i) = std::log((1.0 + n) / (1.0 + count)) + 1.0;
        ++i;
    }
}

Eigen::MatrixXd TfidfEmbedder::embed(std::span<const std::string> texts) const {
    if (vocab_.empty()) throw EmbedderError("TF-IDF embedder used before fit() or with an empty corpus");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(texts.size()),
                                                static_cast<Eigen::Index>(vocab_.size()));
    for (std::size_t r = 0; r < texts.size(); ++r) {
        for (const auto& t : text::tokenize(texts[r])) {
            if (auto it = vocab_.find(t); it != vocab_.end()) {
                out(static_cast<Eigen::Index>(r), it->second) += 1.0;
            }
        }
        auto row = out.row(static_cast<Eigen::Index>(r));
        row.array() *= idf_.transpose().array();
        const double n = row.norm();
        if (n > 0.0) row /= n;
    }
    return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model, std::string api_key,
                               std::chrono::seconds timeout)
    : model_(std::move(model)), api_key_(std::move(api_key)), timeout_(timeout) {
    std::tie(origin_, path_) = split_url(endpoint);
}

Eigen::MatrixXd RemoteEmbedder::embed(std::span<const std::string> texts) const {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const nlohmann::json body{{"model", model_}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto res = client.Post(path_ + "/embeddings", headers, body.dump(), "application/json");
    if (!res) throw EmbedderError("embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw EmbedderError("embedding endpoint returned HTTP " + std::to_string(res->status));
    try {
        const auto j = nlohmann::json::parse(res->body);
        const auto& data = j.at("data");
        if (data.size() != texts.size()) throw EmbedderError("embedding count mismatch");
        Eigen::MatrixXd out;
        for (std::size_t r = 0; r < data.size(); ++r) {
            const auto vec = data.at(r).at("embedding").get<std::vector<double>>();
            if (r == 0) out.resize(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(vec.size()));
            if (vec.size() != static_cast<std::size_t>(out.cols())) {
                throw EmbedderError("embeddings have inconsistent dimensions");
            }
            out.row(static_cast<Eigen::Index>(r)) =
                Eigen::Map<const Eigen::RowVectorXd>(vec.data(), static_cast<Eigen::Index>(vec.size()));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw EmbedderError(std::string("malformed embedding response: ") + e.what());
    }
}

SimilarityRanker::SimilarityRanker(std::span<const Instance> train, Embedder& embedder)
    : train_(train.begin(), train.end()), embedder_(embedder) {
    const auto texts = texts_of(train_);
    embedder_.fit(texts);
    train_vectors_ = embedder_.embed(texts);
    if (train_vectors_.rows() != static_cast<Eigen::Index>(train_.size())) {
        throw EmbedderError("embedder returned the wrong number of rows");
    }
}

RankedList SimilarityRanker::rank(std::string_view text) const {
    const std::string query(text);
    const Eigen::MatrixXd q = embedder_.embed(std::span<const std::string>(&query, 1));
    if (q.rows() != 1 || q.cols() != train_vectors_.cols()) {
        throw EmbedderError("query embedding has the wrong dimension");
    }
    std::vector<double> scores(train_.size());
    for (std::size_t i = 0; i < train_.size(); ++i) {
        scores[i] = cosine_similarity(q.row(0), train_vectors_.row(static_cast<Eigen::Index>(i)));
    }
    return RankedList::from_scores(train_, scores);
}

RankedList rank_similarity(const Instance& test, std::span<const Instance> train, Embedder& embedder) {
    return SimilarityRanker(train, embedder).rank(test.text);
}

}  // namespace uncttp
