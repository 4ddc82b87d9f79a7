#include <cmath>
#include <map>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "uncttp/retrieval.hpp"

using namespace uncttp;

namespace {

std::vector<Instance> corpus(const std::vector<std::string>& texts) {
    std::vector<Instance> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({"d" + std::to_string(i), texts[i], "A"});
    return out;
}

const std::vector<std::string> kToy{"the cat sat on the mat", "the dog sat", "a cat and a dog", "birds fly high"};

}  // namespace

TEST_CASE("BM25 matches hand-evaluated values on a four-document corpus") {
    const auto docs = corpus(kToy);
    const Bm25Index index(docs, {1.5, 0.75});
    CHECK(index.average_length() == doctest::Approx(17.0 / 4.0));
    const auto s = index.scores("cat sat");
    // Frozen values of the Okapi formula with idf = ln(1 + (n - df + .5)/(df + .5)).
    CHECK(std::abs(s[0] - 1.1695783691830341) < 1e-9);
    CHECK(std::abs(s[1] - 0.7988814962385811) < 1e-9);
    CHECK(std::abs(s[2] - 0.6421527013361892) < 1e-9);
    CHECK(s[3] == 0.0);
    const auto t = index.scores("the the dog");
    CHECK(std::abs(t[0] - 1.7489427932495836) < 1e-9);
    CHECK(std::abs(t[1] - 2.396644488715743) < 1e-9);
}

TEST_CASE("BM25 agrees with a brute-force reference on random toy corpora") {
    Rng rng(77);
    const std::vector<std::string> vocab{"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(10);
        std::vector<std::string> docs;
        for (std::size_t i = 0; i < n; ++i) {
            std::string d;
            const std::size_t len = 1 + rng.uniform_index(8);
            for (std::size_t w = 0; w < len; ++w) d += vocab[rng.uniform_index(vocab.size())] + (w % 3 ? " " : ", ");
            docs.push_back(d);
        }
        std::string q;
        for (std::size_t w = 0; w < 1 + rng.uniform_index(4); ++w) q += vocab[rng.uniform_index(vocab.size())] + " ";
        const double k1 = 0.5 + rng.uniform01() * 1.5;
        const double b = rng.uniform01();
        const auto got = Bm25Index(corpus(docs), {k1, b}).scores(q);
        const auto want = oracle::bm25(docs, q, k1, b);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-9);
    }
}

TEST_CASE("BM25 ranking edge cases") {
    const auto docs = corpus(kToy);
    const auto top = rank_bm25({"q", "birds", "A"}, docs);
    CHECK(top.entries.front().first == "d3");

    const auto oov = rank_bm25({"q", "zebra quokka", "A"}, docs);
    for (const auto& [id, s] : oov.entries) CHECK(s == 0.0);
    std::vector<std::string> order;
    for (const auto& [id, s] : oov.entries) order.push_back(id);
    CHECK(order == std::vector<std::string>{"d0", "d1", "d2", "d3"});

    const auto empty = rank_bm25({"q", "", "A"}, docs);
    for (const auto& [id, s] : empty.entries) CHECK(s == 0.0);
}

TEST_CASE("BM25 ranking ignores train order apart from ties") {
    auto docs = corpus(kToy);
    const auto a = rank_bm25({"q", "cat dog", "A"}, docs);
    std::reverse(docs.begin(), docs.end());
    const auto b = rank_bm25({"q", "cat dog", "A"}, docs);
    CHECK(a.entries == b.entries);
}

TEST_CASE("cosine similarity") {
    Eigen::Vector3d x(1, 2, 3), y(2, 4, 6), z(-3, 0, 1);
    CHECK(cosine_similarity(x, y) == doctest::Approx(1.0));
    CHECK(cosine_similarity(x, z) == doctest::Approx(0.0));
    CHECK(cosine_similarity(x, Eigen::Vector3d::Zero().eval()) == 0.0);
    Eigen::Vector3f xf(1, 0, 0), yf(1, 1, 0);
    CHECK(cosine_similarity(xf, yf) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("similarity ranking with TF-IDF") {
    const std::vector<std::string> texts{"red apples fall", "blue ocean waves", "green apples grow", "quiet night", "red night sky"};
    const auto docs = corpus(texts);
    TfidfEmbedder embedder;

    const auto same = rank_similarity({"q", "blue ocean waves", "A"}, docs, embedder);
    CHECK(same.entries.front().first == "d1");
    CHECK(same.entries.front().second == doctest::Approx(1.0));

    const auto orth = rank_similarity({"q", "quiet", "A"}, docs, embedder);
    for (const auto& [id, s] : orth.entries) {
        if (id != "d3") CHECK(s == doctest::Approx(0.0));
    }

    for (const std::string q : {"red apples", "apples night", "ocean sky grow", "unrelated"}) {
        const auto ranked = rank_similarity({"q", q, "A"}, docs, embedder);
        const auto want = oracle::tfidf_cosine(texts, q);
        std::map<std::string, double> got(ranked.entries.begin(), ranked.entries.end());
        for (std::size_t i = 0; i < texts.size(); ++i) CHECK(std::abs(got["d" + std::to_string(i)] - want[i]) < 1e-9);
    }
}

TEST_CASE("TF-IDF rows are L2-normalised") {
    TfidfEmbedder e;
    const std::vector<std::string> texts{"a b c", "a a d", "e"};
    e.fit(texts);
    CHECK(e.dimension() == 5);
    const auto m = e.embed(texts);
    for (Eigen::Index r = 0; r < m.rows(); ++r) CHECK(m.row(r).norm() == doctest::Approx(1.0));
    const std::vector<std::string> unseen{"zzz"};
    CHECK(e.embed(unseen).norm() == 0.0);
    TfidfEmbedder unfit;
    CHECK_THROWS_AS(unfit.embed(texts), EmbedderError);
}
