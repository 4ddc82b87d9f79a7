#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "uncttp/core.hpp"
#include "uncttp/dataset.hpp"
#include "uncttp/mock_provider.hpp"
#include "uncttp/provider.hpp"

namespace testing {

inline const std::vector<std::string> kTopicWords{"river", "engine", "garden", "market", "winter",
                                                   "planet", "museum", "harbor", "violin", "desert"};
inline const std::vector<std::string> kLabelWords{"bright", "gloomy", "steady", "wild", "calm"};

/// Balanced synthetic instances, labels assigned round-robin. Each text
/// mixes a topic word with a label-flavoured word so retrieval has signal.
inline std::vector<uncttp::Instance> make_instances(const std::string& prefix, std::size_t n,
                                                    const uncttp::LabelSet& labels) {
    std::vector<uncttp::Instance> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i % labels.size();
        std::string text = "note " + std::to_string(i) + " about the " + kTopicWords[(i / labels.size()) % kTopicWords.size()] +
                           " feels " + kLabelWords[l % kLabelWords.size()];
        out.push_back({prefix + "-" + std::to_string(i), text, labels[l]});
    }
    return out;
}

inline std::unordered_map<std::string, std::string> gold_map(const std::vector<uncttp::Instance>& instances) {
    std::unordered_map<std::string, std::string> out;
    for (const auto& i : instances) out[i.id] = i.gold;
    return out;
}

/// train / validation / test splits with the given per-label sizes.
inline uncttp::DatasetSpec make_dataset(const uncttp::LabelSet& labels, std::size_t train, std::size_t validation,
                                        std::size_t test, const std::string& name = "toy") {
    uncttp::DatasetSpec ds;
    ds.name = name;
    ds.labels = labels;
    ds.balance = true;
    ds.splits["train"] = make_instances("tr", train * labels.size(), labels);
    ds.splits["validation"] = make_instances("va", validation * labels.size(), labels);
    ds.splits["test"] = make_instances("te", test * labels.size(), labels);
    return ds;
}

inline uncttp::MockFixture profile_fixture(const uncttp::MockProfile& p, std::uint64_t seed = 0) {
    uncttp::MockFixture f;
    f.profile = p;
    f.seed = seed;
    return f;
}

/// Mock that always answers gold and exposes log-probabilities.
inline uncttp::MockProvider oracle_mock(const uncttp::DatasetSpec& ds, const std::string& model = "oracle") {
    uncttp::MockProfile p;
    p.p0 = 1.0;
    p.f_r = 1.0;
    p.f_w = 0.0;
    p.logprobs = true;
    return uncttp::MockProvider(ds.labels, gold_map(ds.all_instances()), profile_fixture(p), model);
}

/// Provider backed by a callback; counts calls.
class FnProvider final : public uncttp::Provider {
public:
    using Fn = std::function<uncttp::CompletionResponse(const uncttp::CompletionRequest&)>;

    explicit FnProvider(Fn fn, bool logprobs = false, std::string id = "fn") : fn_(std::move(fn)), logprobs_(logprobs), id_(std::move(id)) {}

    uncttp::CompletionResponse complete(const uncttp::CompletionRequest& request) override {
        ++calls_;
        return fn_(request);
    }
    std::string endpoint_id() const override { return id_; }
    bool supports_logprobs() const override { return logprobs_; }
    std::size_t calls() const { return calls_; }

private:
    Fn fn_;
    bool logprobs_;
    std::string id_;
    std::atomic<std::size_t> calls_{0};
};

inline uncttp::CompletionResponse text_response(std::string text) {
    uncttp::CompletionResponse r;
    r.text = std::move(text);
    return r;
}

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("uncttp-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
