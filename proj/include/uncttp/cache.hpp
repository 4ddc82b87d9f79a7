#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "uncttp/provider.hpp"

namespace uncttp {

/// SHA-256 over the canonical serialization of (endpoint id, request),
/// stored as 64 lowercase hex characters.
struct CacheKey {
    std::string digest;

    static CacheKey of(const std::string& endpoint_id, const CompletionRequest& request);

    friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

std::string sha256_hex(std::string_view data);

class ResponseCache {
public:
    virtual ~ResponseCache() = default;
    virtual std::optional<CompletionResponse> get(const CacheKey& key) = 0;
    virtual void put(const CacheKey& key, const CompletionResponse& response) = 0;
};

class MemoryCache final : public ResponseCache {
public:
    std::optional<CompletionResponse> get(const CacheKey& key) override;
    void put(const CacheKey& key, const CompletionResponse& response) override;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<CacheKey, CompletionResponse> entries_;
};

/// One JSON file per key, `<dir>/<digest>.json`. Writes go through a
/// temporary file and a rename so readers never observe partial entries.
class DiskCache final : public ResponseCache {
public:
    explicit DiskCache(std::filesystem::path dir);

    std::optional<CompletionResponse> get(const CacheKey& key) override;
    void put(const CacheKey& key, const CompletionResponse& response) override;

private:
    std::filesystem::path path_for(const CacheKey& key) const;

    std::filesystem::path dir_;
};

/// Serves requests from `cache` and forwards misses to `backend`.
/// Concurrent requests for the same key collapse onto one backend call.
class CachingProvider final : public Provider {
public:
    CachingProvider(Provider& backend, ResponseCache& cache) : backend_(backend), cache_(cache) {}

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string endpoint_id() const override { return backend_.endpoint_id(); }
    bool supports_logprobs() const override { return backend_.supports_logprobs(); }

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    static constexpr std::size_t kStripes = 64;

    Provider& backend_;
    ResponseCache& cache_;
    std::array<std::mutex, kStripes> stripes_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

}  // namespace uncttp
