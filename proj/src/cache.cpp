#include "uncttp/cache.hpp"

#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "uncttp/error.hpp"

namespace uncttp {

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

CacheKey CacheKey::of(const std::string& endpoint_id, const CompletionRequest& request) {
    const nlohmann::json canonical{{"endpoint", endpoint_id}, {"request", to_json(request)}};
    return {sha256_hex(canonical.dump())};
}

std::optional<CompletionResponse> MemoryCache::get(const CacheKey& key) {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

void MemoryCache::put(const CacheKey& key, const CompletionResponse& response) {
    std::lock_guard lock(mu_);
    entries_.insert_or_assign(key, response);
}

std::size_t MemoryCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::filesystem::path DiskCache::path_for(const CacheKey& key) const {
    return dir_ / (key.digest + ".json");
}

std::optional<CompletionResponse> DiskCache::get(const CacheKey& key) {
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    try {
        return completion_response_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception&) {
        // corrupt entry: treat as a miss, it is rewritten on put
        return std::nullopt;
    }
}

void DiskCache::put(const CacheKey& key, const CompletionResponse& response) {
    const auto final_path = path_for(key);
    auto tmp = final_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw ConfigError("cannot write cache entry " + tmp.string());
        out << to_json(response).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, final_path);
}

CompletionResponse CachingProvider::complete(const CompletionRequest& request) {
    const auto key = CacheKey::of(backend_.endpoint_id(), request);
    const auto stripe = std::stoul(key.digest.substr(0, 8), nullptr, 16) % kStripes;
    std::lock_guard lock(stripes_[stripe]);
    if (auto cached = cache_.get(key)) {
        ++hits_;
        return *std::move(cached);
    }
    ++misses_;
    auto response = backend_.complete(request);
    cache_.put(key, response);
    return response;
}

}  // namespace uncttp
