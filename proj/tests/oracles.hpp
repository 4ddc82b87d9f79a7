#pragma once

// Brute-force references for retrieval and clustering, written against std
// containers only.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

/// Lower-cased alphanumeric runs.
inline std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// Textbook Okapi BM25 with idf = ln(1 + (n - df + .5) / (df + .5)).
inline std::vector<double> bm25(const std::vector<std::string>& docs, const std::string& query, double k1, double b) {
    std::vector<std::vector<std::string>> d;
    double total = 0;
    for (const auto& doc : docs) {
        d.push_back(words(doc));
        total += static_cast<double>(d.back().size());
    }
    const double n = static_cast<double>(d.size());
    const double avg = total / n;
    std::vector<double> out(d.size(), 0.0);
    for (const auto& term : words(query)) {
        double df = 0;
        for (const auto& doc : d) df += std::count(doc.begin(), doc.end(), term) > 0 ? 1 : 0;
        if (df == 0) continue;
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double f = static_cast<double>(std::count(d[i].begin(), d[i].end(), term));
            if (f == 0) continue;
            out[i] += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * static_cast<double>(d[i].size()) / avg));
        }
    }
    return out;
}

/// Cosine between TF-IDF vectors (smoothed idf, fitted on `docs`).
inline std::vector<double> tfidf_cosine(const std::vector<std::string>& docs, const std::string& query) {
    std::map<std::string, double> df;
    for (const auto& doc : docs) {
        const auto w = words(doc);
        for (const auto& t : std::set<std::string>(w.begin(), w.end())) df[t] += 1;
    }
    const double n = static_cast<double>(docs.size());
    auto vec = [&](const std::string& s) {
        std::map<std::string, double> v;
        for (const auto& t : words(s)) {
            if (df.count(t)) v[t] += 1;
        }
        for (auto& [t, x] : v) x *= std::log((1 + n) / (1 + df[t])) + 1;
        return v;
    };
    const auto q = vec(query);
    std::vector<double> out;
    for (const auto& doc : docs) {
        const auto v = vec(doc);
        double dot = 0, nq = 0, nv = 0;
        for (const auto& [t, x] : q) {
            nq += x * x;
            if (auto it = v.find(t); it != v.end()) dot += x * it->second;
        }
        for (const auto& [t, x] : v) nv += x * x;
        out.push_back(nq > 0 && nv > 0 ? dot / std::sqrt(nq * nv) : 0.0);
    }
    return out;
}

using Point = std::array<double, 2>;

inline double sq(const Point& a, const Point& b) {
    return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
}

/// Lloyd iteration seeded at `first`, then repeatedly at the point farthest
/// from its nearest seed (lowest index on ties). Stops after 100 rounds or
/// once no centroid moves by 1e-6, then reassigns once more.
inline std::vector<std::size_t> lloyd(const std::vector<Point>& pts, std::size_t k, std::size_t first) {
    std::vector<Point> cent{pts[first]};
    while (cent.size() < k) {
        double best = -1;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& c : cent) d = std::min(d, sq(pts[i], c));
            if (d > best) {
                best = d;
                arg = i;
            }
        }
        cent.push_back(pts[arg]);
    }
    std::vector<std::size_t> assign(pts.size());
    auto reassign = [&] {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < k; ++c) {
                if (sq(pts[i], cent[c]) < sq(pts[i], cent[arg])) arg = c;
            }
            assign[i] = arg;
        }
    };
    for (int it = 0; it < 100; ++it) {
        reassign();
        double moved = 0;
        for (std::size_t c = 0; c < k; ++c) {
            Point sum{0, 0};
            int n = 0;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (assign[i] == c) {
                    sum[0] += pts[i][0];
                    sum[1] += pts[i][1];
                    ++n;
                }
            }
            if (n == 0) continue;
            const Point next{sum[0] / n, sum[1] / n};
            moved = std::max(moved, std::sqrt(sq(next, cent[c])));
            cent[c] = next;
        }
        if (moved < 1e-6) break;
    }
    reassign();
    return assign;
}

}  // namespace oracle
