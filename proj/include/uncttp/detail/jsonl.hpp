#pragma once

#include <vector>

#include "uncttp/error.hpp"

namespace uncttp {

template <typename Parse>
auto read_jsonl(const std::string& path, Parse parse)
    -> std::vector<decltype(parse(std::declval<const nlohmann::json&>()))> {
    std::vector<decltype(parse(std::declval<const nlohmann::json&>()))> out;
    const auto lines = read_jsonl_lines(path);
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(parse(lines[i]));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw FormatError(path + ": record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace uncttp
