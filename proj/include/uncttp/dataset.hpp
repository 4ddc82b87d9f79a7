#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uncttp/core.hpp"
#include "uncttp/rng.hpp"

namespace uncttp {

/// A labelled dataset and its splits. `ingest` stores everything under the
/// "all" split; `split` produces "train", "validation" and "test".
struct DatasetSpec {
    std::string name;
    LabelSet labels;
    bool balance = false;
    std::map<std::string, std::vector<Instance>> splits;

    const std::vector<Instance>& split(const std::string& name) const;
    /// Every instance across all splits, splits in name order.
    std::vector<Instance> all_instances() const;
    /// Throws FormatError if ids repeat across or within splits, or a gold
    /// label is outside the label set.
    void validate() const;
};

enum class InputFormat { Csv, Jsonl };

InputFormat input_format_from_string(std::string_view name);

struct IngestOptions {
    InputFormat format = InputFormat::Csv;
    std::string text_column = "text";
    std::string label_column = "label";
    /// Ids default to "row-{index}" (0-based data row) when empty or absent.
    std::string id_column = "id";
    /// Allowed labels in prompt order; inferred in order of first
    /// appearance when empty.
    std::vector<std::string> labels;
    std::string name;
};

/// Reads a CSV (RFC 4180 quoting, header row) or JSONL file. Throws
/// FormatError on malformed input and UnknownLabel, listing every
/// offending line, on labels outside `options.labels`.
DatasetSpec ingest(const std::string& path, const IngestOptions& options);

/// One `{"id","text","label"}` object per line.
std::string serialize_jsonl(std::span<const Instance> instances);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
};

/// Seeded, disjoint split of every instance in `dataset`. With `balance`,
/// each split holds size / K instances per label; sizes not divisible by K
/// or exceeding a label's supply raise InfeasibleBalance.
DatasetSpec split(const DatasetSpec& dataset, const SplitSizes& sizes, bool balance, Rng& rng);

ojson to_json(const DatasetSpec& spec);
DatasetSpec dataset_from_json(const nlohmann::json& j);
DatasetSpec load_dataset(const std::string& path);
void save_dataset(const DatasetSpec& spec, const std::string& path);

/// Parses a flat `key = value` file; `#` starts a comment line. Throws
/// ConfigError with file:line on malformed lines or duplicate keys.
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Splits a comma-separated list, trimming whitespace and dropping empties.
std::vector<std::string> split_list(std::string_view s);

}  // namespace uncttp
