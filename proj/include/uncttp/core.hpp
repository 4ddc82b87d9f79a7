#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace uncttp {

using ojson = nlohmann::ordered_json;

/// Ordered set of K >= 2 distinct class labels. Lookup is case-insensitive;
/// the stored spelling is the canonical one used in prompts and reports.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    const std::string& operator[](std::size_t i) const { return labels_[i]; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    auto begin() const noexcept { return labels_.begin(); }
    auto end() const noexcept { return labels_.end(); }

    std::optional<std::size_t> index_of(std::string_view label) const;
    bool contains(std::string_view label) const { return index_of(label).has_value(); }
    /// Canonical spelling of `label`, if it belongs to the set.
    std::optional<std::string> canonical(std::string_view label) const;

    friend bool operator==(const LabelSet&, const LabelSet&) = default;

private:
    std::vector<std::string> labels_;
};

struct Instance {
    std::string id;
    std::string text;
    std::string gold;

    friend bool operator==(const Instance&, const Instance&) = default;
};

/// One of the three label-injection conditions of the tripartite test.
struct Setting {
    enum class Kind { NoLabel, RightLabel, WrongLabel };

    Kind kind = Kind::NoLabel;
    /// Label shown to the model; gold for RightLabel, empty for NoLabel.
    std::string injected;

    static Setting no_label() { return {Kind::NoLabel, {}}; }
    static Setting right_label(std::string gold) { return {Kind::RightLabel, std::move(gold)}; }
    static Setting wrong_label(std::string label) { return {Kind::WrongLabel, std::move(label)}; }

    friend bool operator==(const Setting&, const Setting&) = default;
};

std::string_view to_string(Setting::Kind kind);
Setting::Kind setting_kind_from_string(std::string_view name);

/// Correctness of the model under {no, right, wrong} label injection.
/// A Failed answer counts as incorrect.
struct OutcomeBits {
    bool no_label = false;
    bool right_label = false;
    bool wrong_label = false;

    friend bool operator==(const OutcomeBits&, const OutcomeBits&) = default;
};

enum class CategoryGroup { CerW, CerR, Unc };

std::string_view to_string(CategoryGroup group);
CategoryGroup group_from_string(std::string_view name);

class UncertaintyCategory {
public:
    /// Parses a three-character code over {0,1}; throws std::invalid_argument.
    explicit UncertaintyCategory(std::string_view code);

    const std::string& code() const noexcept { return code_; }
    CategoryGroup group() const noexcept { return group_; }
    OutcomeBits bits() const noexcept;

    friend bool operator==(const UncertaintyCategory&, const UncertaintyCategory&) = default;

private:
    std::string code_;
    CategoryGroup group_;
};

/// Concatenates the bits in {no, right, wrong} order; 000 is Cer_W, 111 is
/// Cer_R, every other code is Unc.
UncertaintyCategory category_of(const OutcomeBits& bits);

/// The codes belonging to `group`, in ascending order.
std::vector<std::string> group_members(CategoryGroup group);

/// All eight codes, ascending.
const std::array<std::string, 8>& all_codes();

/// A parsed model answer: a canonical label, or nullopt for Failed.
using ParsedAnswer = std::optional<std::string>;

struct TripartiteRecord {
    std::string instance_id;
    std::string model_id;
    OutcomeBits bits;
    UncertaintyCategory category{"000"};
    /// Ordered {no, right, wrong}.
    std::array<ParsedAnswer, 3> raw_answers;
};

ojson to_json(const TripartiteRecord& r);
TripartiteRecord tripartite_record_from_json(const nlohmann::json& j);

/// Reads a JSONL file; each non-empty line goes through `parse`. Errors
/// carry the path and 1-based line number.
template <typename Parse>
auto read_jsonl(const std::string& path, Parse parse)
    -> std::vector<decltype(parse(std::declval<const nlohmann::json&>()))>;

std::vector<nlohmann::json> read_jsonl_lines(const std::string& path);

}  // namespace uncttp

#include "uncttp/detail/jsonl.hpp"

namespace uncttp {

/// One in-context example as shown to the model.
struct Demonstration {
    std::string instance_id;
    std::string text;
    std::string label;

    friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

}  // namespace uncttp
