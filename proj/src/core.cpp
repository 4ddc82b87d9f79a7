#include "uncttp/core.hpp"

#include <fstream>
#include <stdexcept>

#include "uncttp/error.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.size() < 2) {
        throw std::invalid_argument("label set needs at least two labels");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        labels_[i] = std::string(text::trim(labels_[i]));
        if (labels_[i].empty()) throw std::invalid_argument("empty label");
        for (std::size_t j = 0; j < i; ++j) {
            if (text::labels_equal(labels_[i], labels_[j])) {
                throw std::invalid_argument("duplicate label '" + labels_[i] + "'");
            }
        }
    }
}

std::optional<std::size_t> LabelSet::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (text::labels_equal(labels_[i], label)) return i;
    }
    return std::nullopt;
}

std::optional<std::string> LabelSet::canonical(std::string_view label) const {
    if (auto i = index_of(label)) return labels_[*i];
    return std::nullopt;
}

std::string_view to_string(Setting::Kind kind) {
    switch (kind) {
        case Setting::Kind::NoLabel: return "no_label";
        case Setting::Kind::RightLabel: return "right_label";
        case Setting::Kind::WrongLabel: return "wrong_label";
    }
    return "no_label";
}

Setting::Kind setting_kind_from_string(std::string_view name) {
    if (name == "no_label") return Setting::Kind::NoLabel;
    if (name == "right_label") return Setting::Kind::RightLabel;
    if (name == "wrong_label") return Setting::Kind::WrongLabel;
    throw std::invalid_argument("unknown setting '" + std::string(name) + "'");
}

std::string_view to_string(CategoryGroup group) {
    switch (group) {
        case CategoryGroup::CerW: return "Cer_W";
        case CategoryGroup::CerR: return "Cer_R";
        case CategoryGroup::Unc: return "Unc";
    }
    return "Unc";
}

CategoryGroup group_from_string(std::string_view name) {
    if (name == "Cer_W") return CategoryGroup::CerW;
    if (name == "Cer_R") return CategoryGroup::CerR;
    if (name == "Unc") return CategoryGroup::Unc;
    throw std::invalid_argument("unknown category group '" + std::string(name) + "'");
}

UncertaintyCategory::UncertaintyCategory(std::string_view code) : code_(code) {
    if (code_.size() != 3 || code_.find_first_not_of("01") != std::string::npos) {
        throw std::invalid_argument("invalid category code '" + code_ + "'");
    }
    if (code_ == "000") {
        group_ = CategoryGroup::CerW;
    } else if (code_ == "111") {
        group_ = CategoryGroup::CerR;
    } else {
        group_ = CategoryGroup::Unc;
    }
}

OutcomeBits UncertaintyCategory::bits() const noexcept {
    return {code_[0] == '1', code_[1] == '1', code_[2] == '1'};
}

UncertaintyCategory category_of(const OutcomeBits& bits) {
    std::string code{bits.no_label ? '1' : '0', bits.right_label ? '1' : '0',
                     bits.wrong_label ? '1' : '0'};
    return UncertaintyCategory(code);
}

const std::array<std::string, 8>& all_codes() {
    static const std::array<std::string, 8> codes{"000", "001", "010", "011",
                                                  "100", "101", "110", "111"};
    return codes;
}

std::vector<std::string> group_members(CategoryGroup group) {
    std::vector<std::string> out;
    for (const auto& code : all_codes()) {
        if (UncertaintyCategory(code).group() == group) out.push_back(code);
    }
    return out;
}

ojson to_json(const TripartiteRecord& r) {
    ojson answers = ojson::array();
    for (const auto& a : r.raw_answers) {
        answers.push_back(a ? ojson(*a) : ojson(nullptr));
    }
    return ojson{{"instance_id", r.instance_id},
                 {"model_id", r.model_id},
                 {"bits", {int(r.bits.no_label), int(r.bits.right_label), int(r.bits.wrong_label)}},
                 {"code", r.category.code()},
                 {"group", std::string(to_string(r.category.group()))},
                 {"raw_answers", std::move(answers)}};
}

TripartiteRecord tripartite_record_from_json(const nlohmann::json& j) {
    TripartiteRecord r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    const auto& bits = j.at("bits");
    if (!bits.is_array() || bits.size() != 3) throw FormatError("bits must have three entries");
    auto bit = [](const nlohmann::json& b) {
        const int v = b.get<int>();
        if (v != 0 && v != 1) throw FormatError("bit must be 0 or 1");
        return v == 1;
    };
    r.bits = {bit(bits[0]), bit(bits[1]), bit(bits[2])};
    r.category = category_of(r.bits);
    if (j.contains("code") && j.at("code").get<std::string>() != r.category.code()) {
        throw FormatError("code does not match bits for " + r.instance_id);
    }
    const auto& answers = j.at("raw_answers");
    if (!answers.is_array() || answers.size() != 3) {
        throw FormatError("raw_answers must have three entries");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (!answers[i].is_null()) r.raw_answers[i] = answers[i].get<std::string>();
    }
    return r;
}

std::vector<nlohmann::json> read_jsonl_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace uncttp
