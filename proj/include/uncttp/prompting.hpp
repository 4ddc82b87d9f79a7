#pragma once

#include <span>
#include <string>
#include <vector>

#include "uncttp/core.hpp"
#include "uncttp/provider.hpp"
#include "uncttp/rng.hpp"

namespace uncttp {

/// Prompt bodies with `{slot}` placeholders.
///
/// Slots: `{labels}` (the label enumeration, "a or b" / "a, b, or c"),
/// `{A}`..`{Z}` (the i-th label), `{text}`, `{injected}` (injected-label
/// body only) and `{answer}` (verification suffix only). `{{` and `}}`
/// produce literal braces.
struct PromptTemplate {
    std::string system_preamble;
    std::string no_label_body;
    std::string injected_body;
    std::string verify_suffix;

    static PromptTemplate defaults();
    /// Plain-text file with `[system]`, `[no_label]`, `[injected]` and
    /// `[verify]` sections; absent sections keep their defaults.
    static PromptTemplate load(const std::string& path);
    static PromptTemplate parse(const std::string& contents);

    /// Throws TemplateError if a required slot is missing or the
    /// injected body lacks the stance-keeping instruction.
    void validate() const;
};

inline constexpr std::string_view kStanceSentence = "do not change your stance";

/// "a or b" for two labels, "a, b, or c" for more.
std::string enumerate_labels(const LabelSet& labels);

/// Messages for one tripartite setting: instruction, then the instance text.
std::vector<Message> render(const Instance& instance, const LabelSet& labels,
                            const Setting& setting, const PromptTemplate& tmpl);

/// No-label prompt preceded by "Text: ...\nLabel: ...\n\n" blocks.
std::vector<Message> render_icl(std::span<const Demonstration> demonstrations,
                                const Instance& instance, const LabelSet& labels,
                                const PromptTemplate& tmpl);

/// No-label prompt followed by the verification question about `proposed`.
std::vector<Message> render_verification(const Instance& instance, const LabelSet& labels,
                                         const std::string& proposed, const PromptTemplate& tmpl);

/// Uniform over the K-1 labels other than `gold`.
std::string choose_wrong_label(const std::string& gold, const LabelSet& labels, Rng& rng);
/// Deterministic in (seed, instance id).
std::string choose_wrong_label(const Instance& instance, const LabelSet& labels, std::uint64_t seed);

/// Maps free text onto a label: case-folded scan, labels tried longest
/// first at each position, matches only at word boundaries, earliest match
/// wins. nullopt means Failed.
ParsedAnswer parse_answer(std::string_view text, const LabelSet& labels);

/// Parses a True/False verification reply; nullopt if neither appears.
std::optional<bool> parse_verdict(std::string_view text);

}  // namespace uncttp
