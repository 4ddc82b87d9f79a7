#include "uncttp/prompting.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "uncttp/error.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

namespace {

struct SlotValues {
    const LabelSet* labels = nullptr;
    const std::string* text = nullptr;
    const std::string* injected = nullptr;
    const std::string* answer = nullptr;
};

std::string fill(std::string_view body, const SlotValues& v, std::string_view section) {
    std::string out;
    out.reserve(body.size() + 64);
    for (std::size_t i = 0; i < body.size(); ++i) {
        const char c = body[i];
        if (c == '}' ) {
            if (i + 1 < body.size() && body[i + 1] == '}') ++i;
            out.push_back('}');
            continue;
        }
        if (c != '{') {
            out.push_back(c);
            continue;
        }
        if (i + 1 < body.size() && body[i + 1] == '{') {
            out.push_back('{');
            ++i;
            continue;
        }
        const auto close = body.find('}', i);
        if (close == std::string_view::npos) {
            throw TemplateError(std::string(section) + ": unterminated slot");
        }
        const auto name = body.substr(i + 1, close - i - 1);
        if (name == "labels" && v.labels) {
            out += enumerate_labels(*v.labels);
        } else if (name == "text" && v.text) {
            out += *v.text;
        } else if (name == "injected" && v.injected) {
            out += *v.injected;
        } else if (name == "answer" && v.answer) {
            out += *v.answer;
        } else if (name.size() == 1 && name[0] >= 'A' && name[0] <= 'Z' && v.labels &&
                   static_cast<std::size_t>(name[0] - 'A') < v.labels->size()) {
            out += (*v.labels)[static_cast<std::size_t>(name[0] - 'A')];
        } else {
            throw TemplateError(std::string(section) + ": unknown slot {" + std::string(name) + "}");
        }
        i = close;
    }
    return out;
}

bool has_slot(std::string_view body, std::string_view slot) {
    return body.find("{" + std::string(slot) + "}") != std::string_view::npos;
}

std::vector<Message> with_preamble(const PromptTemplate& tmpl, std::string user) {
    std::vector<Message> messages;
    if (!tmpl.system_preamble.empty()) {
        messages.push_back({Message::Role::System, tmpl.system_preamble});
    }
    messages.push_back({Message::Role::User, std::move(user)});
    return messages;
}

void require_member(const Instance& instance, const LabelSet& labels) {
    if (!labels.contains(instance.gold)) {
        throw InvalidInstance("gold label '" + instance.gold + "' of " + instance.id +
                              " is not in the label set");
    }
}

std::string no_label_prompt(const Instance& instance, const LabelSet& labels,
                            const PromptTemplate& tmpl) {
    SlotValues v{&labels, &instance.text, nullptr, nullptr};
    return fill(tmpl.no_label_body, v, "no_label");
}

}  // namespace

PromptTemplate PromptTemplate::defaults() {
    PromptTemplate t;
    t.no_label_body =
        "Your job is to determine whether the text is {labels}. "
        "Answer with exactly one label.\n\nText: {text}";
    t.injected_body =
        "Your job is to determine whether the text is {labels} by reference to the given label, "
        "which presents the ground truth of the text as {injected}. Despite having to refer to "
        "the provided labels, you should still have your own thinking and do not change your "
        "stance so easily. Answer with exactly one label.\n\nText: {text}";
    t.verify_suffix =
        "Proposed answer: {answer}. Is the proposed answer correct? Answer True or False.";
    return t;
}

PromptTemplate PromptTemplate::parse(const std::string& contents) {
    PromptTemplate t = defaults();
    std::istringstream in(contents);
    std::string line;
    std::string* current = nullptr;
    std::string buffer;
    bool any_section = false;
    auto flush = [&] {
        if (!current) return;
        while (!buffer.empty() && (buffer.back() == '\n' || buffer.back() == '\r')) buffer.pop_back();
        *current = buffer;
        buffer.clear();
    };
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto trimmed = text::trim(line);
        if (trimmed.size() > 2 && trimmed.front() == '[' && trimmed.back() == ']') {
            flush();
            const auto name = trimmed.substr(1, trimmed.size() - 2);
            if (name == "system") {
                current = &t.system_preamble;
            } else if (name == "no_label") {
                current = &t.no_label_body;
            } else if (name == "injected") {
                current = &t.injected_body;
            } else if (name == "verify") {
                current = &t.verify_suffix;
            } else {
                throw TemplateError("line " + std::to_string(lineno) + ": unknown section [" +
                                    std::string(name) + "]");
            }
            any_section = true;
            continue;
        }
        if (!current) {
            if (trimmed.empty() || trimmed.front() == '#') continue;
            throw TemplateError("line " + std::to_string(lineno) + ": text outside a section");
        }
        buffer += line;
        buffer += '\n';
    }
    flush();
    if (!any_section) throw TemplateError("template file has no sections");
    t.validate();
    return t;
}

PromptTemplate PromptTemplate::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TemplateError("cannot open template file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const TemplateError& e) {
        throw TemplateError(path + ": " + e.what());
    }
}

void PromptTemplate::validate() const {
    if (!has_slot(no_label_body, "text")) throw TemplateError("no_label: missing {text} slot");
    if (!has_slot(injected_body, "text")) throw TemplateError("injected: missing {text} slot");
    if (!has_slot(injected_body, "injected")) {
        throw TemplateError("injected: missing {injected} slot");
    }
    if (text::casefold(injected_body).find(kStanceSentence) == std::string::npos) {
        throw TemplateError("injected: missing the stance-keeping instruction");
    }
    if (!has_slot(verify_suffix, "answer")) throw TemplateError("verify: missing {answer} slot");
}

std::string enumerate_labels(const LabelSet& labels) {
    if (labels.size() == 2) return labels[0] + " or " + labels[1];
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i > 0) out += ", ";
        if (i + 1 == labels.size()) out += "or ";
        out += labels[i];
    }
    return out;
}

std::vector<Message> render(const Instance& instance, const LabelSet& labels,
                            const Setting& setting, const PromptTemplate& tmpl) {
    tmpl.validate();
    require_member(instance, labels);
    switch (setting.kind) {
        case Setting::Kind::NoLabel:
            return with_preamble(tmpl, no_label_prompt(instance, labels, tmpl));
        case Setting::Kind::RightLabel: {
            if (!setting.injected.empty() && !text::labels_equal(setting.injected, instance.gold)) {
                throw InvalidInstance("right-label setting must inject the gold label");
            }
            const auto injected = *labels.canonical(instance.gold);
            SlotValues v{&labels, &instance.text, &injected, nullptr};
            return with_preamble(tmpl, fill(tmpl.injected_body, v, "injected"));
        }
        case Setting::Kind::WrongLabel: {
            const auto injected = labels.canonical(setting.injected);
            if (!injected) {
                throw InvalidInstance("injected label '" + setting.injected +
                                      "' is not in the label set");
            }
            if (text::labels_equal(*injected, instance.gold)) {
                throw InvalidInstance("wrong-label setting injects the gold label of " + instance.id);
            }
            SlotValues v{&labels, &instance.text, &*injected, nullptr};
            return with_preamble(tmpl, fill(tmpl.injected_body, v, "injected"));
        }
    }
    throw InvalidInstance("unknown setting");
}

std::vector<Message> render_icl(std::span<const Demonstration> demonstrations,
                                const Instance& instance, const LabelSet& labels,
                                const PromptTemplate& tmpl) {
    tmpl.validate();
    require_member(instance, labels);
    std::string user;
    for (const auto& d : demonstrations) {
        user += "Text: " + d.text + "\nLabel: " + d.label + "\n\n";
    }
    user += no_label_prompt(instance, labels, tmpl);
    return with_preamble(tmpl, std::move(user));
}

std::vector<Message> render_verification(const Instance& instance, const LabelSet& labels,
                                         const std::string& proposed, const PromptTemplate& tmpl) {
    tmpl.validate();
    require_member(instance, labels);
    SlotValues v{&labels, &instance.text, nullptr, &proposed};
    std::string user = no_label_prompt(instance, labels, tmpl);
    user += "\n\n";
    user += fill(tmpl.verify_suffix, v, "verify");
    return with_preamble(tmpl, std::move(user));
}

std::string choose_wrong_label(const std::string& gold, const LabelSet& labels, Rng& rng) {
    if (!labels.contains(gold)) {
        throw InvalidInstance("gold label '" + gold + "' is not in the label set");
    }
    std::vector<std::string> wrong;
    for (const auto& l : labels) {
        if (!text::labels_equal(l, gold)) wrong.push_back(l);
    }
    if (wrong.size() == 1) return wrong.front();
    return wrong[rng.uniform_index(wrong.size())];
}

std::string choose_wrong_label(const Instance& instance, const LabelSet& labels, std::uint64_t seed) {
    auto rng = Rng::for_instance(seed, instance.id);
    return choose_wrong_label(instance.gold, labels, rng);
}

ParsedAnswer parse_answer(std::string_view raw, const LabelSet& labels) {
    const std::string folded = text::casefold(raw);
    std::vector<std::pair<std::string, std::size_t>> candidates;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        candidates.emplace_back(text::casefold(text::trim(labels[i])), i);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

    for (std::size_t pos = 0; pos < folded.size(); ++pos) {
        for (const auto& [label, index] : candidates) {
            if (folded.compare(pos, label.size(), label) != 0) continue;
            const bool left_ok = pos == 0 || !text::is_word_char(folded[pos - 1]) ||
                                 !text::is_word_char(label.front());
            const std::size_t end = pos + label.size();
            const bool right_ok = end == folded.size() || !text::is_word_char(folded[end]) ||
                                  !text::is_word_char(label.back());
            if (left_ok && right_ok) return labels[index];
        }
    }
    return std::nullopt;
}

std::optional<bool> parse_verdict(std::string_view raw) {
    static const LabelSet verdicts({"True", "False"});
    const auto v = parse_answer(raw, verdicts);
    if (!v) return std::nullopt;
    return *v == "True";
}

}  // namespace uncttp
