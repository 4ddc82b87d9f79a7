#include "uncttp/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "uncttp/error.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

namespace {

struct CsvRecord {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRecord> parse_csv(const std::string& path, const std::string& data) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = current.fields.size() == 1 && current.fields[0].empty();
        if (!blank) records.push_back(std::move(current));
        current = CsvRecord{};
        current.line = line;
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            if (field_started) {
                throw FormatError(path + ":" + std::to_string(line) + ": stray quote inside field");
            }
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // handled with the following \n
        } else if (c == '\n') {
            ++line;
            end_record();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw FormatError(path + ": unterminated quoted field");
    if (field_started || !current.fields.empty() || !field.empty()) end_record();
    return records;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RawRow {
    std::size_t line;
    std::string id;
    std::string text;
    std::string label;
};

std::vector<RawRow> read_csv_rows(const std::string& path, const IngestOptions& o) {
    const auto records = parse_csv(path, read_file(path));
    if (records.empty()) throw FormatError(path + ": empty file");
    const auto& header = records.front().fields;
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (text::trim(header[i]) == name) return i;
        }
        return std::nullopt;
    };
    const auto text_col = column(o.text_column);
    const auto label_col = column(o.label_column);
    if (!text_col) throw FormatError(path + ": missing column '" + o.text_column + "'");
    if (!label_col) throw FormatError(path + ": missing column '" + o.label_column + "'");
    const auto id_col = o.id_column.empty() ? std::nullopt : column(o.id_column);

    std::vector<RawRow> rows;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != header.size()) {
            throw FormatError(path + ":" + std::to_string(rec.line) + ": expected " +
                              std::to_string(header.size()) + " fields, found " +
                              std::to_string(rec.fields.size()));
        }
        RawRow row{rec.line, {}, rec.fields[*text_col], rec.fields[*label_col]};
        if (id_col) row.id = rec.fields[*id_col];
        if (row.id.empty()) row.id = "row-" + std::to_string(r - 1);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<RawRow> read_jsonl_rows(const std::string& path, const IngestOptions& o) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::vector<RawRow> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto where = path + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(where + ": " + e.what());
        }
        if (!j.is_object()) throw FormatError(where + ": expected a JSON object");
        auto field = [&](const std::string& name, bool required) -> std::string {
            if (!j.contains(name) || j.at(name).is_null()) {
                if (required) throw FormatError(where + ": missing field '" + name + "'");
                return {};
            }
            const auto& v = j.at(name);
            return v.is_string() ? v.get<std::string>() : v.dump();
        };
        RawRow row{lineno, o.id_column.empty() ? std::string() : field(o.id_column, false),
                   field(o.text_column, true), field(o.label_column, true)};
        if (row.id.empty()) row.id = "row-" + std::to_string(index);
        rows.push_back(std::move(row));
        ++index;
    }
    return rows;
}

void check_disjoint_ids(const std::vector<Instance>& instances, const std::string& context) {
    std::unordered_set<std::string> seen;
    for (const auto& inst : instances) {
        if (!seen.insert(inst.id).second) {
            throw FormatError(context + ": duplicate instance id '" + inst.id + "'");
        }
    }
}

}  // namespace

const std::vector<Instance>& DatasetSpec::split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw FormatError("dataset has no split '" + name + "'");
    return it->second;
}

std::vector<Instance> DatasetSpec::all_instances() const {
    std::vector<Instance> out;
    for (const auto& [name, instances] : splits) out.insert(out.end(), instances.begin(), instances.end());
    return out;
}

void DatasetSpec::validate() const {
    check_disjoint_ids(all_instances(), "dataset " + name);
    for (const auto& [split_name, instances] : splits) {
        for (const auto& inst : instances) {
            if (!labels.contains(inst.gold)) {
                throw FormatError("instance " + inst.id + " in split " + split_name +
                                  " has label '" + inst.gold + "' outside the label set");
            }
            if (inst.text.empty()) throw FormatError("instance " + inst.id + " has empty text");
        }
    }
}

InputFormat input_format_from_string(std::string_view name) {
    if (name == "csv") return InputFormat::Csv;
    if (name == "jsonl") return InputFormat::Jsonl;
    throw ConfigError("unknown input format '" + std::string(name) + "' (expected csv or jsonl)");
}

DatasetSpec ingest(const std::string& path, const IngestOptions& options) {
    const auto rows = options.format == InputFormat::Csv ? read_csv_rows(path, options)
                                                         : read_jsonl_rows(path, options);
    std::vector<std::string> label_names = options.labels;
    if (label_names.empty()) {
        for (const auto& row : rows) {
            const auto l = std::string(text::trim(row.label));
            bool known = false;
            for (const auto& existing : label_names) known = known || text::labels_equal(existing, l);
            if (!known && !l.empty()) label_names.push_back(l);
        }
    }
    DatasetSpec spec;
    spec.name = options.name;
    try {
        spec.labels = LabelSet(label_names);
    } catch (const std::invalid_argument& e) {
        throw FormatError(path + ": " + e.what());
    }

    std::vector<std::string> unknown;
    auto& all = spec.splits["all"];
    for (const auto& row : rows) {
        const auto canonical = spec.labels.canonical(row.label);
        if (!canonical) {
            unknown.push_back(path + ":" + std::to_string(row.line) + ": '" + row.label + "'");
            continue;
        }
        if (text::trim(row.text).empty()) {
            throw FormatError(path + ":" + std::to_string(row.line) + ": empty text");
        }
        all.push_back({row.id, row.text, *canonical});
    }
    if (!unknown.empty()) {
        std::string msg = "unknown label(s):";
        for (const auto& u : unknown) msg += "\n  " + u;
        throw UnknownLabel(msg);
    }
    check_disjoint_ids(all, path);
    return spec;
}

std::string serialize_jsonl(std::span<const Instance> instances) {
    std::string out;
    for (const auto& inst : instances) {
        out += ojson{{"id", inst.id}, {"text", inst.text}, {"label", inst.gold}}.dump();
        out += '\n';
    }
    return out;
}

DatasetSpec split(const DatasetSpec& dataset, const SplitSizes& sizes, bool balance, Rng& rng) {
    const auto pool = dataset.all_instances();
    const std::size_t total = sizes.train + sizes.validation + sizes.test;
    if (total > pool.size()) {
        throw InfeasibleBalance("requested " + std::to_string(total) + " instances but only " +
                                std::to_string(pool.size()) + " exist");
    }
    DatasetSpec out;
    out.name = dataset.name;
    out.labels = dataset.labels;
    out.balance = balance;
    const std::array<std::pair<const char*, std::size_t>, 3> parts{
        {{"train", sizes.train}, {"validation", sizes.validation}, {"test", sizes.test}}};
    for (const auto& [name, n] : parts) out.splits[name];

    if (!balance) {
        auto shuffled = pool;
        rng.shuffle(shuffled);
        std::size_t offset = 0;
        for (const auto& [name, n] : parts) {
            out.splits[name].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(offset),
                                    shuffled.begin() + static_cast<std::ptrdiff_t>(offset + n));
            offset += n;
        }
        return out;
    }

    const std::size_t k = dataset.labels.size();
    for (const auto& [name, n] : parts) {
        if (n % k != 0) {
            throw InfeasibleBalance(std::string(name) + " size " + std::to_string(n) +
                                    " is not divisible by " + std::to_string(k) + " labels");
        }
    }
    std::vector<std::vector<Instance>> by_label(k);
    for (const auto& inst : pool) by_label[*dataset.labels.index_of(inst.gold)].push_back(inst);
    for (std::size_t l = 0; l < k; ++l) {
        const std::size_t need = total / k;
        if (by_label[l].size() < need) {
            throw InfeasibleBalance("label '" + dataset.labels[l] + "' has " +
                                    std::to_string(by_label[l].size()) + " instances, " +
                                    std::to_string(need) + " needed for a balanced split");
        }
        rng.shuffle(by_label[l]);
    }
    std::vector<std::size_t> cursor(k, 0);
    for (const auto& [name, n] : parts) {
        auto& dest = out.splits[name];
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t i = 0; i < n / k; ++i) dest.push_back(by_label[l][cursor[l]++]);
        }
        rng.shuffle(dest);
    }
    return out;
}

ojson to_json(const DatasetSpec& spec) {
    ojson splits = ojson::object();
    for (const auto& [name, instances] : spec.splits) {
        ojson arr = ojson::array();
        for (const auto& inst : instances) {
            arr.push_back({{"id", inst.id}, {"text", inst.text}, {"label", inst.gold}});
        }
        splits[name] = std::move(arr);
    }
    return ojson{{"name", spec.name},
                 {"labels", spec.labels.labels()},
                 {"balance", spec.balance},
                 {"splits", std::move(splits)}};
}

DatasetSpec dataset_from_json(const nlohmann::json& j) {
    DatasetSpec spec;
    try {
        spec.name = j.value("name", std::string());
        spec.labels = LabelSet(j.at("labels").get<std::vector<std::string>>());
        spec.balance = j.value("balance", false);
        for (const auto& [name, arr] : j.at("splits").items()) {
            auto& dest = spec.splits[name];
            for (const auto& item : arr) {
                dest.push_back({item.at("id").get<std::string>(), item.at("text").get<std::string>(),
                                item.at("label").get<std::string>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed dataset: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("malformed dataset: ") + e.what());
    }
    spec.validate();
    return spec;
}

DatasetSpec load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open dataset " + path);
    try {
        return dataset_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void save_dataset(const DatasetSpec& spec, const std::string& path) {
    if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path);
    out << to_json(spec).dump(2) << '\n';
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = std::string(text::trim(t.substr(0, eq)));
        const auto value = std::string(text::trim(t.substr(eq + 1)));
        if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, value).second) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return out;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = text::trim(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start));
        if (!piece.empty()) out.emplace_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace uncttp
