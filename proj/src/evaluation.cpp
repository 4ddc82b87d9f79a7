#include "uncttp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "uncttp/error.hpp"
#include "uncttp/parallel.hpp"
#include "uncttp/text.hpp"

namespace uncttp {

std::size_t EvalRun::failed() const {
    return static_cast<std::size_t>(std::count_if(per_instance.begin(), per_instance.end(),
                                                  [](const auto& o) { return !o.predicted; }));
}

namespace {

InstanceOutcome classify_one(const DemonstrationSet& demos, const Instance& inst,
                             const LabelSet& labels, Provider& provider, const PromptTemplate& tmpl,
                             const IclOptions& o, std::uint64_t seed) {
    CompletionRequest req;
    req.model_id = o.model_id;
    req.messages = render_icl(demos.items, inst, labels, tmpl);
    req.temperature = o.temperature;
    req.max_tokens = o.max_tokens;
    if (o.temperature > 0.0) req.seed_hint = static_cast<std::int64_t>(seed);
    req.tag = RequestTag{inst.id, purpose::kIcl, {}, 0};
    InstanceOutcome out;
    out.instance_id = inst.id;
    out.predicted = parse_answer(provider.complete(req).text, labels);
    out.correct = out.predicted && text::labels_equal(*out.predicted, inst.gold);
    return out;
}

double accuracy_of(const std::vector<InstanceOutcome>& outcomes) {
    if (outcomes.empty()) return 0.0;
    const auto correct = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.correct; });
    return static_cast<double>(correct) / static_cast<double>(outcomes.size());
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string format1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", round1(v) == 0.0 ? 0.0 : round1(v));
    return buf;
}

}  // namespace

EvalRun run_icl(const DemonstrationSet& demonstrations, std::span<const Instance> eval_split,
                const LabelSet& labels, Provider& provider, const PromptTemplate& tmpl,
                const IclOptions& options, std::uint64_t seed, std::string eval_split_id) {
    check_no_leakage(demonstrations, eval_split);
    EvalRun run;
    run.seed = seed;
    run.eval_split_id = std::move(eval_split_id);
    run.demonstrations = demonstrations;
    run.per_instance = parallel_map(eval_split.size(), options.max_in_flight, [&](std::size_t i) {
        return classify_one(demonstrations, eval_split[i], labels, provider, tmpl, options, seed);
    });
    run.accuracy = accuracy_of(run.per_instance);
    return run;
}

EvalRun run_icl(const DemoSource& per_test, std::span<const Instance> eval_split,
                const LabelSet& labels, Provider& provider, const PromptTemplate& tmpl,
                const IclOptions& options, std::uint64_t seed, std::string eval_split_id) {
    EvalRun run;
    run.seed = seed;
    run.eval_split_id = std::move(eval_split_id);
    run.per_instance = parallel_map(eval_split.size(), options.max_in_flight, [&](std::size_t i) {
        const auto demos = per_test(eval_split[i]);
        check_no_leakage(demos, eval_split);
        auto out = classify_one(demos, eval_split[i], labels, provider, tmpl, options, seed);
        for (const auto& d : demos.items) out.demonstration_ids.push_back(d.instance_id);
        return out;
    });
    run.accuracy = accuracy_of(run.per_instance);
    return run;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    // Shifted by the smallest value so identical inputs give an exact mean and a zero spread.
    const double shift = sorted.front();
    double offset = 0.0;
    for (double v : sorted) offset += v - shift;
    offset /= static_cast<double>(s.n);
    s.mean = shift + offset;
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : sorted) ss += (v - shift - offset) * (v - shift - offset);
        s.std_dev = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

bool is_uncertain_candidate(const std::string& name) { return name != "000" && name != "111"; }

CategoryChoice pick_best_category(std::span<const std::string> candidates,
                                  std::span<const std::uint64_t> seeds,
                                  const CandidateRunner& runner) {
    CategoryChoice choice;
    const CandidateResult* best = nullptr;
    for (const auto& name : candidates) {
        CandidateResult r{name, false, {}, {}};
        for (auto seed : seeds) {
            const auto acc = runner(name, seed);
            if (!acc) {
                r.dropped = true;
                r.accuracies.clear();
                break;
            }
            r.accuracies.push_back(*acc);
        }
        if (!r.dropped) r.summary = summarize(r.accuracies);
        choice.candidates.push_back(std::move(r));
    }
    for (const auto& r : choice.candidates) {
        if (r.dropped) continue;
        if (!best) {
            best = &r;
            continue;
        }
        if (r.summary.mean != best->summary.mean) {
            if (r.summary.mean > best->summary.mean) best = &r;
            continue;
        }
        const bool r_unc = is_uncertain_candidate(r.name);
        const bool b_unc = is_uncertain_candidate(best->name);
        if (r_unc != b_unc) {
            if (r_unc) best = &r;
        } else if (r.name < best->name) {
            best = &r;
        }
    }
    if (!best) throw AllDropped("every candidate category is empty");
    choice.chosen = best->name;
    return choice;
}

ojson to_json(const CategoryChoice& choice) {
    ojson cands = ojson::array();
    for (const auto& c : choice.candidates) {
        ojson j{{"name", c.name}, {"dropped", c.dropped}, {"accuracies", c.accuracies}};
        if (c.dropped) {
            j["mean"] = nullptr;
            j["std"] = nullptr;
        } else {
            j["mean"] = 100.0 * c.summary.mean;
            j["std"] = 100.0 * c.summary.std_dev;
        }
        cands.push_back(std::move(j));
    }
    return ojson{{"chosen", choice.chosen}, {"candidates", std::move(cands)}};
}

CategoryChoice category_choice_from_json(const nlohmann::json& j) {
    CategoryChoice c;
    c.chosen = j.at("chosen").get<std::string>();
    for (const auto& cj : j.at("candidates")) {
        CandidateResult r;
        r.name = cj.at("name").get<std::string>();
        r.dropped = cj.at("dropped").get<bool>();
        r.accuracies = cj.at("accuracies").get<std::vector<double>>();
        if (!r.dropped) r.summary = summarize(r.accuracies);
        c.candidates.push_back(std::move(r));
    }
    return c;
}

std::string EvalReport::cell() const { return format1(mean) + " (" + format1(std_dev) + ")"; }

EvalReport aggregate(std::span<const EvalRun> runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate needs at least one run");
    std::vector<const EvalRun*> ordered;
    for (const auto& r : runs) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const EvalRun* a, const EvalRun* b) { return a->seed < b->seed; });
    EvalReport report;
    for (const auto* r : ordered) {
        report.seeds.push_back(r->seed);
        report.accuracies.push_back(r->accuracy);
        report.failed.push_back(r->failed());
    }
    const auto s = summarize(report.accuracies);
    report.mean = 100.0 * s.mean;
    report.std_dev = 100.0 * s.std_dev;
    report.single_run = runs.size() == 1;
    return report;
}

ojson to_json(const EvalReport& r) {
    ojson runs = ojson::array();
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        runs.push_back({{"seed", r.seeds[i]}, {"accuracy", r.accuracies[i]}, {"failed", r.failed[i]}});
    }
    ojson j{{"method", r.method},
            {"dataset", r.dataset},
            {"model_id", r.model_id},
            {"guide_model_id", r.guide_model_id},
            {"category", r.category},
            {"runs", std::move(runs)},
            {"mean", r.mean},
            {"std", r.std_dev},
            {"mean_rounded", round1(r.mean)},
            {"std_rounded", round1(r.std_dev)},
            {"single_run", r.single_run},
            {"dropped", r.dropped}};
    j["choice"] = r.choice ? to_json(*r.choice) : ojson(nullptr);
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.guide_model_id = j.value("guide_model_id", std::string());
    r.category = j.value("category", std::string());
    for (const auto& run : j.at("runs")) {
        r.seeds.push_back(run.at("seed").get<std::uint64_t>());
        r.accuracies.push_back(run.at("accuracy").get<double>());
        r.failed.push_back(run.at("failed").get<std::size_t>());
    }
    r.mean = j.at("mean").get<double>();
    r.std_dev = j.at("std").get<double>();
    r.single_run = j.value("single_run", r.seeds.size() == 1);
    r.dropped = j.value("dropped", std::vector<std::string>{});
    if (j.contains("choice") && !j.at("choice").is_null()) r.choice = category_choice_from_json(j.at("choice"));
    return r;
}

std::string report_grid_csv(std::span<const EvalReport> reports) {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    auto remember = [](std::vector<std::string>& v, const std::string& s) {
        if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    };
    for (const auto& r : reports) {
        remember(methods, r.method);
        remember(datasets, r.dataset);
    }
    std::string out = "method";
    for (const auto& d : datasets) out += "," + csv_escape(d);
    out += '\n';
    for (const auto& m : methods) {
        out += csv_escape(m);
        for (const auto& d : datasets) {
            out += ',';
            for (const auto& r : reports) {
                if (r.method == m && r.dataset == d) {
                    out += csv_escape(r.cell());
                    break;
                }
            }
        }
        out += '\n';
    }
    return out;
}

std::size_t DistributionTable::row_total(std::size_t row) const {
    return std::accumulate(counts[row].begin(), counts[row].end(), std::size_t{0});
}

std::optional<double> DistributionTable::wavering() const {
    if (total() == 0) return std::nullopt;
    return static_cast<double>(unc) / static_cast<double>(total());
}

std::string DistributionTable::to_csv() const {
    std::string out = "category";
    for (const auto& l : labels) out += "," + csv_escape(l);
    out += ",total\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out += csv_escape(rows[r]);
        for (auto c : counts[r]) out += "," + std::to_string(c);
        out += "," + std::to_string(row_total(r)) + "\n";
    }
    return out;
}

ojson DistributionTable::to_json() const {
    ojson table = ojson::object();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        ojson per_label = ojson::object();
        for (std::size_t l = 0; l < labels.size(); ++l) per_label[labels[l]] = counts[r][l];
        table[rows[r]] = std::move(per_label);
    }
    const auto w = wavering();
    return ojson{{"model_id", model_id},
                 {"total", total()},
                 {"groups", {{"Cer_W", cer_w}, {"Cer_R", cer_r}, {"Unc", unc}}},
                 {"wavering", w ? ojson(*w) : ojson("n/a")},
                 {"counts", std::move(table)}};
}

namespace {

template <typename Record, typename RowOf, typename GroupOf>
DistributionTable tally(std::span<const Record> records, std::span<const Instance> instances,
                        const LabelSet* labels, std::vector<std::string> rows, RowOf row_of,
                        GroupOf group_of) {
    DistributionTable t;
    if (!records.empty()) t.model_id = records.front().model_id;
    t.rows = std::move(rows);
    std::unordered_map<std::string, const Instance*> by_id;
    for (const auto& inst : instances) by_id[inst.id] = &inst;
    if (labels && !instances.empty()) {
        t.labels = labels->labels();
    } else {
        t.labels = {"all"};
    }
    t.counts.assign(t.rows.size(), std::vector<std::size_t>(t.labels.size(), 0));
    for (const auto& rec : records) {
        const Instance* inst = nullptr;
        if (!instances.empty()) {
            auto it = by_id.find(rec.instance_id);
            if (it == by_id.end()) throw MissingRecords("record for unknown instance " + rec.instance_id);
            inst = it->second;
        }
        const auto row_name = row_of(rec, inst);
        const auto row = static_cast<std::size_t>(
            std::find(t.rows.begin(), t.rows.end(), row_name) - t.rows.begin());
        const std::size_t col = (labels && inst) ? *labels->index_of(inst->gold) : 0;
        ++t.counts[row][col];
        switch (group_of(rec)) {
            case CategoryGroup::CerW: ++t.cer_w; break;
            case CategoryGroup::CerR: ++t.cer_r; break;
            case CategoryGroup::Unc: ++t.unc; break;
        }
    }
    return t;
}

}  // namespace

DistributionTable distribution_report(std::span<const TripartiteRecord> records,
                                      std::span<const Instance> instances, const LabelSet* labels) {
    return tally(
        records, instances, labels, {all_codes().begin(), all_codes().end()},
        [](const TripartiteRecord& r, const Instance*) { return r.category.code(); },
        [](const TripartiteRecord& r) { return r.category.group(); });
}

DistributionTable distribution_report(std::span<const VanillaRecord> records,
                                      std::span<const Instance> instances, const LabelSet& labels) {
    if (instances.empty() && !records.empty()) {
        throw MissingRecords("vanilla distribution needs the instances to recover gold labels");
    }
    return tally(
        records, instances, &labels, vanilla_buckets(),
        [](const VanillaRecord& r, const Instance* inst) { return vanilla_bucket(r, inst->gold); },
        [](const VanillaRecord& r) { return r.group; });
}

}  // namespace uncttp
