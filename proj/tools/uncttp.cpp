#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "uncttp/cache.hpp"
#include "uncttp/dataset.hpp"
#include "uncttp/error.hpp"
#include "uncttp/evaluation.hpp"
#include "uncttp/http_provider.hpp"
#include "uncttp/mock_provider.hpp"
#include "uncttp/pipeline.hpp"
#include "uncttp/prompting.hpp"
#include "uncttp/tripartite.hpp"

namespace fs = std::filesystem;
using namespace uncttp;

namespace {

struct Options {
    std::string config;
    std::string provider = "mock";
    std::string fixture;
    std::string endpoint = "https://api.openai.com/v1";
    std::string embed_endpoint;
    std::string embed_model;
    std::string model = "mock";
    std::string api_key_env = "OPENAI_API_KEY";
    bool logprobs = true;
    std::size_t concurrency = 4;
    int retries = 3;
    std::string cache_dir;
    std::uint64_t seed = 13;
    std::string seeds = "3";
    std::string out_dir = "out";
    std::string template_path;
    std::size_t shots = 1;
    int q = 3;
    double temperature = 0.7;
    std::string category;

    std::string dataset;
    std::string split_name = "train";
    std::string records;
    std::string out;
};

std::string sanitize(std::string s) {
    for (auto& c : s) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
        if (!ok) c = '_';
    }
    return s;
}

void write_text(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << contents;
    if (!out) throw ConfigError("failed writing " + path.string());
}

template <typename Records>
std::string to_jsonl(const Records& records) {
    std::string out;
    for (const auto& r : records) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    const auto parts = split_list(spec);
    if (parts.empty()) throw ConfigError("--seeds needs a count or a comma-separated list");
    try {
        if (parts.size() == 1 && spec.find(',') == std::string::npos) {
            return default_seeds(static_cast<std::size_t>(std::stoull(parts[0])));
        }
        std::vector<std::uint64_t> seeds;
        for (const auto& p : parts) seeds.push_back(std::stoull(p));
        return seeds;
    } catch (const std::logic_error&) {
        throw ConfigError("invalid --seeds value '" + spec + "'");
    }
}

/// Applies `key = value` entries from --config to options not given on the
/// command line. Keys are long option names without the leading dashes.
void apply_config(CLI::App& app, const std::string& path) {
    for (const auto& [key, value] : parse_config_file(path)) {
        CLI::Option* opt = nullptr;
        for (CLI::App* scope = &app; scope && !opt;) {
            try {
                opt = scope->get_option("--" + key);
            } catch (const CLI::OptionNotFound&) {
            }
            CLI::App* next = nullptr;
            for (auto* sub : scope->get_subcommands()) next = sub;
            scope = next;
        }
        if (!opt) throw ConfigError(path + ": unknown key '" + key + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

/// The backend plus the cache in front of it.
struct ProviderStack {
    std::unique_ptr<Provider> backend;
    std::unique_ptr<ResponseCache> cache;
    std::unique_ptr<CachingProvider> cached;

    Provider& get() { return *cached; }
};

ProviderStack make_provider(const Options& o, const DatasetSpec& dataset) {
    ProviderStack s;
    if (o.provider == "mock") {
        if (o.fixture.empty()) throw ConfigError("--provider mock requires --fixture");
        std::unordered_map<std::string, std::string> gold;
        for (const auto& inst : dataset.all_instances()) gold[inst.id] = inst.gold;
        s.backend = std::make_unique<MockProvider>(dataset.labels, std::move(gold),
                                                   MockFixture::load(o.fixture), o.model);
    } else if (o.provider == "openai") {
        const char* key = std::getenv(o.api_key_env.c_str());
        if (!key || !*key) throw AuthError("environment variable " + o.api_key_env + " is not set");
        HttpProviderConfig cfg;
        cfg.endpoint = o.endpoint;
        cfg.api_key = key;
        cfg.retry.max_retries = o.retries;
        cfg.logprobs_supported = o.logprobs;
        s.backend = std::make_unique<HttpProvider>(std::move(cfg));
    } else {
        throw ConfigError("unknown provider '" + o.provider + "' (expected mock or openai)");
    }
    if (o.cache_dir.empty()) {
        s.cache = std::make_unique<MemoryCache>();
    } else {
        s.cache = std::make_unique<DiskCache>(o.cache_dir);
    }
    s.cached = std::make_unique<CachingProvider>(*s.backend, *s.cache);
    return s;
}

std::unique_ptr<Embedder> make_embedder(const Options& o) {
    if (o.embed_model.empty()) return std::make_unique<TfidfEmbedder>();
    const char* key = std::getenv(o.api_key_env.c_str());
    return std::make_unique<RemoteEmbedder>(o.embed_endpoint.empty() ? o.endpoint : o.embed_endpoint,
                                            o.embed_model, key ? key : "");
}

void report_calls(const ProviderStack& s) {
    std::cerr << "provider calls: " << s.cached->misses() << " (cache hits: " << s.cached->hits() << ")\n";
}

PromptTemplate load_template(const Options& o) {
    return o.template_path.empty() ? PromptTemplate::defaults() : PromptTemplate::load(o.template_path);
}

MeasureOptions measure_options(const Options& o) {
    MeasureOptions m;
    m.model_id = o.model;
    m.temperature = o.temperature;
    m.q = o.q;
    m.seed = o.seed;
    m.max_in_flight = o.concurrency;
    return m;
}

PipelineConfig pipeline_config(const Options& o) {
    if (o.shots == 0) throw ConfigError("--shots must be at least 1");
    if (o.temperature < 0) throw ConfigError("--temperature must be non-negative");
    PipelineConfig c;
    c.measure = measure_options(o);
    c.icl.model_id = o.model;
    c.icl.temperature = o.temperature;
    c.icl.max_in_flight = o.concurrency;
    c.shots = o.shots;
    c.seeds = parse_seeds(o.seeds);
    if (!o.category.empty()) c.category = o.category;
    return c;
}

DatasetSpec require_dataset(const Options& o) {
    if (o.dataset.empty()) throw ConfigError("--dataset is required");
    auto ds = load_dataset(o.dataset);
    ds.validate();
    return ds;
}

fs::path records_path(const Options& o, const DatasetSpec& ds, const std::string& method) {
    if (!o.out.empty()) return o.out;
    return fs::path(o.out_dir) /
           (sanitize(o.model) + "_" + sanitize(ds.name) + "_" + o.split_name + "_" + method + ".jsonl");
}

Classification classification_for(Strategy strategy, const Options& o, const DatasetSpec& ds,
                                  Provider& provider, const PromptTemplate& tmpl) {
    if (!o.records.empty()) return load_classification(strategy, o.records);
    return classify(strategy, ds.split("train"), ds.labels, provider, tmpl, measure_options(o));
}

void write_report(const Options& o, const EvalReport& report, const std::string& stem) {
    const fs::path path = !o.out.empty() ? fs::path(o.out) : fs::path(o.out_dir) / (stem + ".json");
    write_text(path, to_json(report).dump(2) + "\n");
    std::cout << report.method << " " << report.dataset << " " << report.cell() << "\n";
    std::cout << "wrote " << path.string() << "\n";
}

int cmd_ingest(const Options& o, const std::string& input, const std::string& format,
               const std::string& text_col, const std::string& label_col, const std::string& id_col,
               const std::string& labels) {
    IngestOptions io;
    io.format = input_format_from_string(format);
    io.text_column = text_col;
    io.label_column = label_col;
    io.id_column = id_col;
    io.labels = split_list(labels);
    io.name = fs::path(input).stem().string();
    const auto ds = ingest(input, io);
    const fs::path path = o.out.empty() ? fs::path(o.out_dir) / (sanitize(ds.name) + ".json") : fs::path(o.out);
    save_dataset(ds, path.string());
    std::cout << "ingested " << ds.split("all").size() << " instances, " << ds.labels.size()
              << " labels -> " << path.string() << "\n";
    return 0;
}

int cmd_split(const Options& o, const SplitSizes& sizes, bool balance) {
    const auto ds = require_dataset(o);
    Rng rng(o.seed);
    const auto result = split(ds, sizes, balance, rng);
    const fs::path path =
        o.out.empty() ? fs::path(o.out_dir) / (sanitize(ds.name) + "_split.json") : fs::path(o.out);
    save_dataset(result, path.string());
    for (const auto& [name, instances] : result.splits) {
        std::cout << name << ": " << instances.size() << "\n";
    }
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_measure(const Options& o, const std::string& method) {
    const auto ds = require_dataset(o);
    auto stack = make_provider(o, ds);
    const auto tmpl = load_template(o);
    const auto& instances = ds.split(o.split_name);
    const auto mo = measure_options(o);
    std::string body;
    if (method == "uncttp") {
        const auto records = run_unc_ttp_all(instances, ds.labels, stack.get(), tmpl, mo);
        body = to_jsonl(records);
        const auto table = distribution_report(records, instances, &ds.labels);
        std::cout << table.to_csv();
    } else if (method == "vanilla") {
        const auto records = run_vanilla_all(instances, ds.labels, stack.get(), tmpl, mo);
        body = to_jsonl(records);
        std::cout << distribution_report(records, instances, ds.labels).to_csv();
    } else {
        const auto scores =
            score_all(verification_method_from_string(method), instances, ds.labels, stack.get(), tmpl, mo);
        body = to_jsonl(scores);
    }
    const auto path = records_path(o, ds, method);
    write_text(path, body);
    std::cout << "wrote " << path.string() << "\n";
    report_calls(stack);
    return 0;
}

int cmd_select(const Options& o, const std::string& strategy_name) {
    const auto strategy = strategy_from_string(strategy_name);
    const auto ds = require_dataset(o);
    auto stack = make_provider(o, ds);
    const auto tmpl = load_template(o);
    const auto config = pipeline_config(o);
    auto embedder = make_embedder(o);
    const auto classification = classification_for(strategy, o, ds, stack.get(), tmpl);
    const auto plan = plan_demonstrations(strategy, ds, classification, stack.get(), tmpl, embedder.get(), config);

    std::string body;
    for (auto seed : config.seeds) {
        if (plan.fixed) {
            body += to_json(plan.fixed(seed)).dump() + "\n";
            continue;
        }
        for (const auto& test : ds.split("test")) {
            const auto set = plan.per_test(seed, test);
            ojson line;
            line["seed"] = seed;
            line["test_id"] = test.id;
            line["demonstration_ids"] = ojson::array();
            for (const auto& d : set.items) line["demonstration_ids"].push_back(d.instance_id);
            body += line.dump() + "\n";
        }
    }
    const fs::path path = o.out.empty()
                              ? fs::path(o.out_dir) / (sanitize(ds.name) + "_" + strategy_name + "_demos.jsonl")
                              : fs::path(o.out);
    write_text(path, body);
    if (!plan.category.empty()) std::cout << "category: " << plan.category << "\n";
    std::cout << "wrote " << path.string() << "\n";
    report_calls(stack);
    return 0;
}

int cmd_pick(const Options& o, const std::string& strategy_name) {
    const auto strategy = strategy_from_string(strategy_name);
    if (candidates_for(strategy).empty()) {
        throw ConfigError("strategy " + strategy_name + " has no categories to pick from");
    }
    const auto ds = require_dataset(o);
    auto stack = make_provider(o, ds);
    const auto tmpl = load_template(o);
    auto config = pipeline_config(o);
    const auto classification = classification_for(strategy, o, ds, stack.get(), tmpl);

    ojson out;
    out["strategy"] = strategy_name;
    if (strategy == Strategy::UncTtp || strategy == Strategy::Vanilla) {
        config.category.reset();
        const auto plan = plan_demonstrations(strategy, ds, classification, stack.get(), tmpl, nullptr, config);
        out["choice"] = to_json(*plan.choice);
        out["dropped"] = plan.dropped;
        std::cout << "chosen: " << plan.choice->chosen << "\n";
    } else {
        // Verification scores: compare the two ends of the ranking on validation.
        const auto candidates = candidates_for(strategy);
        CandidateRunner runner = [&](const std::string& name, std::uint64_t seed) -> std::optional<double> {
            auto c = config;
            c.category = name;
            c.shots = c.validation_shots;
            const auto plan = plan_demonstrations(strategy, ds, classification, stack.get(), tmpl, nullptr, c);
            return run_icl(plan.fixed(seed), ds.split("validation"), ds.labels, stack.get(), tmpl, c.icl,
                           seed, "validation")
                .accuracy;
        };
        const auto choice = pick_best_category(candidates, config.seeds, runner);
        out["choice"] = to_json(choice);
        std::cout << "chosen: " << choice.chosen << "\n";
    }
    const fs::path path = o.out.empty()
                              ? fs::path(o.out_dir) / (sanitize(ds.name) + "_" + strategy_name + "_choice.json")
                              : fs::path(o.out);
    write_text(path, out.dump(2) + "\n");
    std::cout << "wrote " << path.string() << "\n";
    report_calls(stack);
    return 0;
}

int cmd_eval(const Options& o, const std::string& strategy_name) {
    const auto strategy = strategy_from_string(strategy_name);
    const auto ds = require_dataset(o);
    auto stack = make_provider(o, ds);
    const auto tmpl = load_template(o);
    const auto config = pipeline_config(o);
    auto embedder = make_embedder(o);
    const auto classification = classification_for(strategy, o, ds, stack.get(), tmpl);
    const auto plan = plan_demonstrations(strategy, ds, classification, stack.get(), tmpl, embedder.get(), config);
    const auto report = evaluate_plan(plan, ds, stack.get(), tmpl, config);
    write_report(o, report, "report_" + strategy_name + "_" + sanitize(ds.name) + "_" + sanitize(o.model));
    report_calls(stack);
    return 0;
}

int cmd_transfer(const Options& o, const std::string& strategy_name) {
    if (o.records.empty()) throw ConfigError("transfer requires --records from the guiding model");
    const auto strategy = strategy_from_string(strategy_name);
    const auto ds = require_dataset(o);
    auto stack = make_provider(o, ds);
    const auto tmpl = load_template(o);
    const auto config = pipeline_config(o);
    auto embedder = make_embedder(o);
    const auto report = transfer_eval(strategy, o.records, ds, stack.get(), tmpl, embedder.get(), config);
    write_report(o, report,
                 "transfer_" + strategy_name + "_" + sanitize(ds.name) + "_" + sanitize(report.guide_model_id) +
                     "_to_" + sanitize(o.model));
    report_calls(stack);
    return 0;
}

int cmd_report(const Options& o, const std::string& distribution, const std::string& kind,
               const std::vector<std::string>& grid) {
    if (!distribution.empty()) {
        DistributionTable table;
        std::optional<DatasetSpec> ds;
        if (!o.dataset.empty()) ds = require_dataset(o);
        if (kind == "uncttp") {
            const auto records = read_jsonl(distribution, tripartite_record_from_json);
            table = ds ? distribution_report(records, ds->split(o.split_name), &ds->labels)
                       : distribution_report(records);
        } else if (kind == "vanilla") {
            if (!ds) throw ConfigError("vanilla distribution reports need --dataset for gold labels");
            const auto records = read_jsonl(distribution, vanilla_record_from_json);
            table = distribution_report(records, ds->split(o.split_name), ds->labels);
        } else {
            throw ConfigError("unknown record kind '" + kind + "' (expected uncttp or vanilla)");
        }
        const fs::path stem = o.out.empty() ? fs::path(o.out_dir) / (fs::path(distribution).stem().string() + "_distribution")
                                            : fs::path(o.out);
        write_text(fs::path(stem).replace_extension(".csv"), table.to_csv());
        write_text(fs::path(stem).replace_extension(".json"), table.to_json().dump(2) + "\n");
        std::cout << table.to_csv();
        const auto w = table.wavering();
        std::cout << "wavering: " << (w ? std::to_string(*w) : std::string("n/a")) << "\n";
        return 0;
    }
    if (grid.empty()) throw ConfigError("report needs --distribution FILE or --grid REPORT...");
    std::vector<EvalReport> reports;
    for (const auto& path : grid) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read " + path);
        try {
            reports.push_back(eval_report_from_json(nlohmann::json::parse(in)));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ": " + e.what());
        }
    }
    const auto csv = report_grid_csv(reports);
    const fs::path path = o.out.empty() ? fs::path(o.out_dir) / "grid.csv" : fs::path(o.out);
    write_text(path, csv);
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uncertainty-guided demonstration selection for in-context classification"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;

    app.add_option("--config", o.config, "key = value file; entries fill options not given as flags");
    app.add_option("--provider", o.provider, "mock or openai")->capture_default_str();
    app.add_option("--fixture", o.fixture, "Mock fixture (JSONL)");
    app.add_option("--endpoint", o.endpoint, "OpenAI-compatible base URL")->capture_default_str();
    app.add_option("--embed-endpoint", o.embed_endpoint, "Embedding endpoint (defaults to --endpoint)");
    app.add_option("--embed-model", o.embed_model, "Remote embedding model; TF-IDF when unset");
    app.add_option("--model", o.model, "Model id")->capture_default_str();
    app.add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key")->capture_default_str();
    app.add_option("--logprobs", o.logprobs, "Whether the endpoint returns token log-probabilities")
        ->capture_default_str();
    app.add_option("--concurrency", o.concurrency, "Maximum requests in flight")->capture_default_str();
    app.add_option("--retries", o.retries, "Retry bound for transient transport errors")->capture_default_str();
    app.add_option("--cache-dir", o.cache_dir, "Response cache directory (in-memory when unset)");
    app.add_option("--seed", o.seed, "Seed for wrong-label choice and splitting")->capture_default_str();
    app.add_option("--seeds", o.seeds, "Evaluation seeds: a count or a comma-separated list")->capture_default_str();
    app.add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str();
    app.add_option("--out", o.out, "Explicit output file");
    app.add_option("--template", o.template_path, "Prompt template file");
    app.add_option("--shots", o.shots, "Demonstrations per label (N)")->capture_default_str();
    app.add_option("--q", o.q, "Samples for vanilla and verification")->capture_default_str();
    app.add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
    app.add_option("--category", o.category, "Fixed category (skips validation picking)");
    app.add_option("--dataset", o.dataset, "Dataset JSON produced by ingest/split");
    app.add_option("--split", o.split_name, "Split to measure")->capture_default_str();
    app.add_option("--records", o.records, "Records JSONL to select from instead of measuring");

    auto* ingest_cmd = app.add_subcommand("ingest", "Read a CSV or JSONL file into a dataset");
    std::string input, format = "csv", text_col = "text", label_col = "label", id_col = "id", labels;
    ingest_cmd->add_option("input", input, "Input file")->required();
    ingest_cmd->add_option("--format", format, "csv or jsonl")->capture_default_str();
    ingest_cmd->add_option("--text-column", text_col)->capture_default_str();
    ingest_cmd->add_option("--label-column", label_col)->capture_default_str();
    ingest_cmd->add_option("--id-column", id_col)->capture_default_str();
    ingest_cmd->add_option("--labels", labels, "Comma-separated label set in prompt order");

    auto* split_cmd = app.add_subcommand("split", "Seeded train/validation/test split");
    SplitSizes sizes;
    bool balance = false;
    split_cmd->add_option("--train", sizes.train)->required();
    split_cmd->add_option("--validation", sizes.validation)->required();
    split_cmd->add_option("--test", sizes.test)->required();
    split_cmd->add_flag("--balance", balance, "Equal per-label counts in every split");

    app.add_subcommand("uncttp", "Measure tripartite uncertainty categories");
    app.add_subcommand("vanilla", "Measure vanilla sampling consistency");
    auto* verify_cmd = app.add_subcommand("verify", "Score instances by self-verification");
    std::string method = "ptrue";
    verify_cmd->add_option("--method", method, "ptrue or selfcheck")->capture_default_str();

    std::string strategy;
    auto* select_cmd = app.add_subcommand("select", "Emit demonstration sets for a strategy");
    select_cmd->add_option("strategy", strategy)->required();
    auto* pick_cmd = app.add_subcommand("pick-category", "Choose the best category on validation");
    pick_cmd->add_option("strategy", strategy)->required();
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a strategy over seeds");
    eval_cmd->add_option("--strategy", strategy)->required();
    auto* transfer_cmd = app.add_subcommand("transfer", "Evaluate with another model's records");
    transfer_cmd->add_option("--strategy", strategy)->required();

    auto* report_cmd = app.add_subcommand("report", "Distribution tables and report grids");
    std::string distribution, kind = "uncttp";
    std::vector<std::string> grid;
    report_cmd->add_option("--distribution", distribution, "Records JSONL to tabulate");
    report_cmd->add_option("--kind", kind, "uncttp or vanilla")->capture_default_str();
    report_cmd->add_option("--grid", grid, "EvalReport JSON files to merge into a CSV grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!o.config.empty()) apply_config(app, o.config);
        auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "ingest") return cmd_ingest(o, input, format, text_col, label_col, id_col, labels);
        if (name == "split") return cmd_split(o, sizes, balance);
        if (name == "uncttp" || name == "vanilla") return cmd_measure(o, name);
        if (name == "verify") return cmd_measure(o, method);
        if (name == "select") return cmd_select(o, strategy);
        if (name == "pick-category") return cmd_pick(o, strategy);
        if (name == "eval") return cmd_eval(o, strategy);
        if (name == "transfer") return cmd_transfer(o, strategy);
        if (name == "report") return cmd_report(o, distribution, kind, grid);
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
