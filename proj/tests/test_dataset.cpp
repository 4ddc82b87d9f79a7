#include <map>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "uncttp/dataset.hpp"
#include "uncttp/error.hpp"

using namespace uncttp;

namespace {

std::map<std::string, std::size_t> label_counts(const std::vector<Instance>& v) {
    std::map<std::string, std::size_t> out;
    for (const auto& i : v) ++out[i.gold];
    return out;
}

std::set<std::string> id_set(const std::vector<Instance>& v) {
    std::set<std::string> out;
    for (const auto& i : v) out.insert(i.id);
    return out;
}

DatasetSpec pool(const LabelSet& labels, std::vector<std::size_t> per_label) {
    DatasetSpec ds;
    ds.name = "pool";
    ds.labels = labels;
    auto& all = ds.splits["all"];
    for (std::size_t l = 0; l < labels.size(); ++l) {
        for (std::size_t i = 0; i < per_label[l]; ++i) {
            all.push_back({labels[l] + "-" + std::to_string(i), "text " + std::to_string(i), labels[l]});
        }
    }
    return ds;
}

}  // namespace

TEST_CASE("CSV ingest infers labels in order of appearance") {
    testing::TempDir dir;
    const auto path = dir.file("six.csv");
    testing::write_file(path,
                        "id,text,label\n"
                        "a,\"Great, just great.\",sarcastic\n"
                        "b,Nice day,non-sarcastic\n"
                        "c,\"He said \"\"wow\"\"\",Sarcastic\n"
                        "d,Plain,non-sarcastic\n"
                        "e,\"two\nlines\",sarcastic\n"
                        "f,Fine,non-sarcastic\n");
    IngestOptions o;
    o.name = "sh";
    const auto ds = ingest(path, o);
    CHECK(ds.labels.labels() == std::vector<std::string>{"sarcastic", "non-sarcastic"});
    const auto& all = ds.split("all");
    REQUIRE(all.size() == 6);
    CHECK(label_counts(all) == std::map<std::string, std::size_t>{{"non-sarcastic", 3}, {"sarcastic", 3}});
    CHECK(all[0].text == "Great, just great.");
    CHECK(all[2].text == "He said \"wow\"");
    CHECK(all[2].gold == "sarcastic");
    CHECK(all[4].text == "two\nlines");
}

TEST_CASE("an unknown label is reported with its line") {
    testing::TempDir dir;
    const auto path = dir.file("typo.csv");
    testing::write_file(path, "text,label\nGood,positive\nBad,negative\nMeh,positve\n");
    IngestOptions o;
    o.labels = {"positive", "neutral", "negative"};
    try {
        ingest(path, o);
        FAIL("expected UnknownLabel");
    } catch (const UnknownLabel& e) {
        const std::string msg = e.what();
        CHECK(msg.find(path + ":4") != std::string::npos);
        CHECK(msg.find("positve") != std::string::npos);
    }
}

TEST_CASE("malformed CSV input") {
    testing::TempDir dir;
    const auto short_row = dir.file("short.csv");
    testing::write_file(short_row, "text,label\nonly one field\n");
    CHECK_THROWS_AS(ingest(short_row, IngestOptions{}), FormatError);
    const auto no_col = dir.file("nocol.csv");
    testing::write_file(no_col, "body,label\nx,y\n");
    CHECK_THROWS_AS(ingest(no_col, IngestOptions{}), FormatError);
    CHECK_THROWS_AS(ingest(dir.file("missing.csv"), IngestOptions{}), FormatError);
}

TEST_CASE("JSONL ingest") {
    testing::TempDir dir;
    const auto path = dir.file("d.jsonl");
    testing::write_file(path,
                        "{\"text\":\"up\",\"label\":\"positive\"}\n"
                        "\n"
                        "{\"id\":\"x\",\"text\":\"down\",\"label\":\"negative\"}\n");
    IngestOptions o;
    o.format = InputFormat::Jsonl;
    const auto ds = ingest(path, o);
    const auto& all = ds.split("all");
    REQUIRE(all.size() == 2);
    CHECK(all[0].id == "row-0");
    CHECK(all[1].id == "x");

    testing::write_file(path, "{\"text\":\"up\"}\n");
    CHECK_THROWS_AS(ingest(path, o), FormatError);
    testing::write_file(path, "not json\n");
    CHECK_THROWS_AS(ingest(path, o), FormatError);
}

TEST_CASE("balanced split of a binary pool") {
    const LabelSet sh({"sarcastic", "non-sarcastic"});
    const auto ds = pool(sh, {1100, 1100});
    Rng rng(7);
    const auto s = split(ds, {500, 1500, 200}, true, rng);
    CHECK(label_counts(s.split("train")) == std::map<std::string, std::size_t>{{"non-sarcastic", 250}, {"sarcastic", 250}});
    CHECK(label_counts(s.split("validation")) == std::map<std::string, std::size_t>{{"non-sarcastic", 750}, {"sarcastic", 750}});
    CHECK(label_counts(s.split("test")) == std::map<std::string, std::size_t>{{"non-sarcastic", 100}, {"sarcastic", 100}});
    std::set<std::string> seen;
    for (const char* name : {"train", "validation", "test"}) {
        for (const auto& id : id_set(s.split(name))) CHECK(seen.insert(id).second);
    }
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("balanced split divisibility and supply") {
    const LabelSet fp({"positive", "neutral", "negative"});
    const auto ds = pool(fp, {400, 450, 500});
    Rng a(1);
    CHECK_THROWS_AS(split(ds, {100, 99, 99}, true, a), InfeasibleBalance);
    Rng b(1);
    const auto ok = split(ds, {99, 99, 99}, true, b);
    for (const auto& [label, n] : label_counts(ok.split("train"))) CHECK(n == 33);

    Rng c(2);
    const auto paper_sizes = split(ds, {300, 600, 300}, true, c);
    CHECK(label_counts(paper_sizes.split("train")) == std::map<std::string, std::size_t>{{"negative", 100}, {"neutral", 100}, {"positive", 100}});
    CHECK(label_counts(paper_sizes.split("validation")) == std::map<std::string, std::size_t>{{"negative", 200}, {"neutral", 200}, {"positive", 200}});

    const auto thin = pool(fp, {100, 500, 500});
    Rng d(3);
    CHECK_THROWS_AS(split(thin, {300, 0, 300}, true, d), InfeasibleBalance);
    Rng e(3);
    CHECK_THROWS_AS(split(ds, {2000, 0, 0}, false, e), InfeasibleBalance);
}

TEST_CASE("splits are reproducible per seed") {
    const LabelSet ab({"A", "B"});
    const auto ds = pool(ab, {60, 60});
    Rng a(5), b(5), c(6);
    const auto s1 = split(ds, {20, 20, 20}, true, a);
    const auto s2 = split(ds, {20, 20, 20}, true, b);
    const auto s3 = split(ds, {20, 20, 20}, true, c);
    CHECK(to_json(s1).dump() == to_json(s2).dump());
    CHECK(to_json(s1).dump() != to_json(s3).dump());
    Rng u(5);
    const auto unbalanced = split(ds, {30, 10, 10}, false, u);
    CHECK(unbalanced.split("train").size() == 30);
}

TEST_CASE("dataset files round-trip") {
    testing::TempDir dir;
    const auto ds = testing::make_dataset(LabelSet({"A", "B"}), 3, 2, 1, "rt");
    save_dataset(ds, dir.file("ds.json"));
    const auto back = load_dataset(dir.file("ds.json"));
    CHECK(to_json(back).dump() == to_json(ds).dump());
    save_dataset(ds, dir.file("nested/deeper/ds.json"));
    CHECK(to_json(load_dataset(dir.file("nested/deeper/ds.json"))).dump() == to_json(ds).dump());

    testing::write_file(dir.file("bad.json"), R"({"name":"x","labels":["A"],"splits":{"train":[{"id":"1","text":"t","label":"Z"}]}})");
    CHECK_THROWS_AS(load_dataset(dir.file("bad.json")), FormatError);
    testing::write_file(dir.file("dup.json"), R"({"name":"x","labels":["A"],"splits":{"train":[{"id":"1","text":"t","label":"A"}],"test":[{"id":"1","text":"u","label":"A"}]}})");
    CHECK_THROWS_AS(load_dataset(dir.file("dup.json")), FormatError);
}

TEST_CASE("JSONL serialisation") {
    const std::vector<Instance> v{{"1", "a \"b\"", "A"}};
    CHECK(serialize_jsonl(v) == "{\"id\":\"1\",\"text\":\"a \\\"b\\\"\",\"label\":\"A\"}\n");
}

TEST_CASE("config files") {
    testing::TempDir dir;
    const auto path = dir.file("run.conf");
    testing::write_file(path, "# comment\nprovider = mock\n\nshots=2\n");
    const auto cfg = parse_config_file(path);
    CHECK(cfg == std::map<std::string, std::string>{{"provider", "mock"}, {"shots", "2"}});

    testing::write_file(path, "a = 1\nno equals here\n");
    try {
        parse_config_file(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(path + ":2") != std::string::npos);
    }
    testing::write_file(path, "a = 1\na = 2\n");
    CHECK_THROWS_AS(parse_config_file(path), ConfigError);
    CHECK_THROWS_AS(parse_config_file(dir.file("none.conf")), ConfigError);
}

TEST_CASE("list splitting") {
    CHECK(split_list(" a, b ,,c ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_list("").empty());
}
