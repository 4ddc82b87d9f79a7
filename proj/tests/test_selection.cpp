#include <set>

#include "doctest.h"
#include "support.hpp"
#include "uncttp/error.hpp"
#include "uncttp/selection.hpp"

using namespace uncttp;

namespace {

const LabelSet kAb({"A", "B"});

std::vector<Instance> items(const std::string& prefix, std::size_t n_a, std::size_t n_b) {
    std::vector<Instance> out;
    for (std::size_t i = 0; i < n_a; ++i) out.push_back({prefix + "a" + std::to_string(i), "text a" + std::to_string(i), "A"});
    for (std::size_t i = 0; i < n_b; ++i) out.push_back({prefix + "b" + std::to_string(i), "text b" + std::to_string(i), "B"});
    return out;
}

std::map<std::string, int> label_counts(const DemonstrationSet& s) {
    std::map<std::string, int> out;
    for (const auto& d : s.items) ++out[d.label];
    return out;
}

std::set<std::string> ids(const DemonstrationSet& s) {
    std::set<std::string> out;
    for (const auto& d : s.items) out.insert(d.instance_id);
    return out;
}

std::set<std::string> ids(std::span<const Instance> v) {
    std::set<std::string> out;
    for (const auto& i : v) out.insert(i.id);
    return out;
}

bool subset(const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("a large enough category needs no supplementation") {
    const auto cat = items("c", 5, 5);
    const auto train = items("t", 20, 20);
    Rng rng(1);
    const auto set = assemble(cat, kAb, 2, 3, rng, train);
    REQUIRE(set);
    CHECK(set->items.size() == 6);
    CHECK(set->supplemented == 0);
    CHECK(subset(ids(*set), ids(cat)));
    CHECK(label_counts(*set) == std::map<std::string, int>{{"A", 3}, {"B", 3}});
}

TEST_CASE("an empty category is dropped") {
    const auto train = items("t", 5, 5);
    Rng rng(1);
    CHECK_FALSE(assemble({}, kAb, 2, 1, rng, train));
}

TEST_CASE("a per-label shortfall is filled from the same label") {
    // Category: one A, three B. N = 2 -> one category A + one random A.
    const std::vector<Instance> cat{{"ca", "x", "A"}, {"cb0", "x", "B"}, {"cb1", "x", "B"}, {"cb2", "x", "B"}};
    auto train = items("t", 4, 4);
    train.insert(train.end(), cat.begin(), cat.end());
    Rng rng(3);
    const auto set = assemble(cat, kAb, 2, 2, rng, train);
    REQUIRE(set);
    CHECK(set->supplemented == 1);
    CHECK(label_counts(*set) == std::map<std::string, int>{{"A", 2}, {"B", 2}});
    const auto chosen = ids(*set);
    CHECK(chosen.contains("ca"));
    int a_from_train = 0;
    for (const auto& d : set->items) {
        if (d.label == "A" && d.instance_id != "ca") {
            CHECK(d.instance_id.rfind("ta", 0) == 0);
            ++a_from_train;
        }
        if (d.label == "B") CHECK(d.instance_id.rfind("cb", 0) == 0);
    }
    CHECK(a_from_train == 1);
}

TEST_CASE("assembly fails when even the fallback is short") {
    const std::vector<Instance> cat{{"ca", "x", "A"}};
    const auto train = items("t", 5, 1);
    Rng rng(1);
    CHECK_THROWS_AS(assemble(cat, kAb, 2, 2, rng, train), InsufficientData);
}

TEST_CASE("assembly property trials") {
    Rng meta(2024);
    const LabelSet fp({"positive", "neutral", "negative"});
    for (int trial = 0; trial < 1000; ++trial) {
        const LabelSet& labels = trial % 2 ? fp : kAb;
        const std::size_t shots = 1 + meta.uniform_index(3);
        std::vector<Instance> train;
        for (std::size_t l = 0; l < labels.size(); ++l) {
            const std::size_t n = shots + meta.uniform_index(6);
            for (std::size_t i = 0; i < n; ++i) {
                train.push_back({labels[l] + "-" + std::to_string(i), "t", labels[l]});
            }
        }
        std::vector<Instance> cat;
        for (const auto& inst : train) {
            if (meta.uniform01() < 0.3) cat.push_back(inst);
        }
        Rng rng(trial);
        const auto set = assemble(cat, labels, labels.size(), shots, rng, train);
        if (cat.empty()) {
            CHECK_FALSE(set);
            continue;
        }
        REQUIRE(set);
        CHECK(set->items.size() == labels.size() * shots);
        for (const auto& [label, n] : label_counts(*set)) CHECK(n == static_cast<int>(shots));
        CHECK(ids(*set).size() == set->items.size());
    }
}

TEST_CASE("random selection") {
    const auto train = items("t", 250, 250);
    Rng a(13), b(13), c(42);
    const auto s1 = select_random(train, kAb, 2, 4, a);
    const auto s2 = select_random(train, kAb, 2, 4, b);
    const auto s3 = select_random(train, kAb, 2, 4, c);
    CHECK(s1.items == s2.items);
    CHECK(ids(s1) != ids(s3));
    CHECK(label_counts(s1) == std::map<std::string, int>{{"A", 4}, {"B", 4}});
    Rng d(1);
    CHECK_THROWS_AS(select_random(items("t", 3, 10), kAb, 2, 4, d), InsufficientData);
    CHECK_THROWS(select_random(train, kAb, 3, 1, d));
}

TEST_CASE("score selection takes the extremes per label") {
    const auto train = items("t", 4, 4);
    std::unordered_map<std::string, double> scores;
    for (std::size_t i = 0; i < train.size(); ++i) scores[train[i].id] = static_cast<double>(i % 4);
    Rng rng(1);
    const auto hi = select_by_score(train, scores, kAb, 2, 1, ScoreOrder::Descending, rng);
    CHECK(ids(hi) == std::set<std::string>{"ta3", "tb3"});
    const auto lo = select_by_score(train, scores, kAb, 2, 2, ScoreOrder::Ascending, rng);
    CHECK(ids(lo) == std::set<std::string>{"ta0", "ta1", "tb0", "tb1"});
    scores.erase("ta2");
    CHECK_THROWS_AS(select_by_score(train, scores, kAb, 2, 1, ScoreOrder::Ascending, rng), MissingRecords);
}

TEST_CASE("score ties are broken by the seed") {
    const auto train = items("t", 50, 50);
    std::unordered_map<std::string, double> flat;
    for (const auto& i : train) flat[i.id] = 0.5;
    Rng a(1), b(2);
    CHECK(ids(select_by_score(train, flat, kAb, 2, 2, ScoreOrder::Descending, a)) !=
          ids(select_by_score(train, flat, kAb, 2, 2, ScoreOrder::Descending, b)));
}

TEST_CASE("ranked lists sort by score then id") {
    const std::vector<Instance> v{{"c", "", "A"}, {"a", "", "A"}, {"b", "", "B"}};
    const std::vector<double> s{0.5, 0.5, 0.9};
    const auto r = RankedList::from_scores(v, s);
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].first == "b");
    CHECK(r.entries[1].first == "a");
    CHECK(r.entries[2].first == "c");
}

TEST_CASE("selection from a ranking takes the top N per label") {
    const auto train = items("t", 3, 3);
    RankedList r;
    r.entries = {{"tb2", 0.9}, {"ta0", 0.8}, {"tb0", 0.7}, {"ta1", 0.6}, {"ta2", 0.5}, {"tb1", 0.4}};
    Rng rng(3), same(3);
    const auto set = select_from_ranking(r, train, kAb, 2, 2, rng);
    CHECK(ids(set) == std::set<std::string>{"ta0", "ta1", "tb0", "tb2"});
    CHECK(set.items == select_from_ranking(r, train, kAb, 2, 2, same).items);
    // The order is the same round-robin-then-shuffle used everywhere else.
    Rng ord(3);
    const std::vector<std::vector<Demonstration>> per_label{
        {{"ta0", "text a0", "A"}, {"ta1", "text a1", "A"}}, {{"tb2", "text b2", "B"}, {"tb0", "text b0", "B"}}};
    CHECK(set.items == order_demonstrations(per_label, ord));
    CHECK_THROWS_AS(select_from_ranking(r, train, kAb, 2, 4, rng), InsufficientData);
}

TEST_CASE("category pools") {
    const auto train = items("t", 3, 3);
    std::vector<TripartiteRecord> records;
    const char* codes[] = {"111", "011", "000", "111", "101", "011"};
    for (std::size_t i = 0; i < train.size(); ++i) {
        TripartiteRecord r;
        r.instance_id = train[i].id;
        r.category = UncertaintyCategory(codes[i]);
        r.bits = r.category.bits();
        records.push_back(r);
    }
    const auto pool = category_pool(records, train);
    CHECK(pool.size() == 8);
    std::size_t total = 0;
    for (const auto& [code, members] : pool) total += members.size();
    CHECK(total == train.size());
    CHECK(pool.at("111").size() == 2);
    CHECK(pool.at("100").empty());
    records.pop_back();
    CHECK_THROWS_AS(category_pool(records, train), MissingRecords);
}

TEST_CASE("vanilla pools use the four buckets") {
    const auto train = items("t", 2, 2);
    std::vector<VanillaRecord> records;
    const std::vector<std::vector<ParsedAnswer>> answers{
        {std::string("A"), std::string("A"), std::string("A")},
        {std::string("B"), std::string("B"), std::string("B")},
        {std::string("B"), std::string("A"), std::string("B")},
        {std::string("B"), std::string("A"), std::string("A")},
    };
    for (std::size_t i = 0; i < train.size(); ++i) {
        VanillaRecord r;
        r.instance_id = train[i].id;
        r.answers = answers[i];
        r.group = vanilla_group(r.answers, train[i].gold);
        records.push_back(r);
    }
    const auto pool = vanilla_pool(records, train);
    CHECK(pool.at("111").size() == 1);
    CHECK(pool.at("000").size() == 1);
    CHECK(pool.at("011/101/110").size() == 1);  // tb0: two of three B
    CHECK(pool.at("001/010/100").size() == 1);  // tb1: one of three B
}

TEST_CASE("leakage is detected") {
    DemonstrationSet set;
    set.items = {{"x1", "t", "A"}, {"x2", "t", "B"}};
    const std::vector<Instance> eval{{"y1", "t", "A"}, {"x2", "t", "B"}};
    CHECK_THROWS_AS(check_no_leakage(set, eval), LeakageError);
    CHECK_NOTHROW(check_no_leakage(set, std::vector<Instance>{{"y1", "t", "A"}}));
}

TEST_CASE("ordering interleaves labels before shuffling") {
    const std::vector<std::vector<Demonstration>> per_label{
        {{"a1", "", "A"}, {"a2", "", "A"}}, {{"b1", "", "B"}, {"b2", "", "B"}}};
    Rng r1(9), r2(9);
    const auto o1 = order_demonstrations(per_label, r1);
    CHECK(o1 == order_demonstrations(per_label, r2));
    CHECK(o1.size() == 4);
}

TEST_CASE("demonstration sets serialise with provenance") {
    DemonstrationSet s;
    s.items = {{"x1", "t1", "A"}};
    s.strategy = "uncttp";
    s.category = "011";
    s.seed = 42;
    s.ways = 2;
    s.shots = 1;
    const auto j = to_json(s).dump();
    CHECK(j == R"({"strategy":"uncttp","category":"011","seed":42,"shape":[2,1],"supplemented":0,"items":[{"id":"x1","text":"t1","label":"A"}]})");
    const auto back = demonstration_set_from_json(nlohmann::json::parse(j));
    CHECK(back.items == s.items);
    CHECK(back.category == "011");
}
