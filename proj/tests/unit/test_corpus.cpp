#include <doctest.h>

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "../support/synthetic.hpp"
#include "tagrec/corpus.hpp"
#include "tagrec/errors.hpp"
#include "tagrec/rng.hpp"

using namespace tagrec;
namespace fs = std::filesystem;

namespace {

fs::path write_lines(const std::string& name, const std::string& content) {
    const auto dir = testing::scratch_dir("corpus");
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
}

Object make(std::string id, std::set<std::string> tags) {
    Object o;
    o.id = std::move(id);
    o.title = "t";
    o.description = "d";
    o.tags = std::move(tags);
    return o;
}

}  // namespace

TEST_CASE("frequency filter drops rare tags and tagless objects") {
    const auto p = write_lines("small.jsonl",
                               R"({"id":"1","title":"A","description":"x","tags":["a"]})"
                               "\n"
                               R"({"id":"2","title":"B","description":"y","tags":[" A "]})"
                               "\n"
                               R"({"id":"3","title":"C","description":"z","tags":["b"]})"
                               "\n");
    const auto c = load_corpus(p, 2);
    REQUIRE(c.vocab.size() == 1);
    CHECK(c.vocab.tag(0) == "a");
    CHECK(c.vocab.frequency(0) == 2);
    REQUIRE(c.objects.size() == 2);
    CHECK(c.objects[0].id == "1");
    CHECK(c.objects[1].id == "2");
    CHECK(c.report.raw_objects == 3);
    CHECK(c.report.retained_objects == 2);
    CHECK(c.report.dropped_objects == 1);
    CHECK(c.report.raw_tags == 2);
    CHECK(c.report.retained_tags == 1);
}

TEST_CASE("empty corpus file") {
    const auto c = load_corpus(write_lines("empty.jsonl", ""), 50);
    CHECK(c.objects.empty());
    CHECK(c.vocab.size() == 0);
    CHECK(c.report.raw_objects == 0);
    CHECK(c.report.retained_objects == 0);
}

TEST_CASE("ingestion errors") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl", 1), DataError);

    const auto bad = write_lines("bad.jsonl", R"({"id":"1","title":"a","description":"b","tags":["x"]})"
                                              "\n\n"
                                              "{not json}\n");
    try {
        load_corpus(bad, 1);
        FAIL("expected a parse error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    const auto missing = write_lines("missing.jsonl", R"({"id":"1","title":"a","tags":["x"]})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(missing, 1), doctest::Contains("description"), DataError);

    const auto dup = write_lines("dup.jsonl", R"({"id":"1","title":"a","description":"b","tags":["x"]})"
                                              "\n"
                                              R"({"id":"1","title":"c","description":"d","tags":["x"]})"
                                              "\n");
    CHECK_THROWS_WITH_AS(load_corpus(dup, 1), doctest::Contains("duplicate"), DataError);
}

TEST_CASE("vocabulary order: descending frequency, lexicographic ties") {
    const auto v = TagVocabulary::from_counts({{"zeta", 3}, {"alpha", 3}, {"beta", 5}, {"gamma", 1}});
    REQUIRE(v.size() == 4);
    CHECK(v.tags() == std::vector<std::string>{"beta", "alpha", "zeta", "gamma"});
    CHECK(*v.index_of("zeta") == 2);
    CHECK_FALSE(v.index_of("omega").has_value());
}

TEST_CASE("vocabulary size on a Zipf corpus matches an independent counter") {
    const auto dir = testing::scratch_dir("zipf");
    const auto objects = testing::zipf_corpus(1000, 40, 1.1, 11);
    testing::write_jsonl(dir / "zipf.jsonl", objects);

    // Independent one-pass count straight off the file.
    std::map<std::string, int> freq;
    std::ifstream in(dir / "zipf.jsonl");
    for (std::string line; std::getline(in, line);) {
        const auto record = nlohmann::json::parse(line);
        for (const auto& t : record.at("tags")) ++freq[t.get<std::string>()];
    }
    std::size_t expected = 0;
    for (const auto& [tag, n] : freq) expected += n >= 50;
    REQUIRE(expected > 3);

    const auto c = load_corpus(dir / "zipf.jsonl", 50);
    CHECK(c.vocab.size() == expected);
    for (std::size_t i = 0; i < c.vocab.size(); ++i) CHECK(c.vocab.frequency(i) >= 50);
}

TEST_CASE("vocabulary is deterministic regardless of input order") {
    auto objects = testing::zipf_corpus(300, 20, 1.0, 3);
    const auto a = build_corpus(objects, 5);
    std::reverse(objects.begin(), objects.end());
    const auto b = build_corpus(objects, 5);
    CHECK(a.vocab.tags() == b.vocab.tags());
    CHECK(a.vocab.frequencies() == b.vocab.frequencies());
}

TEST_CASE("encode_labels") {
    const auto v = TagVocabulary::from_counts({{"a", 3}, {"b", 2}, {"c", 1}});
    CHECK(encode_labels(make("x", {"b"}), v) == LabelVector{0, 1, 0});
    CHECK(encode_labels(make("x", {"z"}), v) == LabelVector{0, 0, 0});
    CHECK(label_indices(LabelVector{1, 0, 1}) == std::vector<std::uint32_t>{0, 2});
}

TEST_CASE("decode(encode(o)) equals the in-vocabulary tags") {
    const auto v = TagVocabulary::from_counts({{"t0", 9}, {"t1", 8}, {"t2", 7}, {"t3", 6}, {"t4", 5}, {"t5", 4}});
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        std::set<std::string> tags;
        const auto n = 1 + rng.below(5);
        for (std::size_t j = 0; j < n; ++j) tags.insert("t" + std::to_string(rng.below(9)));
        const auto o = make("o", tags);
        const auto bits = encode_labels(o, v);
        REQUIRE(bits.size() == v.size());
        std::set<std::string> expected;
        for (const auto& t : tags)
            if (v.index_of(t)) expected.insert(t);
        CHECK(decode_labels(bits, v) == expected);
    }
}

TEST_CASE("split_dataset determinism and partition") {
    std::vector<Object> objects;
    for (int i = 0; i < 12; ++i) objects.push_back(make("o" + std::to_string(i), {"a"}));
    const auto s1 = split_dataset(objects, 2, 42);
    const auto s2 = split_dataset(objects, 2, 42);
    CHECK(s1.test == s2.test);
    CHECK(s1.train == s2.train);
    CHECK(s1.test.size() == 2);
    CHECK(s1.train.size() == 10);
    CHECK_THROWS_AS(split_dataset(objects, 12, 1), ArgumentError);
    CHECK_THROWS_AS(split_dataset(objects, 0, 1), ArgumentError);

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = split_dataset(objects, 5, seed);
        std::set<std::string> train(s.train.begin(), s.train.end()), test(s.test.begin(), s.test.end());
        CHECK(test.size() == 5);
        CHECK(train.size() + test.size() == objects.size());
        for (const auto& id : test) CHECK_FALSE(train.count(id));
    }
}

TEST_CASE("split_dataset samples uniformly") {
    std::vector<Object> objects;
    for (int i = 0; i < 1000; ++i) objects.push_back(make("o" + std::to_string(i), {"a"}));
    constexpr int seeds = 100;
    constexpr std::size_t test_size = 100;
    std::map<std::string, int> hits;
    for (int seed = 0; seed < seeds; ++seed)
        for (const auto& id : split_dataset(objects, test_size, seed).test) ++hits[id];
    // Per-object count is Binomial(100, 0.1): mean 10, sigma 3.
    const double p = double(test_size) / 1000.0;
    const double mean = seeds * p;
    const double sigma = std::sqrt(seeds * p * (1 - p));
    int outside = 0;
    for (const auto& o : objects) outside += std::abs(hits[o.id] - mean) > 3 * sigma;
    // 3-sigma tail of the binomial is ~0.3%; allow a handful of the 1,000.
    CHECK(outside <= 10);
}
