#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tagrec/errors.hpp"
#include "tagrec/metrics.hpp"
#include "tagrec/rng.hpp"

using namespace tagrec;

namespace {

RecommendationSet make_set(std::vector<std::uint32_t> idx, std::size_t k) {
    RecommendationSet s;
    s.k = k;
    for (auto i : idx) s.items.push_back({i, "t" + std::to_string(i), 1.0});
    return s;
}

std::vector<std::uint32_t> random_subset(Rng& rng, std::size_t universe, std::size_t size) {
    std::set<std::uint32_t> s;
    while (s.size() < size) s.insert(std::uint32_t(rng.below(universe)));
    std::vector<std::uint32_t> v(s.begin(), s.end());
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    return v;
}

}  // namespace

TEST_CASE("recall") {
    CHECK(recall_at_k(6, 12, 10) == 0.6);
    CHECK(recall_at_k(2, 2, 10) == 1.0);
    CHECK(recall_at_k(0, 3, 10) == 0.0);
    CHECK_THROWS_AS(recall_at_k(1, 0, 10), ArgumentError);
    CHECK_THROWS_AS(recall_at_k(4, 3, 10), ArgumentError);

    const auto tr = make_set({0, 1}, 10);
    const std::vector<std::uint32_t> ot{1, 0};
    CHECK(recall_at_k_single(tr, ot, 10) == 1.0);
}

TEST_CASE("recall piecewise equals min-denominator form") {
    for (std::size_t ot = 1; ot <= 15; ++ot)
        for (std::size_t k = 1; k <= 12; ++k)
            for (std::size_t hits = 0; hits <= std::min(ot, k); ++hits)
                CHECK(recall_at_k(hits, ot, k) == double(hits) / double(std::min(k, ot)));
}

TEST_CASE("precision in both modes") {
    const auto tr = make_set({0, 1, 2}, 10);
    const std::vector<std::uint32_t> ot{0, 1};
    CHECK(precision_at_k_single(tr, ot, 10, DenominatorMode::strict_k) == 0.2);
    CHECK(precision_at_k_single(tr, ot, 10, DenominatorMode::effective) == 2.0 / 3.0);
    const auto empty = make_set({}, 10);
    CHECK(precision_at_k_single(empty, ot, 10, DenominatorMode::strict_k) == 0.0);
    CHECK(precision_at_k_single(empty, ot, 10, DenominatorMode::effective) == 0.0);
    CHECK_THROWS_AS(precision_at_k(1, 4, 3, DenominatorMode::strict_k), ArgumentError);
}

TEST_CASE("f1 and aggregation") {
    CHECK(f1_at_k_single(0.2, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(f1_at_k_single(0.0, 0.0) == 0.0);
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform();
        CHECK(f1_at_k_single(x, x) == doctest::Approx(x).epsilon(1e-15));
    }
    CHECK(aggregate(std::vector<double>{0.5, 1.0}) == 0.75);
    CHECK_THROWS_AS(aggregate(std::vector<double>{}), ArgumentError);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(1 + rng.below(50));
        double sum = 0.0;
        for (auto& x : v) sum += (x = rng.uniform());
        CHECK(aggregate(v) == sum / double(v.size()));
    }
}

TEST_CASE("macro F1 is the mean of per-object F1") {
    // (P, R) = (1, 0.5) and (0.5, 1), effective denominator, K = 10.
    std::vector<RecommendationSet> recs{make_set({0}, 10), make_set({0, 5}, 10)};
    std::vector<std::vector<std::uint32_t>> truths{{0, 1}, {0}};
    const auto r = score_recommendations(recs, truths, 10, DenominatorMode::effective);
    CHECK(r.precision == 0.75);
    CHECK(r.recall == 0.75);
    CHECK(r.f1 == 2.0 / 3.0);
    CHECK(r.f1 != 0.75);
}

TEST_CASE("randomized cases against a direct evaluator") {
    Rng rng(17);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t k = 1 + rng.below(12);
        const auto tr = random_subset(rng, 30, rng.below(k + 1));
        const auto ot = random_subset(rng, 30, 1 + rng.below(15));
        std::size_t hits = 0;
        for (auto t : tr) hits += std::count(ot.begin(), ot.end(), t);
        const double r = ot.size() > k ? double(hits) / double(k) : double(hits) / double(ot.size());
        const double ps = double(hits) / double(k);
        const double pe = tr.empty() ? 0.0 : double(hits) / double(tr.size());

        const auto set = make_set(tr, k);
        CHECK(recall_at_k_single(set, ot, k) == r);
        CHECK(precision_at_k_single(set, ot, k, DenominatorMode::strict_k) == ps);
        CHECK(precision_at_k_single(set, ot, k, DenominatorMode::effective) == pe);

        auto shuffled = set;
        std::reverse(shuffled.items.begin(), shuffled.items.end());
        CHECK(recall_at_k_single(shuffled, ot, k) == r);
        CHECK(precision_at_k_single(shuffled, ot, k, DenominatorMode::effective) == pe);
    }
}

TEST_CASE("evaluate_scores on perfect and constant predictors") {
    const auto vocab = TagVocabulary::from_counts({{"a", 3}, {"b", 2}, {"c", 1}});
    std::vector<LabeledExample> test;
    std::vector<ScoreVector> perfect, constant;
    for (LabelVector y : {LabelVector{1, 0, 1}, LabelVector{0, 1, 0}, LabelVector{1, 1, 1}}) {
        test.push_back({EmbeddingMatrix("o" + std::to_string(test.size()), 1, 1, 1), y});
        perfect.emplace_back(y.begin(), y.end());
        constant.emplace_back(3, 0.5);
    }
    const auto p = evaluate_scores(perfect, test, vocab, 0.5, 10, DenominatorMode::effective);
    for (const auto& o : p.per_object) CHECK(o.recall == 1.0);
    CHECK(p.f1 == 1.0);
    const auto c = evaluate_scores(constant, test, vocab, 0.92, 10, DenominatorMode::strict_k);
    CHECK(c.recall == 0.0);
    CHECK(c.precision == 0.0);
    CHECK(c.f1 == 0.0);
    CHECK(p.per_object[0].id == "o0");
}

TEST_CASE("multi-run report") {
    MetricsReport a, b;
    a.k = b.k = 10;
    a.recall = 0.4;
    b.recall = 0.6;
    const std::vector<MetricsReport> two{a, b};
    const auto r = multi_run_report(two);
    CHECK(r.run_count == 2);
    CHECK(r.mean.recall == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.stddev.recall == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));

    std::vector<MetricsReport> same(10, a);
    const auto s = multi_run_report(same);
    CHECK(s.mean.recall == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(s.stddev.recall == 0.0);

    Rng rng(3);
    std::vector<MetricsReport> many(10, a);
    double sum = 0.0;
    for (auto& m : many) sum += (m.f1 = rng.uniform());
    const double mean = sum / 10.0;
    double ss = 0.0;
    for (const auto& m : many) ss += (m.f1 - mean) * (m.f1 - mean);
    const auto mr = multi_run_report(many);
    CHECK(std::abs(mr.mean.f1 - mean) <= 1e-12);
    CHECK(std::abs(mr.stddev.f1 - std::sqrt(ss / 9.0)) <= 1e-12);

    b.k = 5;
    const std::vector<MetricsReport> mixed{a, b};
    CHECK_THROWS_AS(multi_run_report(mixed), ArgumentError);
    CHECK_THROWS_AS(multi_run_report(std::span<const MetricsReport>{}), ArgumentError);
}

TEST_CASE("JSON report totals agree with per-object values") {
    Rng rng(8);
    std::vector<RecommendationSet> recs;
    std::vector<std::vector<std::uint32_t>> truths;
    for (int i = 0; i < 40; ++i) {
        recs.push_back(make_set(random_subset(rng, 12, rng.below(6)), 5));
        truths.push_back(random_subset(rng, 12, 1 + rng.below(6)));
    }
    const auto r = score_recommendations(recs, truths, 5, DenominatorMode::strict_k);
    const auto j = to_json(r);
    CHECK(j["mode"] == "strict");
    CHECK(j["k"] == 5);
    double f1 = 0.0;
    for (const auto& o : j["per_object"]) {
        CHECK(o["f1"].get<double>() >= 0.0);
        CHECK(o["f1"].get<double>() <= 1.0);
        f1 += o["f1"].get<double>();
    }
    CHECK(std::abs(f1 / 40.0 - j["f1"].get<double>()) <= 1e-12);
    CHECK(to_json(r, false).contains("per_object") == false);
    CHECK(parse_denominator("effective") == DenominatorMode::effective);
    CHECK_THROWS_AS(parse_denominator("bogus"), ArgumentError);
}
