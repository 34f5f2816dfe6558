// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "support/synthetic.hpp"
#include "tagrec/commands.hpp"
#include "tagrec/embedding_store.hpp"
#include "tagrec/metrics.hpp"
#include "tagrec/model_io.hpp"
#include "tagrec/recommend.hpp"
#include "tagrec/rng.hpp"
#include "tagrec/train.hpp"

using namespace tagrec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double time_limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (time_limit_s > 0 && secs >= time_limit_s) {
        o.pass = false;
        o.detail += fmt::format("; exceeded {} s limit", time_limit_s);
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("[{}] {} ({:.2f} s): {}", o.pass ? "PASS" : "FAIL", name, secs, o.detail) << std::endl;
}

std::vector<std::uint32_t> random_subset(Rng& rng, std::size_t universe, std::size_t size) {
    std::set<std::uint32_t> s;
    while (s.size() < size) s.insert(std::uint32_t(rng.below(universe)));
    std::vector<std::uint32_t> v(s.begin(), s.end());
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
    return v;
}

RecommendationSet as_set(const std::vector<std::uint32_t>& idx, std::size_t k) {
    RecommendationSet s;
    s.k = k;
    for (auto i : idx) s.items.push_back({i, {}, 1.0});
    return s;
}

// Brute-force evaluator: membership by linear scan, formulas as printed.
struct Brute {
    double recall, strict, effective, f1_strict, f1_effective;
};

Brute brute_force(const std::vector<std::uint32_t>& tr, const std::vector<std::uint32_t>& ot, std::size_t k) {
    std::size_t hits = 0;
    for (auto a : tr)
        for (auto b : ot) hits += (a == b);
    Brute b{};
    b.recall = ot.size() > k ? double(hits) / double(k) : double(hits) / double(ot.size());
    b.strict = double(hits) / double(k);
    b.effective = tr.empty() ? 0.0 : double(hits) / double(tr.size());
    const auto f1 = [](double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); };
    b.f1_strict = f1(b.strict, b.recall);
    b.f1_effective = f1(b.effective, b.recall);
    return b;
}

// Separable synthetic setup shared by the overfit and stability checks.
constexpr std::size_t kMockDim = 32;
constexpr std::uint64_t kSeed = 7;

HeadConfig head_for(const LoadedCorpus& c) {
    HeadConfig h;
    h.dim = kMockDim;
    h.num_tags = std::uint32_t(c.vocab.size());
    h.seed = kSeed;
    return h;
}

TrainParams overfit_params() {
    TrainParams p;
    p.epochs = 200;
    p.batch_size = 8;
    p.lr = 1e-3;
    p.patience = 0;
    p.seed = kSeed;
    p.k = 5;
    p.tau = 0.5;
    p.mode = DenominatorMode::effective;
    return p;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

int main() {
    criterion("metric oracle: 20000 random (TR, OT, K) cases bit-equal to brute force", 5.0, [] {
        Rng rng(2024);
        std::size_t mismatches = 0;
        const std::size_t cases = 20000;
        for (std::size_t i = 0; i < cases; ++i) {
            const std::size_t k = 1 + rng.below(15);
            const auto tr = random_subset(rng, 40, rng.below(k + 1));
            const auto ot = random_subset(rng, 40, 1 + rng.below(20));
            const auto want = brute_force(tr, ot, k);
            const auto set = as_set(tr, k);
            const double r = recall_at_k_single(set, ot, k);
            const double ps = precision_at_k_single(set, ot, k, DenominatorMode::strict_k);
            const double pe = precision_at_k_single(set, ot, k, DenominatorMode::effective);
            mismatches += r != want.recall || ps != want.strict || pe != want.effective ||
                          f1_at_k_single(ps, r) != want.f1_strict || f1_at_k_single(pe, r) != want.f1_effective;
        }
        return Outcome{mismatches == 0, fmt::format("{} cases, {} mismatches", cases, mismatches)};
    });

    criterion("recall piecewise form equals hits / min(K, |OT|), |OT| 1..15, K 1..12", 0, [] {
        std::size_t checked = 0, bad = 0;
        for (std::size_t ot = 1; ot <= 15; ++ot)
            for (std::size_t k = 1; k <= 12; ++k)
                for (std::size_t hits = 0; hits <= std::min(ot, k); ++hits, ++checked)
                    bad += recall_at_k(hits, ot, k) != double(hits) / double(std::min(k, ot));
        return Outcome{bad == 0, fmt::format("{} combinations, {} mismatches", checked, bad)};
    });

    criterion("F1 is the mean of per-object F1 (2/3), not the harmonic mean of means (0.75)", 0, [] {
        const std::vector<RecommendationSet> recs{as_set({0}, 10), as_set({0, 5}, 10)};
        const std::vector<std::vector<std::uint32_t>> truths{{0, 1}, {0}};
        const auto r = score_recommendations(recs, truths, 10, DenominatorMode::effective);
        return Outcome{r.f1 == 2.0 / 3.0 && r.precision == 0.75 && r.recall == 0.75,
                       fmt::format("F1 = {:.17g}, P = {}, R = {}", r.f1, r.precision, r.recall)};
    });

    criterion("gradient check: D=8, L=12, regions 2,3,4, 3 filters, hidden 5, N=4, rel. error <= 1e-4", 30.0, [] {
        HeadConfig c;
        c.dim = 8;
        c.region_sizes = {2, 3, 4};
        c.filters = 3;
        c.hidden = 5;
        c.num_tags = 4;
        std::size_t checked = 0, fails = 0;
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            c.seed = seed;
            auto m = init_model(c);
            Rng rng(seed + 1000);
            for (auto t : m.params.tensors())
                for (auto& w : t) w += static_cast<float>(rng.uniform(-0.1, 0.1));
            EmbeddingMatrix x("g", 12, 8, 12);
            for (auto& v : x.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
            LabelVector y(4);
            for (auto& b : y) b = std::uint8_t(rng.below(2));
            const auto r = check_gradients(m, x, y, 1e-3, 1e-4);
            checked += r.checked;
            fails += r.failures;
            worst = std::max(worst, r.max_relative_error);
        }
        return Outcome{fails == 0 && checked > 0,
                       fmt::format("{} parameters over 5 models, {} above tolerance, max rel. error {:.3g}", checked,
                                   fails, worst)};
    });

    criterion("overfit: separable corpus (50 objects, seed 7) reaches train F1@5 >= 0.95 within 200 epochs", 120.0, [&] {
        const auto corpus = build_corpus(testing::separable_corpus(50, 16, kSeed), 1);
        const auto examples = testing::mock_examples(corpus, kMockDim, kSeed);
        const auto params = overfit_params();
        const auto a = train(init_model(head_for(corpus)), examples, examples, params);
        const auto b = train(init_model(head_for(corpus)), examples, examples, params);
        const auto report = evaluate_run(a.model, examples, corpus.vocab, 0.5, 5, DenominatorMode::effective);
        std::size_t first = 0;
        while (first < a.history.size() && a.history[first].val_f1 < 0.95) ++first;
        const bool deterministic = a.model == b.model;
        return Outcome{report.f1 >= 0.95 && deterministic,
                       fmt::format("F1@5 = {:.4f}, first epoch >= 0.95: {}, N = {}, repeat run identical: {}",
                                   report.f1, first < a.history.size() ? std::to_string(first) : "none",
                                   corpus.vocab.size(), deterministic)};
    });

    criterion("stability: thresholded P@5 - P@10 drop is smaller than forced top-K drop", 120.0, [&] {
        // Held-out objects from a larger separable corpus.
        const auto corpus = build_corpus(testing::separable_corpus(400, 16, kSeed), 1);
        const auto examples = testing::mock_examples(corpus, kMockDim, kSeed);
        const auto held_out = sample_without_replacement(examples.size(), 150, kSeed);
        std::vector<LabeledExample> fit, val, test;
        std::set<std::size_t> in_test(held_out.begin(), held_out.begin() + 100);
        std::set<std::size_t> in_val(held_out.begin() + 100, held_out.end());
        for (std::size_t i = 0; i < examples.size(); ++i)
            (in_test.count(i) ? test : in_val.count(i) ? val : fit).push_back(examples[i]);
        auto params = overfit_params();
        params.tau = kDefaultTau;
        params.patience = 20;
        const auto trained = train(init_model(head_for(corpus)), fit, val, params);
        const auto scores = score_all(trained.model, inputs_of(test));
        const auto p = [&](double tau, std::size_t k) {
            return evaluate_scores(scores, test, corpus.vocab, tau, k, DenominatorMode::effective).precision;
        };
        const double gated5 = p(kDefaultTau, 5), gated10 = p(kDefaultTau, 10);
        const double forced5 = p(0.0, 5), forced10 = p(0.0, 10);
        const double gated_drop = gated5 - gated10, forced_drop = forced5 - forced10;
        return Outcome{gated_drop < forced_drop,
                       fmt::format("tau={}: P@5 {:.4f} -> P@10 {:.4f} (drop {:.4f}); forced: {:.4f} -> {:.4f} "
                                   "(drop {:.4f}); {} test objects, best epoch {}",
                                   kDefaultTau, gated5, gated10, gated_drop, forced5, forced10, forced_drop,
                                   test.size(), trained.best_epoch)};
    });

    criterion("threshold monotonicity and cap-prefix over 10000 random score vectors", 0, [] {
        Rng rng(99);
        std::size_t mono_bad = 0, prefix_bad = 0;
        for (int i = 0; i < 10000; ++i) {
            std::vector<double> s(1 + rng.below(40));
            for (auto& v : s) v = rng.below(3) == 0 ? double(rng.below(11)) / 10.0 : rng.uniform();
            const double t1 = rng.uniform();
            const double t2 = t1 + rng.uniform() * (1.0 - t1);
            const std::size_t k = 1 + rng.below(s.size());
            auto lo = select_threshold_topk(s, t1, s.size());
            auto hi = select_threshold_topk(s, t2, s.size());
            std::sort(lo.begin(), lo.end());
            std::sort(hi.begin(), hi.end());
            mono_bad += !std::includes(lo.begin(), lo.end(), hi.begin(), hi.end());
            const auto capped = select_threshold_topk(s, t1, k);
            const auto wider = select_threshold_topk(s, t1, k + 1);
            prefix_bad += capped.size() > wider.size() || !std::equal(capped.begin(), capped.end(), wider.begin());
        }
        return Outcome{mono_bad == 0 && prefix_bad == 0,
                       fmt::format("monotonicity violations {}, prefix violations {}", mono_bad, prefix_bad)};
    });

    criterion("determinism: two ingest -> embed-mock -> train -> evaluate runs give identical files", 120.0, [] {
        const auto root = testing::scratch_dir("acceptance_determinism");
        testing::write_jsonl(root / "corpus.jsonl", testing::zipf_corpus(300, 12, 1.1, 5));
        const auto original_cwd = fs::current_path();
        std::vector<std::map<std::string, std::string>> hashes;
        for (const char* run : {"a", "b"}) {
            fs::create_directories(root / run);
            fs::copy_file(root / "corpus.jsonl", root / run / "corpus.jsonl");
            fs::current_path(root / run);
            RunConfig c;
            c.corpus = "corpus.jsonl";
            c.bundle = "data.json";
            c.embeddings = "emb.tgbe";
            c.model = "model.tgbh";
            c.min_tag_freq = 5;
            c.test_size = 60;
            c.seed = kSeed;
            c.mock_dim = 16;
            c.filters = 8;
            c.hidden = 32;
            c.epochs = 8;
            c.batch_size = 16;
            c.k_list = {5, 10};
            std::ostringstream log;
            auto step = c;
            step.out = c.bundle;
            run_ingest(step, log);
            step.out = c.embeddings;
            run_embed_mock(step, log);
            step.out = c.model;
            run_train(step, log);
            step.out = "report.json";
            run_evaluate(step, log);
            fs::current_path(original_cwd);
            std::map<std::string, std::string> files;
            for (const char* f : {"data.json", "emb.tgbe", "model.tgbh", "model.tgbh.json", "report.json"})
                files[f] = file_bytes(root / run / f);
            hashes.push_back(files);
        }
        std::vector<std::string> differing;
        for (const auto& [name, bytes] : hashes[0])
            if (bytes != hashes[1].at(name) || bytes.empty()) differing.push_back(name);
        std::string diff;
        for (const auto& d : differing) diff += " " + d;
        return Outcome{differing.empty(), differing.empty() ? "5 artifacts byte-identical" : "differing:" + diff};
    });

    criterion("TGBE and TGBH round trips are bitwise lossless for random payloads", 0, [] {
        const auto dir = testing::scratch_dir("acceptance_roundtrip");
        Rng rng(31337);
        std::size_t bad = 0;
        std::vector<EmbeddingMatrix> ms;
        for (int i = 0; i < 200; ++i) {
            const std::size_t l = rng.below(40);
            EmbeddingMatrix m(fmt::format("id-{}-{}", i, rng.next()), l, 24, l);
            for (auto& v : m.values) {
                // Random bit patterns, restricted to finite floats.
                std::uint32_t bits = std::uint32_t(rng.next());
                if (((bits >> 23) & 0xff) == 0xff) bits &= ~(1u << 23);
                std::memcpy(&v, &bits, 4);
            }
            ms.push_back(std::move(m));
        }
        write_embedding_store(dir / "r.tgbe", ms, 24);
        const auto back = read_embedding_store(dir / "r.tgbe");
        bad += back.size() != ms.size();
        for (std::size_t i = 0; i < std::min(back.size(), ms.size()); ++i)
            bad += back[i].object_id != ms[i].object_id || back[i].rows != ms[i].rows ||
                   back[i].valid_len != ms[i].valid_len ||
                   std::memcmp(back[i].values.data(), ms[i].values.data(), ms[i].values.size() * 4) != 0;

        std::size_t models = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed, ++models) {
            HeadConfig c;
            c.dim = 1 + std::uint32_t(rng.below(16));
            c.region_sizes = {1, std::uint32_t(2 + rng.below(4))};
            c.filters = 1 + std::uint32_t(rng.below(8));
            c.hidden = 1 + std::uint32_t(rng.below(16));
            c.num_tags = 1 + std::uint32_t(rng.below(30));
            c.seed = rng.next();
            auto m = init_model(c);
            for (auto t : m.params.tensors())
                for (auto& w : t) w = static_cast<float>(rng.uniform(-100.0, 100.0));
            save_model(m, dir / "m.tgbh");
            const auto first = file_bytes(dir / "m.tgbh");
            const auto loaded = load_model(dir / "m.tgbh");
            save_model(loaded, dir / "m2.tgbh");
            bad += !(loaded == m) || file_bytes(dir / "m2.tgbh") != first;
        }
        return Outcome{bad == 0, fmt::format("{} embedding records, {} models, {} mismatches", ms.size(), models, bad)};
    });

    std::cout << (failures == 0 ? "all acceptance criteria passed" : fmt::format("{} criteria failed", failures))
              << std::endl;
    return failures == 0 ? 0 : 1;
}
