#include "tagrec/recommend.hpp"

#include <algorithm>
#include <numeric>

#include "tagrec/errors.hpp"
#include "tagrec/example.hpp"
#include "tagrec/metrics.hpp"

namespace tagrec {

std::vector<std::uint32_t> RecommendationSet::indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(it.index);
    return out;
}

std::vector<std::uint32_t> select_threshold_topk(std::span<const double> scores, double tau, std::size_t k) {
    if (k == 0) throw ArgumentError("K must be positive");
    std::vector<std::uint32_t> picked;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] >= tau) picked.push_back(static_cast<std::uint32_t>(i));
    const auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    if (picked.size() > k) {
        std::partial_sort(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(k), picked.end(), better);
        picked.resize(k);
    } else {
        std::sort(picked.begin(), picked.end(), better);
    }
    return picked;
}

RecommendationSet apply_threshold_topk(std::span<const double> scores, const TagVocabulary& vocab, double tau,
                                       std::size_t k, std::string object_id) {
    if (scores.size() != vocab.size())
        throw DimensionError("score vector has " + std::to_string(scores.size()) + " entries, vocabulary has " +
                             std::to_string(vocab.size()));
    RecommendationSet set;
    set.object_id = std::move(object_id);
    set.k = k;
    set.tau = tau;
    for (auto i : select_threshold_topk(scores, tau, k)) set.items.push_back({i, vocab.tag(i), scores[i]});
    return set;
}

std::vector<double> default_tau_grid() {
    std::vector<double> grid;
    for (int i = 50; i <= 99; ++i) grid.push_back(i / 100.0);
    return grid;
}

CalibrationResult calibrate_threshold(std::span<const ScoreVector> scores,
                                      std::span<const std::vector<std::uint32_t>> truths, std::size_t k,
                                      std::span<const double> grid) {
    if (grid.empty()) throw ArgumentError("threshold grid is empty");
    if (scores.empty()) throw ArgumentError("validation set is empty");
    if (scores.size() != truths.size()) throw ArgumentError("scores and truths differ in length");
    for (double tau : grid)
        if (!(tau >= 0.0 && tau <= 1.0)) throw ArgumentError("threshold grid values must lie in [0, 1]");

    CalibrationResult result;
    bool have_best = false;
    std::vector<double> f1s(scores.size());
    for (double tau : grid) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const auto rec = select_threshold_topk(scores[i], tau, k);
            const auto hits = count_hits(rec, truths[i]);
            const double r = recall_at_k(hits, truths[i].size(), k);
            const double p = precision_at_k(hits, rec.size(), k, DenominatorMode::effective);
            f1s[i] = f1_at_k_single(p, r);
        }
        const double f1 = aggregate(f1s);
        result.curve.push_back({tau, f1});
        if (!have_best || f1 > result.best_f1 || (f1 == result.best_f1 && tau < result.best_tau)) {
            result.best_tau = tau;
            result.best_f1 = f1;
            have_best = true;
        }
    }
    return result;
}

CalibrationResult calibrate_threshold(const HeadModel& model, std::span<const LabeledExample> val, std::size_t k,
                                      std::span<const double> grid) {
    if (val.empty()) throw ArgumentError("validation set is empty");
    const auto inputs = inputs_of(val);
    const auto scores = score_all(model, inputs);
    return calibrate_threshold(scores, truths_of(val), k, grid);
}

RecommendationSet baseline_popularity(const TagVocabulary& vocab, std::size_t k) {
    if (vocab.empty()) throw ArgumentError("popularity baseline needs a non-empty vocabulary");
    if (k == 0) throw ArgumentError("K must be positive");
    const auto& freq = vocab.frequencies();
    const double total = static_cast<double>(std::accumulate(freq.begin(), freq.end(), std::size_t{0}));
    RecommendationSet set;
    set.k = k;
    set.tau = 0.0;
    // Vocabulary order is already descending frequency.
    for (std::size_t i = 0; i < std::min(k, vocab.size()); ++i)
        set.items.push_back({static_cast<std::uint32_t>(i), vocab.tag(i), static_cast<double>(freq[i]) / total});
    return set;
}

}  // namespace tagrec
