#include "tagrec/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "tagrec/errors.hpp"

namespace tagrec {

std::string_view to_string(DenominatorMode mode) {
    return mode == DenominatorMode::strict_k ? "strict" : "effective";
}

DenominatorMode parse_denominator(std::string_view name) {
    if (name == "strict" || name == "strict-k") return DenominatorMode::strict_k;
    if (name == "effective") return DenominatorMode::effective;
    throw ArgumentError("unknown denominator mode '" + std::string(name) + "' (expected strict or effective)");
}

std::size_t count_hits(std::span<const std::uint32_t> recommended, std::span<const std::uint32_t> truth) {
    std::vector<std::uint32_t> a(recommended.begin(), recommended.end());
    std::vector<std::uint32_t> b(truth.begin(), truth.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::size_t hits = 0;
    for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
        if (a[i] == b[j]) {
            ++hits;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return hits;
}

double recall_at_k(std::size_t hits, std::size_t truth_size, std::size_t k) {
    if (truth_size == 0) throw ArgumentError("recall is undefined for an object without true tags");
    if (k == 0) throw ArgumentError("K must be positive");
    if (hits > std::min(truth_size, k)) throw ArgumentError("more hits than true tags or K");
    if (truth_size > k) return static_cast<double>(hits) / static_cast<double>(k);
    return static_cast<double>(hits) / static_cast<double>(truth_size);
}

double precision_at_k(std::size_t hits, std::size_t recommended_size, std::size_t k, DenominatorMode mode) {
    if (k == 0) throw ArgumentError("K must be positive");
    if (recommended_size > k) throw ArgumentError("recommendation set is larger than K");
    if (mode == DenominatorMode::strict_k) return static_cast<double>(hits) / static_cast<double>(k);
    if (recommended_size == 0) return 0.0;
    return static_cast<double>(hits) / static_cast<double>(recommended_size);
}

double recall_at_k_single(const RecommendationSet& recommended, std::span<const std::uint32_t> truth, std::size_t k) {
    if (recommended.items.size() > k) throw ArgumentError("recommendation set is larger than K");
    return recall_at_k(count_hits(recommended.indices(), truth), truth.size(), k);
}

double precision_at_k_single(const RecommendationSet& recommended, std::span<const std::uint32_t> truth,
                             std::size_t k, DenominatorMode mode) {
    if (truth.empty()) throw ArgumentError("precision is undefined for an object without true tags");
    return precision_at_k(count_hits(recommended.indices(), truth), recommended.items.size(), k, mode);
}

double f1_at_k_single(double precision, double recall) {
    const double sum = precision + recall;
    if (sum == 0.0) return 0.0;
    return 2.0 * precision * recall / sum;
}

double aggregate(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("cannot average over an empty test set");
    double total = 0.0;
    for (double v : values) total += v;
    return total / static_cast<double>(values.size());
}

MetricsReport score_recommendations(std::span<const RecommendationSet> recommended,
                                    std::span<const std::vector<std::uint32_t>> truths, std::size_t k,
                                    DenominatorMode mode) {
    if (recommended.size() != truths.size()) throw ArgumentError("recommendations and truths differ in length");
    if (recommended.empty()) throw ArgumentError("cannot evaluate an empty test set");
    MetricsReport report;
    report.k = k;
    report.mode = mode;
    std::vector<double> r(recommended.size()), p(recommended.size()), f(recommended.size());
    for (std::size_t i = 0; i < recommended.size(); ++i) {
        r[i] = recall_at_k_single(recommended[i], truths[i], k);
        p[i] = precision_at_k_single(recommended[i], truths[i], k, mode);
        f[i] = f1_at_k_single(p[i], r[i]);
        report.per_object.push_back({recommended[i].object_id, r[i], p[i], f[i]});
    }
    report.recall = aggregate(r);
    report.precision = aggregate(p);
    report.f1 = aggregate(f);
    report.mean = {report.recall, report.precision, report.f1};
    return report;
}

MetricsReport evaluate_scores(std::span<const ScoreVector> scores, std::span<const LabeledExample> test,
                              const TagVocabulary& vocab, double tau, std::size_t k, DenominatorMode mode) {
    if (scores.size() != test.size()) throw ArgumentError("one score vector per test example is required");
    std::vector<RecommendationSet> recs;
    recs.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i)
        recs.push_back(apply_threshold_topk(scores[i], vocab, tau, k, test[i].x.object_id));
    return score_recommendations(recs, truths_of(test), k, mode);
}

MetricsReport evaluate_run(const HeadModel& model, std::span<const LabeledExample> test, const TagVocabulary& vocab,
                           double tau, std::size_t k, DenominatorMode mode) {
    if (model.config.num_tags != vocab.size())
        throw DimensionError("model has N=" + std::to_string(model.config.num_tags) + " tags, vocabulary has " +
                             std::to_string(vocab.size()));
    const auto scores = score_all(model, inputs_of(test));
    return evaluate_scores(scores, test, vocab, tau, k, mode);
}

MetricsReport multi_run_report(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw ArgumentError("no runs to aggregate");
    for (const auto& r : reports)
        if (r.k != reports.front().k || r.mode != reports.front().mode)
            throw ArgumentError("cannot aggregate runs with different K or denominator mode");

    const double n = static_cast<double>(reports.size());
    MetricTriple mean, var;
    for (const auto& r : reports) {
        mean.recall += r.recall;
        mean.precision += r.precision;
        mean.f1 += r.f1;
    }
    mean.recall /= n;
    mean.precision /= n;
    mean.f1 /= n;
    // One refinement pass removes the rounding error of the plain sum, so
    // identical runs give exactly their common value and zero spread.
    MetricTriple residual;
    for (const auto& r : reports) {
        residual.recall += r.recall - mean.recall;
        residual.precision += r.precision - mean.precision;
        residual.f1 += r.f1 - mean.f1;
    }
    mean.recall += residual.recall / n;
    mean.precision += residual.precision / n;
    mean.f1 += residual.f1 / n;
    for (const auto& r : reports) {
        var.recall += (r.recall - mean.recall) * (r.recall - mean.recall);
        var.precision += (r.precision - mean.precision) * (r.precision - mean.precision);
        var.f1 += (r.f1 - mean.f1) * (r.f1 - mean.f1);
    }
    MetricsReport out;
    out.k = reports.front().k;
    out.mode = reports.front().mode;
    out.run_count = reports.size();
    out.mean = mean;
    if (reports.size() > 1) {
        out.stddev = {std::sqrt(var.recall / (n - 1)), std::sqrt(var.precision / (n - 1)), std::sqrt(var.f1 / (n - 1))};
    }
    out.recall = mean.recall;
    out.precision = mean.precision;
    out.f1 = mean.f1;
    if (reports.size() == 1) out.per_object = reports.front().per_object;
    return out;
}

nlohmann::json to_json(const MetricsReport& report, bool include_per_object) {
    using nlohmann::json;
    const auto triple = [](const MetricTriple& t) {
        return json{{"recall", t.recall}, {"precision", t.precision}, {"f1", t.f1}};
    };
    json j{{"k", report.k},
           {"mode", std::string(to_string(report.mode))},
           {"recall", report.recall},
           {"precision", report.precision},
           {"f1", report.f1},
           {"runs", {{"count", report.run_count}, {"mean", triple(report.mean)}, {"stddev", triple(report.stddev)}}}};
    if (include_per_object) {
        json per = json::array();
        for (const auto& o : report.per_object)
            per.push_back({{"id", o.id}, {"recall", o.recall}, {"precision", o.precision}, {"f1", o.f1}});
        j["per_object"] = std::move(per);
    }
    return j;
}

}  // namespace tagrec
