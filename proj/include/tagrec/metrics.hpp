#pragma once

// Recall@K, Precision@K and F1@K for tag recommendation. Per-object values
// are macro-averaged over the test set, so F1@K is the mean of per-object
// F1 values, not the harmonic mean of the averaged precision and recall.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagrec/example.hpp"
#include "tagrec/head.hpp"
#include "tagrec/recommend.hpp"

namespace tagrec {

// strict_k divides precision by K always; effective divides by the number
// of tags actually recommended.
enum class DenominatorMode { strict_k, effective };

std::string_view to_string(DenominatorMode mode);
DenominatorMode parse_denominator(std::string_view name);

// |recommended ∩ truth|, treating both as sets.
std::size_t count_hits(std::span<const std::uint32_t> recommended, std::span<const std::uint32_t> truth);

// hits / K when |truth| > K, else hits / |truth|.
double recall_at_k(std::size_t hits, std::size_t truth_size, std::size_t k);
double precision_at_k(std::size_t hits, std::size_t recommended_size, std::size_t k, DenominatorMode mode);

double recall_at_k_single(const RecommendationSet& recommended, std::span<const std::uint32_t> truth, std::size_t k);
double precision_at_k_single(const RecommendationSet& recommended, std::span<const std::uint32_t> truth,
                             std::size_t k, DenominatorMode mode);
// 2PR / (P + R), 0 when P + R == 0.
double f1_at_k_single(double precision, double recall);

// Arithmetic mean; throws ArgumentError on an empty input.
double aggregate(std::span<const double> values);

struct ObjectMetrics {
    std::string id;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

struct MetricTriple {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::size_t k = 0;
    DenominatorMode mode = DenominatorMode::effective;
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    std::vector<ObjectMetrics> per_object;

    // Filled by multi_run_report; a single run reports count 1, its own
    // values as the mean and zero spread.
    std::size_t run_count = 1;
    MetricTriple mean;
    MetricTriple stddev;
};

// Scores pre-built recommendation sets against truths. Each set must
// already be cut to at most k items.
MetricsReport score_recommendations(std::span<const RecommendationSet> recommended,
                                    std::span<const std::vector<std::uint32_t>> truths, std::size_t k,
                                    DenominatorMode mode);

// Threshold-gated top-k recommendation on every example, then metrics.
// Throws DimensionError when the model's N differs from the vocabulary.
MetricsReport evaluate_run(const HeadModel& model, std::span<const LabeledExample> test, const TagVocabulary& vocab,
                           double tau, std::size_t k, DenominatorMode mode);

// Same from precomputed scores (one per example).
MetricsReport evaluate_scores(std::span<const ScoreVector> scores, std::span<const LabeledExample> test,
                              const TagVocabulary& vocab, double tau, std::size_t k, DenominatorMode mode);

// Mean and sample standard deviation of each aggregate across runs.
MetricsReport multi_run_report(std::span<const MetricsReport> reports);

nlohmann::json to_json(const MetricsReport& report, bool include_per_object = true);

}  // namespace tagrec
