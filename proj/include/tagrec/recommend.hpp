#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tagrec/corpus.hpp"
#include "tagrec/head.hpp"

namespace tagrec {

inline constexpr double kDefaultTau = 0.92;

struct RecommendedTag {
    std::uint32_t index = 0;
    std::string tag;
    double score = 0.0;
};

// Descending by score; equal scores keep the lower tag index first.
struct RecommendationSet {
    std::string object_id;
    std::vector<RecommendedTag> items;
    std::size_t k = 0;
    double tau = 0.0;

    std::vector<std::uint32_t> indices() const;
};

// Indices of tags with score >= tau, best first, at most k of them.
std::vector<std::uint32_t> select_threshold_topk(std::span<const double> scores, double tau, std::size_t k);

RecommendationSet apply_threshold_topk(std::span<const double> scores, const TagVocabulary& vocab, double tau,
                                       std::size_t k, std::string object_id = {});

// {0.50, 0.51, ..., 0.99}
std::vector<double> default_tau_grid();

struct CalibrationPoint {
    double tau = 0.0;
    double f1 = 0.0;
};

struct CalibrationResult {
    double best_tau = 0.0;
    double best_f1 = 0.0;
    std::vector<CalibrationPoint> curve;  // grid order
};

// Picks the grid value maximizing mean F1@k (effective precision
// denominator); ties go to the smallest tau.
CalibrationResult calibrate_threshold(std::span<const ScoreVector> scores,
                                      std::span<const std::vector<std::uint32_t>> truths, std::size_t k,
                                      std::span<const double> grid);

struct LabeledExample;

CalibrationResult calibrate_threshold(const HeadModel& model, std::span<const LabeledExample> val, std::size_t k,
                                      std::span<const double> grid);

// The k most frequent vocabulary tags, scored by relative frequency.
RecommendationSet baseline_popularity(const TagVocabulary& vocab, std::size_t k);

}  // namespace tagrec
