#pragma once

// Trainable classification head over frozen token embeddings:
//
//   per region size r: 1-D convolution over the valid rows (stride 1, no
//   padding) -> ReLU -> max over time
//   concatenated pooled features -> dense + ReLU -> dense -> sigmoid
//
// Parameters are stored as float32; all activations and reductions run in
// double.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tagrec/corpus.hpp"
#include "tagrec/embedding.hpp"

namespace tagrec {

inline constexpr double kScoreEpsilon = 1e-7;

struct HeadConfig {
    std::uint32_t dim = 0;
    std::vector<std::uint32_t> region_sizes{2, 3, 4};
    std::uint32_t filters = 50;
    std::uint32_t hidden = 256;
    std::uint32_t num_tags = 0;
    std::uint64_t seed = 0;

    // Throws ArgumentError for zero dimensions or repeated region sizes.
    void validate() const;

    // Copy with region sizes sorted ascending (the storage order).
    HeadConfig normalized() const;

    std::size_t max_region() const;
    std::size_t feature_count() const { return region_sizes.size() * filters; }

    bool operator==(const HeadConfig&) const = default;
};

template <typename T>
struct HeadParams {
    struct Conv {
        std::uint32_t region = 0;
        std::vector<T> weights;  // [offset][dim][filter]
        std::vector<T> bias;     // [filter]
        bool operator==(const Conv&) const = default;
    };

    std::vector<Conv> conv;  // ascending region size
    std::vector<T> dense_w;  // [feature][hidden]
    std::vector<T> dense_b;  // [hidden]
    std::vector<T> out_w;    // [hidden][tag]
    std::vector<T> out_b;    // [tag]

    static HeadParams zeros(const HeadConfig& config);

    // All tensors in declaration order: conv weights and bias per region,
    // dense weights and bias, output weights and bias.
    std::vector<std::span<T>> tensors();
    std::vector<std::span<const T>> tensors() const;

    std::size_t size() const;

    template <typename U>
    HeadParams<U> cast() const;

    bool operator==(const HeadParams&) const = default;
};

struct HeadModel {
    HeadConfig config;
    HeadParams<float> params;

    bool operator==(const HeadModel&) const = default;
};

using HeadGradients = HeadParams<double>;
using ScoreVector = std::vector<double>;

// Glorot-uniform weights from the config seed, zero biases.
HeadModel init_model(const HeadConfig& config);

// Throws DimensionError when parameter shapes disagree with the config and
// NumericError when any parameter is non-finite.
void check_model(const HeadModel& model);

// Scores in [kScoreEpsilon, 1 - kScoreEpsilon], one per tag. Rows beyond
// x.valid_len are ignored. Throws ArgumentError if x.cols != D or
// x.valid_len is shorter than the largest region.
ScoreVector forward(const HeadModel& model, const EmbeddingMatrix& x);

template <typename T>
ScoreVector forward(const HeadConfig& config, const HeadParams<T>& params, const EmbeddingMatrix& x);

// Mean over tags of binary cross-entropy with scores clamped to
// [kScoreEpsilon, 1 - kScoreEpsilon].
double loss_bce(std::span<const double> scores, const LabelVector& labels);

// Exact gradient of loss_bce(forward(x), labels). Max pooling routes the
// gradient to the first maximal position.
HeadGradients backward(const HeadModel& model, const EmbeddingMatrix& x, const LabelVector& labels);

// Adds scale * gradient into `grads` and returns the loss.
template <typename T>
double accumulate_gradients(const HeadConfig& config, const HeadParams<T>& params, const EmbeddingMatrix& x,
                            const LabelVector& labels, double scale, HeadGradients& grads);

// Scores every matrix, spreading the work over `threads` workers (0 picks
// the hardware concurrency). Output order matches input order.
std::vector<ScoreVector> score_all(const HeadModel& model, std::span<const EmbeddingMatrix* const> inputs,
                                   unsigned threads = 0);

struct GradientCheckResult {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double max_relative_error = 0.0;
};

// Compares backward() against central finite differences of the loss for
// every parameter, on a float64 copy of the model. Relative error is
// |a - n| / max(|a|, |n|, 1e-8).
GradientCheckResult check_gradients(const HeadModel& model, const EmbeddingMatrix& x, const LabelVector& labels,
                                    double step = 1e-3, double tolerance = 1e-4);

}  // namespace tagrec
