#pragma once

#include <cstdint>
#include <span>

#include "tagrec/head.hpp"

namespace tagrec {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    HeadParams<double> m;
    HeadParams<double> v;

    static AdamState zeros(const HeadConfig& config) {
        return {HeadParams<double>::zeros(config), HeadParams<double>::zeros(config)};
    }
};

// One bias-corrected adaptive-moment update of a flat tensor. `step` is the
// 1-based update count.
void adam_update(std::span<float> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t step, double lr, const AdamOptions& options = {});

// Applies adam_update to every tensor of the model. Throws ArgumentError on
// shape mismatch and NumericError if a parameter becomes non-finite.
void adam_step(HeadModel& model, const HeadGradients& grads, AdamState& state, std::uint64_t step, double lr,
               const AdamOptions& options = {});

}  // namespace tagrec
