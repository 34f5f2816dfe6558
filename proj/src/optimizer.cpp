#include "tagrec/optimizer.hpp"

#include <cmath>

#include "tagrec/errors.hpp"

namespace tagrec {

void adam_update(std::span<float> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 std::uint64_t step, double lr, const AdamOptions& o) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
        throw ArgumentError("adam: parameter, gradient and moment sizes differ");
    if (step == 0) throw ArgumentError("adam: step index is 1-based");
    const double t = static_cast<double>(step);
    const double c1 = 1.0 - std::pow(o.beta1, t);
    const double c2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
        v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        params[i] = static_cast<float>(params[i] - lr * m_hat / (std::sqrt(v_hat) + o.epsilon));
    }
}

void adam_step(HeadModel& model, const HeadGradients& grads, AdamState& state, std::uint64_t step, double lr,
               const AdamOptions& options) {
    auto p = model.params.tensors();
    auto g = grads.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
        throw ArgumentError("adam: gradient set does not match the model layout");
    for (std::size_t i = 0; i < p.size(); ++i) {
        adam_update(p[i], g[i], m[i], v[i], step, lr, options);
        for (float x : p[i])
            if (!std::isfinite(x)) throw NumericError("non-finite parameter after optimizer step " + std::to_string(step));
    }
}

}  // namespace tagrec
