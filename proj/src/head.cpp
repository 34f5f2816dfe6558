#include "tagrec/head.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <thread>

#include "tagrec/errors.hpp"
#include "tagrec/rng.hpp"

namespace tagrec {

void HeadConfig::validate() const {
    if (dim == 0 || filters == 0 || hidden == 0 || num_tags == 0)
        throw ArgumentError("head dimensions must all be at least 1");
    if (region_sizes.empty()) throw ArgumentError("at least one region size is required");
    std::set<std::uint32_t> seen;
    for (auto r : region_sizes) {
        if (r == 0) throw ArgumentError("region sizes must be positive");
        if (!seen.insert(r).second) throw ArgumentError("region sizes must be distinct");
    }
}

HeadConfig HeadConfig::normalized() const {
    HeadConfig c = *this;
    std::sort(c.region_sizes.begin(), c.region_sizes.end());
    return c;
}

std::size_t HeadConfig::max_region() const {
    return region_sizes.empty() ? 0 : *std::max_element(region_sizes.begin(), region_sizes.end());
}

template <typename T>
HeadParams<T> HeadParams<T>::zeros(const HeadConfig& config) {
    const HeadConfig c = config.normalized();
    HeadParams p;
    for (auto r : c.region_sizes) {
        Conv conv;
        conv.region = r;
        conv.weights.assign(std::size_t{r} * c.dim * c.filters, T{});
        conv.bias.assign(c.filters, T{});
        p.conv.push_back(std::move(conv));
    }
    p.dense_w.assign(c.feature_count() * c.hidden, T{});
    p.dense_b.assign(c.hidden, T{});
    p.out_w.assign(std::size_t{c.hidden} * c.num_tags, T{});
    p.out_b.assign(c.num_tags, T{});
    return p;
}

template <typename T>
std::vector<std::span<T>> HeadParams<T>::tensors() {
    std::vector<std::span<T>> t;
    for (auto& c : conv) {
        t.emplace_back(c.weights);
        t.emplace_back(c.bias);
    }
    t.emplace_back(dense_w);
    t.emplace_back(dense_b);
    t.emplace_back(out_w);
    t.emplace_back(out_b);
    return t;
}

template <typename T>
std::vector<std::span<const T>> HeadParams<T>::tensors() const {
    std::vector<std::span<const T>> t;
    for (const auto& c : conv) {
        t.emplace_back(c.weights);
        t.emplace_back(c.bias);
    }
    t.emplace_back(dense_w);
    t.emplace_back(dense_b);
    t.emplace_back(out_w);
    t.emplace_back(out_b);
    return t;
}

template <typename T>
std::size_t HeadParams<T>::size() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.size();
    return n;
}

template <typename T>
template <typename U>
HeadParams<U> HeadParams<T>::cast() const {
    const auto convert = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
    HeadParams<U> out;
    for (const auto& c : conv) out.conv.push_back({c.region, convert(c.weights), convert(c.bias)});
    out.dense_w = convert(dense_w);
    out.dense_b = convert(dense_b);
    out.out_w = convert(out_w);
    out.out_b = convert(out_b);
    return out;
}

template struct HeadParams<float>;
template struct HeadParams<double>;
template HeadParams<double> HeadParams<float>::cast<double>() const;
template HeadParams<float> HeadParams<double>::cast<float>() const;

HeadModel init_model(const HeadConfig& config) {
    config.validate();
    HeadModel m;
    m.config = config.normalized();
    m.params = HeadParams<float>::zeros(m.config);

    Rng rng(m.config.seed);
    const auto fill = [&rng](std::vector<float>& w, double fan_in, double fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w) v = static_cast<float>(rng.uniform(-bound, bound));
    };
    const auto& c = m.config;
    // Conv fans follow the receptive-field convention.
    for (auto& conv : m.params.conv)
        fill(conv.weights, double(conv.region) * c.dim, double(conv.region) * c.filters);
    fill(m.params.dense_w, double(c.feature_count()), c.hidden);
    fill(m.params.out_w, c.hidden, c.num_tags);
    return m;
}

void check_model(const HeadModel& model) {
    model.config.validate();
    const auto expected = HeadParams<float>::zeros(model.config);
    const auto want = expected.tensors();
    const auto have = model.params.tensors();
    if (want.size() != have.size()) throw DimensionError("model tensor count does not match its config");
    for (std::size_t i = 0; i < want.size(); ++i)
        if (want[i].size() != have[i].size())
            throw DimensionError("model tensor " + std::to_string(i) + " has " + std::to_string(have[i].size()) +
                                 " elements, config implies " + std::to_string(want[i].size()));
    for (std::size_t i = 0; i < model.params.conv.size(); ++i)
        if (model.params.conv[i].region != model.config.region_sizes[i])
            throw DimensionError("conv bank region sizes do not match the config");
    for (const auto& t : have)
        for (float v : t)
            if (!std::isfinite(v)) throw NumericError("model contains a non-finite parameter");
}

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double clamp_score(double s) { return std::clamp(s, kScoreEpsilon, 1.0 - kScoreEpsilon); }

void check_input(const HeadConfig& config, const EmbeddingMatrix& x) {
    if (x.cols != config.dim)
        throw ArgumentError("embedding '" + x.object_id + "' has D=" + std::to_string(x.cols) + ", model expects " +
                            std::to_string(config.dim));
    if (x.valid_len < config.max_region())
        throw ArgumentError("sequence '" + x.object_id + "' has " + std::to_string(x.valid_len) +
                            " tokens, minimum is the largest region size " + std::to_string(config.max_region()));
    if (x.values.size() != x.rows * x.cols || x.valid_len > x.rows)
        throw ArgumentError("embedding '" + x.object_id + "' has an inconsistent shape");
}

// Activations kept for the backward pass.
struct Trace {
    std::vector<double> pooled;                 // [feature]
    std::vector<std::size_t> argmax;            // [feature], first maximal position
    std::vector<double> pooled_pre;             // conv pre-activation at argmax
    std::vector<double> hidden_pre, hidden;     // [hidden]
    std::vector<double> raw_scores;             // unclamped sigmoid
    std::vector<double> scores;                 // clamped
};

template <typename T>
Trace run_forward(const HeadConfig& c, const HeadParams<T>& p, const EmbeddingMatrix& x) {
    check_input(c, x);
    const std::size_t D = c.dim, F = c.filters, H = c.hidden, N = c.num_tags;
    Trace tr;
    tr.pooled.assign(c.feature_count(), 0.0);
    tr.argmax.assign(c.feature_count(), 0);
    tr.pooled_pre.assign(c.feature_count(), 0.0);

    std::vector<double> acc(F);
    for (std::size_t g = 0; g < p.conv.size(); ++g) {
        const auto& conv = p.conv[g];
        const std::size_t r = conv.region;
        const std::size_t positions = x.valid_len - r + 1;
        for (std::size_t t = 0; t < positions; ++t) {
            for (std::size_t f = 0; f < F; ++f) acc[f] = conv.bias[f];
            for (std::size_t k = 0; k < r; ++k) {
                const auto row = x.row(t + k);
                const T* w = conv.weights.data() + k * D * F;
                for (std::size_t d = 0; d < D; ++d) {
                    const double xv = row[d];
                    const T* wd = w + d * F;
                    for (std::size_t f = 0; f < F; ++f) acc[f] += xv * static_cast<double>(wd[f]);
                }
            }
            for (std::size_t f = 0; f < F; ++f) {
                const std::size_t j = g * F + f;
                const double a = acc[f] > 0.0 ? acc[f] : 0.0;
                if (t == 0 || a > tr.pooled[j]) {
                    tr.pooled[j] = a;
                    tr.argmax[j] = t;
                    tr.pooled_pre[j] = acc[f];
                }
            }
        }
    }

    tr.hidden_pre.assign(p.dense_b.begin(), p.dense_b.end());
    for (std::size_t j = 0; j < tr.pooled.size(); ++j) {
        const double v = tr.pooled[j];
        if (v == 0.0) continue;
        const T* w = p.dense_w.data() + j * H;
        for (std::size_t u = 0; u < H; ++u) tr.hidden_pre[u] += v * static_cast<double>(w[u]);
    }
    tr.hidden.resize(H);
    for (std::size_t u = 0; u < H; ++u) tr.hidden[u] = tr.hidden_pre[u] > 0.0 ? tr.hidden_pre[u] : 0.0;

    std::vector<double> logits(p.out_b.begin(), p.out_b.end());
    for (std::size_t u = 0; u < H; ++u) {
        const double h = tr.hidden[u];
        if (h == 0.0) continue;
        const T* w = p.out_w.data() + u * N;
        for (std::size_t n = 0; n < N; ++n) logits[n] += h * static_cast<double>(w[n]);
    }
    tr.raw_scores.resize(N);
    tr.scores.resize(N);
    for (std::size_t n = 0; n < N; ++n) {
        tr.raw_scores[n] = sigmoid(logits[n]);
        tr.scores[n] = clamp_score(tr.raw_scores[n]);
    }
    return tr;
}

}  // namespace

template <typename T>
ScoreVector forward(const HeadConfig& config, const HeadParams<T>& params, const EmbeddingMatrix& x) {
    return run_forward(config, params, x).scores;
}

template ScoreVector forward(const HeadConfig&, const HeadParams<float>&, const EmbeddingMatrix&);
template ScoreVector forward(const HeadConfig&, const HeadParams<double>&, const EmbeddingMatrix&);

ScoreVector forward(const HeadModel& model, const EmbeddingMatrix& x) {
    return forward(model.config, model.params, x);
}

double loss_bce(std::span<const double> scores, const LabelVector& labels) {
    if (scores.size() != labels.size())
        throw ArgumentError("score vector has " + std::to_string(scores.size()) + " entries, labels have " +
                            std::to_string(labels.size()));
    if (scores.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double s = clamp_score(scores[i]);
        total -= labels[i] ? std::log(s) : std::log(1.0 - s);
    }
    return total / static_cast<double>(scores.size());
}

template <typename T>
double accumulate_gradients(const HeadConfig& c, const HeadParams<T>& p, const EmbeddingMatrix& x,
                            const LabelVector& labels, double scale, HeadGradients& grads) {
    if (labels.size() != c.num_tags)
        throw ArgumentError("label vector has " + std::to_string(labels.size()) + " entries, model has N=" +
                            std::to_string(c.num_tags));
    const Trace tr = run_forward(c, p, x);
    const std::size_t D = c.dim, F = c.filters, H = c.hidden, N = c.num_tags;

    // d loss / d logit = (s - y) / N, zero where the clamp is active.
    std::vector<double> d_logit(N);
    for (std::size_t n = 0; n < N; ++n) {
        const double s = tr.raw_scores[n];
        const bool clamped = s < kScoreEpsilon || s > 1.0 - kScoreEpsilon;
        d_logit[n] = clamped ? 0.0 : scale * (s - (labels[n] ? 1.0 : 0.0)) / static_cast<double>(N);
    }

    std::vector<double> d_hidden(H, 0.0);
    for (std::size_t u = 0; u < H; ++u) {
        const double h = tr.hidden[u];
        const T* w = p.out_w.data() + u * N;
        double* gw = grads.out_w.data() + u * N;
        double dh = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            gw[n] += h * d_logit[n];
            dh += static_cast<double>(w[n]) * d_logit[n];
        }
        d_hidden[u] = tr.hidden_pre[u] > 0.0 ? dh : 0.0;
    }
    for (std::size_t n = 0; n < N; ++n) grads.out_b[n] += d_logit[n];

    std::vector<double> d_pooled(tr.pooled.size(), 0.0);
    for (std::size_t j = 0; j < tr.pooled.size(); ++j) {
        const double v = tr.pooled[j];
        const T* w = p.dense_w.data() + j * H;
        double* gw = grads.dense_w.data() + j * H;
        double dp = 0.0;
        for (std::size_t u = 0; u < H; ++u) {
            gw[u] += v * d_hidden[u];
            dp += static_cast<double>(w[u]) * d_hidden[u];
        }
        d_pooled[j] = dp;
    }
    for (std::size_t u = 0; u < H; ++u) grads.dense_b[u] += d_hidden[u];

    for (std::size_t g = 0; g < p.conv.size(); ++g) {
        auto& gconv = grads.conv[g];
        const std::size_t r = p.conv[g].region;
        for (std::size_t f = 0; f < F; ++f) {
            const std::size_t j = g * F + f;
            if (tr.pooled_pre[j] <= 0.0) continue;
            const double dz = d_pooled[j];
            const std::size_t t = tr.argmax[j];
            gconv.bias[f] += dz;
            for (std::size_t k = 0; k < r; ++k) {
                const auto row = x.row(t + k);
                double* gw = gconv.weights.data() + k * D * F;
                for (std::size_t d = 0; d < D; ++d) gw[d * F + f] += dz * row[d];
            }
        }
    }
    return loss_bce(tr.scores, labels);
}

template double accumulate_gradients(const HeadConfig&, const HeadParams<float>&, const EmbeddingMatrix&,
                                     const LabelVector&, double, HeadGradients&);
template double accumulate_gradients(const HeadConfig&, const HeadParams<double>&, const EmbeddingMatrix&,
                                     const LabelVector&, double, HeadGradients&);

HeadGradients backward(const HeadModel& model, const EmbeddingMatrix& x, const LabelVector& labels) {
    auto grads = HeadGradients::zeros(model.config);
    accumulate_gradients(model.config, model.params, x, labels, 1.0, grads);
    return grads;
}

std::vector<ScoreVector> score_all(const HeadModel& model, std::span<const EmbeddingMatrix* const> inputs,
                                   unsigned threads) {
    std::vector<ScoreVector> out(inputs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, inputs.size()));
    if (threads <= 1) {
        for (std::size_t i = 0; i < inputs.size(); ++i) out[i] = forward(model, *inputs[i]);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < inputs.size(); i += threads) out[i] = forward(model, *inputs[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

GradientCheckResult check_gradients(const HeadModel& model, const EmbeddingMatrix& x, const LabelVector& labels,
                                    double step, double tolerance) {
    const HeadConfig& c = model.config;
    HeadParams<double> params = model.params.cast<double>();
    auto analytic = HeadGradients::zeros(c);
    accumulate_gradients(c, params, x, labels, 1.0, analytic);

    GradientCheckResult result;
    auto tensors = params.tensors();
    const auto grad_tensors = analytic.tensors();
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        for (std::size_t i = 0; i < tensors[ti].size(); ++i) {
            double& w = tensors[ti][i];
            const double saved = w;
            w = saved + step;
            const double up = loss_bce(forward(c, params, x), labels);
            w = saved - step;
            const double down = loss_bce(forward(c, params, x), labels);
            w = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = grad_tensors[ti][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            result.max_relative_error = std::max(result.max_relative_error, rel);
            ++result.checked;
            if (rel > tolerance) ++result.failures;
        }
    }
    return result;
}

}  // namespace tagrec
