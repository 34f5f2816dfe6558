#include "tagrec/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tagrec/errors.hpp"
#include "tagrec/optimizer.hpp"
#include "tagrec/rng.hpp"

namespace tagrec {
namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const LabeledExample> set, std::size_t batch_size,
                                                   Rng& rng) {
    std::map<std::size_t, std::vector<std::size_t>> by_length;
    for (std::size_t i = 0; i < set.size(); ++i) by_length[set[i].x.rows].push_back(i);
    std::vector<std::vector<std::size_t>> batches;
    for (auto& [len, members] : by_length) {
        shuffle(members, rng);
        for (std::size_t b = 0; b < members.size(); b += batch_size)
            batches.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(b),
                                 members.begin() + static_cast<std::ptrdiff_t>(std::min(b + batch_size, members.size())));
    }
    shuffle(batches, rng);
    return batches;
}

EpochRecord measure(const HeadModel& model, std::span<const LabeledExample> train_set,
                    std::span<const LabeledExample> val_set, const TrainParams& params, std::size_t epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = mean_loss(model, train_set);
    const auto scores = score_all(model, inputs_of(val_set), 1);
    double val_loss = 0.0;
    for (std::size_t i = 0; i < val_set.size(); ++i) val_loss += loss_bce(scores[i], val_set[i].labels);
    rec.val_loss = val_loss / static_cast<double>(val_set.size());
    std::vector<RecommendationSet> recs;
    recs.reserve(val_set.size());
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        RecommendationSet s;
        s.k = params.k;
        s.tau = params.tau;
        for (auto idx : select_threshold_topk(scores[i], params.tau, params.k)) s.items.push_back({idx, {}, scores[i][idx]});
        recs.push_back(std::move(s));
    }
    rec.val_f1 = score_recommendations(recs, truths_of(val_set), params.k, params.mode).f1;
    return rec;
}

}  // namespace

double mean_loss(const HeadModel& model, std::span<const LabeledExample> set) {
    if (set.empty()) return 0.0;
    double total = 0.0;
    for (const auto& e : set) total += loss_bce(forward(model, e.x), e.labels);
    return total / static_cast<double>(set.size());
}

std::string_view to_string(Selection s) { return s == Selection::val_f1 ? "f1" : "loss"; }

Selection parse_selection(std::string_view name) {
    if (name == "loss") return Selection::val_loss;
    if (name == "f1") return Selection::val_f1;
    throw ArgumentError("unknown selection criterion '" + std::string(name) + "' (expected loss or f1)");
}

TrainResult train(HeadModel model, std::span<const LabeledExample> train_set, std::span<const LabeledExample> val_set,
                  const TrainParams& params, const EpochCallback& on_epoch) {
    if (train_set.empty()) throw ArgumentError("training set is empty");
    if (val_set.empty()) throw ArgumentError("validation set is empty");
    if (params.batch_size == 0) throw ArgumentError("batch size must be positive");
    if (params.k == 0) throw ArgumentError("K must be positive");
    if (!(params.lr > 0.0)) throw ArgumentError("learning rate must be positive");
    check_model(model);
    for (const auto& e : train_set)
        if (e.labels.size() != model.config.num_tags)
            throw DimensionError("training labels do not match the model's N");

    TrainResult result;
    result.model = model;
    result.history.push_back(measure(model, train_set, val_set, params, 0));
    if (on_epoch) on_epoch(result.history.back());
    // Higher is better for both criteria after negating the loss.
    const auto score = [&](const EpochRecord& r) { return params.select == Selection::val_f1 ? r.val_f1 : -r.val_loss; };
    double best = score(result.history.back());

    Rng rng(params.seed);
    AdamState state = AdamState::zeros(model.config);
    auto grads = HeadGradients::zeros(model.config);
    std::uint64_t step = 0;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
        for (const auto& batch : make_batches(train_set, params.batch_size, rng)) {
            for (auto t : grads.tensors()) std::fill(t.begin(), t.end(), 0.0);
            const double scale = 1.0 / static_cast<double>(batch.size());
            for (auto i : batch) {
                const double loss =
                    accumulate_gradients(model.config, model.params, train_set[i].x, train_set[i].labels, scale, grads);
                if (!std::isfinite(loss))
                    throw NumericError("non-finite loss on '" + train_set[i].x.object_id + "' in epoch " +
                                       std::to_string(epoch));
            }
            adam_step(model, grads, state, ++step, params.lr);
        }

        result.history.push_back(measure(model, train_set, val_set, params, epoch));
        const auto& rec = result.history.back();
        if (on_epoch) on_epoch(rec);
        if (score(rec) > best) {
            best = score(rec);
            result.model = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (params.patience > 0 && ++since_best >= params.patience) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace tagrec
