#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "tagrec/example.hpp"
#include "tagrec/head.hpp"
#include "tagrec/metrics.hpp"

namespace tagrec {

// Quantity tracked for model selection and early stopping.
enum class Selection { val_loss, val_f1 };

std::string_view to_string(Selection s);
Selection parse_selection(std::string_view name);  // "loss" or "f1"

struct TrainParams {
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    std::size_t patience = 10;  // 0 disables early stopping
    std::uint64_t seed = 0;     // shuffle order
    Selection select = Selection::val_loss;

    // Validation F1 settings (recorded every epoch; used for selection
    // only with Selection::val_f1).
    std::size_t k = 10;
    double tau = 0.5;
    DenominatorMode mode = DenominatorMode::effective;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 0 is the model before any update
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_f1 = 0.0;
};

struct TrainResult {
    HeadModel model;  // best validation score seen, earliest epoch on ties
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam on the mean BCE loss. Batches never mix padded lengths:
// examples are grouped by row count, shuffled within each group, chunked,
// and the chunks are shuffled. Single-threaded and fully determined by
// the model, the data and params.seed.
TrainResult train(HeadModel model, std::span<const LabeledExample> train_set, std::span<const LabeledExample> val_set,
                  const TrainParams& params, const EpochCallback& on_epoch = {});

// Mean BCE loss over a set.
double mean_loss(const HeadModel& model, std::span<const LabeledExample> set);

}  // namespace tagrec
