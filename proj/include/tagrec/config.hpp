#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagrec/head.hpp"
#include "tagrec/metrics.hpp"
#include "tagrec/train.hpp"

namespace tagrec {

// Everything that determines a run. Serialized verbatim into every artifact
// the run writes.
struct RunConfig {
    // paths
    std::string corpus;
    std::string embeddings;
    std::string bundle;
    std::string model;
    std::string out;

    // ingestion
    std::size_t min_tag_freq = 50;
    std::size_t test_size = 10000;
    std::uint64_t seed = 0;

    // embeddings
    std::vector<std::size_t> boundaries{64, 128, 256, 512};
    std::size_t max_seq_len = 512;
    std::size_t mock_dim = 32;

    // head
    std::vector<std::uint32_t> region_sizes{2, 3, 4};
    std::uint32_t filters = 50;
    std::uint32_t hidden = 256;

    // training
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double lr = 1e-3;
    std::size_t patience = 10;
    double val_fraction = 0.1;
    double val_tau = 0.5;
    Selection select_by = Selection::val_loss;

    // recommendation and evaluation
    double tau = 0.92;
    std::size_t k = 10;
    std::vector<std::size_t> k_list;  // empty means {k}
    std::vector<double> grid;         // empty means grid_min..grid_max by grid_step
    double grid_min = 0.50;
    double grid_max = 0.99;
    double grid_step = 0.01;
    DenominatorMode denominator = DenominatorMode::effective;
    std::size_t runs = 1;
    std::vector<std::string> ids;

    std::vector<double> tau_grid() const;
    std::vector<std::size_t> ks() const;
    HeadConfig head_config(std::uint32_t dim, std::uint32_t num_tags, std::uint64_t head_seed) const;
    TrainParams train_params(std::uint64_t run_seed) const;

    // Throws ArgumentError for out-of-range values.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& config);

// Overlays the keys present in `j` onto `base`. Unknown keys are an error.
RunConfig merge_config(RunConfig base, const nlohmann::json& j);

}  // namespace tagrec
