#include "tagrec/config.hpp"

#include <cmath>
#include <set>

#include "tagrec/errors.hpp"

namespace tagrec {

using nlohmann::json;

std::vector<double> RunConfig::tau_grid() const {
    if (!grid.empty()) return grid;
    if (!(grid_step > 0.0) || grid_max < grid_min) throw ArgumentError("invalid threshold grid range");
    const auto count = static_cast<long long>(std::floor((grid_max - grid_min) / grid_step + 1e-9));
    std::vector<double> out;
    const double inv = 1.0 / grid_step;
    if (std::abs(inv - std::round(inv)) < 1e-9) {
        // Divide integers so 0.61 comes out as the double nearest 0.61.
        const double scale = std::round(inv);
        const double first = std::round(grid_min * scale);
        for (long long i = 0; i <= count; ++i) out.push_back((first + static_cast<double>(i)) / scale);
    } else {
        for (long long i = 0; i <= count; ++i) out.push_back(grid_min + static_cast<double>(i) * grid_step);
    }
    return out;
}

std::vector<std::size_t> RunConfig::ks() const {
    if (k_list.empty()) return {k};
    return k_list;
}

HeadConfig RunConfig::head_config(std::uint32_t dim, std::uint32_t num_tags, std::uint64_t head_seed) const {
    HeadConfig c;
    c.dim = dim;
    c.region_sizes = region_sizes;
    c.filters = filters;
    c.hidden = hidden;
    c.num_tags = num_tags;
    c.seed = head_seed;
    return c;
}

TrainParams RunConfig::train_params(std::uint64_t run_seed) const {
    TrainParams p;
    p.epochs = epochs;
    p.batch_size = batch_size;
    p.lr = lr;
    p.patience = patience;
    p.seed = run_seed;
    p.k = k;
    p.tau = val_tau;
    p.select = select_by;
    p.mode = denominator;
    return p;
}

void RunConfig::validate() const {
    const auto require = [](bool ok, const char* what) {
        if (!ok) throw ArgumentError(what);
    };
    require(min_tag_freq > 0, "min_tag_freq must be positive");
    require(test_size > 0, "test_size must be positive");
    require(max_seq_len > 0, "max_seq_len must be positive");
    require(mock_dim > 0, "mock_dim must be positive");
    require(filters > 0 && hidden > 0 && !region_sizes.empty(), "head dimensions must be positive");
    require(batch_size > 0, "batch_size must be positive");
    require(lr > 0.0, "lr must be positive");
    require(val_fraction >= 0.0 && val_fraction < 1.0, "val_fraction must lie in [0, 1)");
    require(val_tau >= 0.0 && val_tau <= 1.0, "val_tau must lie in [0, 1]");
    require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");
    require(k > 0, "k must be positive");
    for (auto kk : k_list) require(kk > 0, "k-list entries must be positive");
    require(runs > 0, "runs must be positive");
    for (double g : tau_grid()) require(g >= 0.0 && g <= 1.0, "grid values must lie in [0, 1]");
}

json to_json(const RunConfig& c) {
    return json{
        {"corpus", c.corpus},
        {"embeddings", c.embeddings},
        {"bundle", c.bundle},
        {"model", c.model},
        {"out", c.out},
        {"min_tag_freq", c.min_tag_freq},
        {"test_size", c.test_size},
        {"seed", c.seed},
        {"boundaries", c.boundaries},
        {"max_seq_len", c.max_seq_len},
        {"mock_dim", c.mock_dim},
        {"region_sizes", c.region_sizes},
        {"filters", c.filters},
        {"hidden", c.hidden},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"lr", c.lr},
        {"patience", c.patience},
        {"val_fraction", c.val_fraction},
        {"val_tau", c.val_tau},
        {"select_by", std::string(to_string(c.select_by))},
        {"tau", c.tau},
        {"k", c.k},
        {"k_list", c.k_list},
        {"grid", c.grid},
        {"grid_min", c.grid_min},
        {"grid_max", c.grid_max},
        {"grid_step", c.grid_step},
        {"denominator", std::string(to_string(c.denominator))},
        {"runs", c.runs},
        {"ids", c.ids},
    };
}

RunConfig merge_config(RunConfig c, const json& j) {
    if (!j.is_object()) throw ArgumentError("config must be a JSON object");
    static const std::set<std::string> known = [] {
        std::set<std::string> keys;
        const auto defaults = to_json(RunConfig{});
        for (const auto& [key, value] : defaults.items()) keys.insert(key);
        return keys;
    }();
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ArgumentError("unknown config key: " + key);

    const auto get = [&](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end()) {
            try {
                field = it->get<std::remove_reference_t<decltype(field)>>();
            } catch (const json::exception& e) {
                throw ArgumentError(std::string("config key '") + key + "': " + e.what());
            }
        }
    };
    get("corpus", c.corpus);
    get("embeddings", c.embeddings);
    get("bundle", c.bundle);
    get("model", c.model);
    get("out", c.out);
    get("min_tag_freq", c.min_tag_freq);
    get("test_size", c.test_size);
    get("seed", c.seed);
    get("boundaries", c.boundaries);
    get("max_seq_len", c.max_seq_len);
    get("mock_dim", c.mock_dim);
    get("region_sizes", c.region_sizes);
    get("filters", c.filters);
    get("hidden", c.hidden);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("lr", c.lr);
    get("patience", c.patience);
    get("val_fraction", c.val_fraction);
    get("val_tau", c.val_tau);
    get("tau", c.tau);
    get("k", c.k);
    get("k_list", c.k_list);
    get("grid", c.grid);
    get("grid_min", c.grid_min);
    get("grid_max", c.grid_max);
    get("grid_step", c.grid_step);
    get("runs", c.runs);
    get("ids", c.ids);
    if (auto it = j.find("denominator"); it != j.end()) {
        if (!it->is_string()) throw ArgumentError("config key 'denominator' must be a string");
        c.denominator = parse_denominator(it->get<std::string>());
    }
    if (auto it = j.find("select_by"); it != j.end()) {
        if (!it->is_string()) throw ArgumentError("config key 'select_by' must be a string");
        c.select_by = parse_selection(it->get<std::string>());
    }
    return c;
}

}  // namespace tagrec
