// tagrec: ingest a tagged corpus, train the convolutional head on frozen
// token embeddings, calibrate the threshold, evaluate and recommend.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tagrec/commands.hpp"
#include "tagrec/config.hpp"
#include "tagrec/errors.hpp"

namespace {

using tagrec::RunConfig;

// Options only override the config file when given on the command line.
class Overrides {
public:
    template <typename T, typename Apply>
    CLI::Option* add(CLI::App* app, const std::string& name, const std::string& help, Apply apply) {
        auto value = std::make_shared<T>();
        CLI::Option* opt = app->add_option(name, *value, help);
        appliers_.push_back([opt, value, apply](RunConfig& c) {
            if (opt->count() > 0) apply(c, *value);
        });
        return opt;
    }

    void apply(RunConfig& c) const {
        for (const auto& f : appliers_) f(c);
    }

private:
    std::vector<std::function<void(RunConfig&)>> appliers_;
};

void add_common(CLI::App* app, Overrides& o) {
    o.add<std::uint64_t>(app, "--seed", "Random seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
    o.add<std::size_t>(app, "--k", "Maximum number of recommended tags", [](RunConfig& c, std::size_t v) { c.k = v; });
    o.add<double>(app, "--tau", "Recommendation threshold", [](RunConfig& c, double v) { c.tau = v; });
    o.add<std::string>(app, "--denominator", "Precision denominator: strict or effective",
                       [](RunConfig& c, const std::string& v) { c.denominator = tagrec::parse_denominator(v); })
        ->check(CLI::IsMember({"strict", "effective"}));
}

void add_data_inputs(CLI::App* app, Overrides& o) {
    o.add<std::string>(app, "--data", "Dataset bundle", [](RunConfig& c, const std::string& v) { c.bundle = v; });
    o.add<std::string>(app, "--emb", "TGBE embedding store", [](RunConfig& c, const std::string& v) { c.embeddings = v; });
    o.add<std::vector<std::size_t>>(app, "--boundaries", "Bucket boundaries, ascending",
                                    [](RunConfig& c, const std::vector<std::size_t>& v) { c.boundaries = v; })
        ->delimiter(',');
    o.add<std::size_t>(app, "--max-seq-len", "Maximum sequence length",
                       [](RunConfig& c, std::size_t v) { c.max_seq_len = v; });
}

void add_training(CLI::App* app, Overrides& o) {
    o.add<std::size_t>(app, "--epochs", "Training epochs", [](RunConfig& c, std::size_t v) { c.epochs = v; });
    o.add<std::size_t>(app, "--batch-size", "Mini-batch size", [](RunConfig& c, std::size_t v) { c.batch_size = v; });
    o.add<double>(app, "--lr", "Learning rate", [](RunConfig& c, double v) { c.lr = v; });
    o.add<std::size_t>(app, "--patience", "Early-stopping patience in epochs (0 disables)",
                       [](RunConfig& c, std::size_t v) { c.patience = v; });
    o.add<double>(app, "--val-fraction", "Share of training objects held out for model selection",
                  [](RunConfig& c, double v) { c.val_fraction = v; });
    o.add<double>(app, "--val-tau", "Threshold used for validation F1 during training",
                  [](RunConfig& c, double v) { c.val_tau = v; });
    o.add<std::string>(app, "--select-by", "Model selection and early stopping on validation loss or f1",
                       [](RunConfig& c, const std::string& v) { c.select_by = tagrec::parse_selection(v); })
        ->check(CLI::IsMember({"loss", "f1"}));
    o.add<std::vector<std::uint32_t>>(app, "--regions", "Convolution region sizes",
                                      [](RunConfig& c, const std::vector<std::uint32_t>& v) { c.region_sizes = v; })
        ->delimiter(',');
    o.add<std::uint32_t>(app, "--filters", "Filters per region size", [](RunConfig& c, std::uint32_t v) { c.filters = v; });
    o.add<std::uint32_t>(app, "--hidden", "Dense layer width", [](RunConfig& c, std::uint32_t v) { c.hidden = v; });
}

RunConfig build_config(const std::string& config_path, const Overrides& o) {
    RunConfig c;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw tagrec::ArgumentError("cannot read config file: " + config_path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw tagrec::ArgumentError("malformed config file " + config_path + ": " + e.what());
        }
        c = tagrec::merge_config(c, j);
    }
    o.apply(c);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tag recommendation with a convolutional head over frozen token embeddings"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration; command-line flags take precedence");

    Overrides o;
    std::function<void(const RunConfig&)> action;
    const auto out_flag = [&](CLI::App* sub, const char* help) {
        o.add<std::string>(sub, "--out", help, [](RunConfig& c, const std::string& v) { c.out = v; });
    };

    auto* ingest = app.add_subcommand("ingest", "Build the dataset bundle from a JSON Lines corpus");
    ingest->add_option("--config", config_path, "JSON run configuration");
    o.add<std::string>(ingest, "--corpus", "JSON Lines corpus", [](RunConfig& c, const std::string& v) { c.corpus = v; });
    o.add<std::size_t>(ingest, "--min-tag-freq", "Minimum objects per retained tag",
                       [](RunConfig& c, std::size_t v) { c.min_tag_freq = v; });
    o.add<std::size_t>(ingest, "--test-size", "Objects in the test split",
                       [](RunConfig& c, std::size_t v) { c.test_size = v; });
    out_flag(ingest, "Output dataset bundle");
    add_common(ingest, o);
    ingest->callback([&] { action = [](const RunConfig& c) { tagrec::run_ingest(c, std::cout); }; });

    auto* embed = app.add_subcommand("embed-mock", "Write a TGBE store with the deterministic mock embedder");
    embed->add_option("--config", config_path, "JSON run configuration");
    o.add<std::string>(embed, "--data", "Dataset bundle", [](RunConfig& c, const std::string& v) { c.bundle = v; });
    o.add<std::size_t>(embed, "--dim", "Embedding dimension", [](RunConfig& c, std::size_t v) { c.mock_dim = v; });
    o.add<std::size_t>(embed, "--max-seq-len", "Maximum sequence length",
                       [](RunConfig& c, std::size_t v) { c.max_seq_len = v; });
    o.add<std::uint64_t>(embed, "--seed", "Embedding seed", [](RunConfig& c, std::uint64_t v) { c.seed = v; });
    out_flag(embed, "Output TGBE store");
    embed->callback([&] { action = [](const RunConfig& c) { tagrec::run_embed_mock(c, std::cout); }; });

    auto* train = app.add_subcommand("train", "Train the head and save a TGBH model");
    train->add_option("--config", config_path, "JSON run configuration");
    add_data_inputs(train, o);
    add_training(train, o);
    add_common(train, o);
    out_flag(train, "Output model file");
    train->callback([&] { action = [](const RunConfig& c) { tagrec::run_train(c, std::cout); }; });

    auto* calibrate = app.add_subcommand("calibrate", "Sweep the threshold on the validation objects");
    calibrate->add_option("--config", config_path, "JSON run configuration");
    add_data_inputs(calibrate, o);
    add_common(calibrate, o);
    o.add<std::string>(calibrate, "--model", "TGBH model", [](RunConfig& c, const std::string& v) { c.model = v; });
    o.add<std::vector<double>>(calibrate, "--grid", "Explicit threshold grid",
                               [](RunConfig& c, const std::vector<double>& v) { c.grid = v; })
        ->delimiter(',');
    o.add<double>(calibrate, "--grid-min", "Grid start", [](RunConfig& c, double v) { c.grid_min = v; });
    o.add<double>(calibrate, "--grid-max", "Grid end", [](RunConfig& c, double v) { c.grid_max = v; });
    o.add<double>(calibrate, "--grid-step", "Grid step", [](RunConfig& c, double v) { c.grid_step = v; });
    out_flag(calibrate, "Output F1-vs-tau curve (JSON)");
    calibrate->callback([&] { action = [](const RunConfig& c) { tagrec::run_calibrate(c, std::cout); }; });

    auto* evaluate = app.add_subcommand("evaluate", "Recall/Precision/F1 at K on the test split");
    evaluate->add_option("--config", config_path, "JSON run configuration");
    add_data_inputs(evaluate, o);
    add_common(evaluate, o);
    add_training(evaluate, o);
    o.add<std::string>(evaluate, "--model", "TGBH model (single run)",
                       [](RunConfig& c, const std::string& v) { c.model = v; });
    o.add<std::vector<std::size_t>>(evaluate, "--k-list", "Evaluate several K values",
                                    [](RunConfig& c, const std::vector<std::size_t>& v) { c.k_list = v; })
        ->delimiter(',');
    o.add<std::size_t>(evaluate, "--runs", "Repeat split+train+evaluate with seeds seed..seed+R-1",
                       [](RunConfig& c, std::size_t v) { c.runs = v; });
    out_flag(evaluate, "Output JSON report");
    evaluate->callback([&] { action = [](const RunConfig& c) { tagrec::run_evaluate(c, std::cout); }; });

    auto* recommend = app.add_subcommand("recommend", "Write recommended tags as JSON Lines");
    recommend->add_option("--config", config_path, "JSON run configuration");
    add_data_inputs(recommend, o);
    add_common(recommend, o);
    o.add<std::string>(recommend, "--model", "TGBH model", [](RunConfig& c, const std::string& v) { c.model = v; });
    o.add<std::vector<std::string>>(recommend, "--ids", "Object ids (default: the test split)",
                                    [](RunConfig& c, const std::vector<std::string>& v) { c.ids = v; })
        ->delimiter(',');
    out_flag(recommend, "Output JSON Lines file (default: stdout)");
    recommend->callback([&] { action = [](const RunConfig& c) { tagrec::run_recommend(c, std::cout); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        action(build_config(config_path, o));
    } catch (const tagrec::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const tagrec::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
