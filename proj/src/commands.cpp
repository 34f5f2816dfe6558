#include "tagrec/commands.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tagrec/embedding_store.hpp"
#include "tagrec/errors.hpp"
#include "tagrec/metrics.hpp"
#include "tagrec/model_io.hpp"
#include "tagrec/rng.hpp"
#include "tagrec/text.hpp"

namespace tagrec {

using nlohmann::json;

namespace {

void require_path(const std::string& value, const char* flag) {
    if (value.empty()) throw ArgumentError(std::string("missing required option ") + flag);
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << j.dump(1) << '\n';
    out.close();
    if (!out) throw DataError("I/O failure writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

std::string list_ids(std::span<const std::string> ids) {
    std::string out;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ids[i];
    if (ids.size() > shown) out += fmt::format(" ... ({} more)", ids.size() - shown);
    return out;
}

std::vector<std::string> all_ids(const DatasetBundle& bundle) {
    std::vector<std::string> ids;
    for (const auto& o : bundle.objects) ids.push_back(o.id);
    return ids;
}

// Result of training on one split, shared by `train` and multi-run
// `evaluate`.
struct SplitTraining {
    TrainResult result;
    std::vector<std::string> val_ids;
    std::vector<std::string> too_short;
};

SplitTraining train_on_split(const RunConfig& config, const DatasetBundle& bundle,
                             const std::map<std::string, EmbeddingMatrix>& store, std::uint32_t dim,
                             std::span<const std::string> train_ids, std::uint64_t seed, std::ostream& log) {
    const HeadConfig head = config.head_config(dim, static_cast<std::uint32_t>(bundle.vocab.size()), seed).normalized();
    head.validate();

    SplitTraining out;
    out.val_ids = validation_ids(train_ids, config.val_fraction, seed);
    const std::set<std::string> val_set(out.val_ids.begin(), out.val_ids.end());
    std::vector<std::string> fit_ids;
    for (const auto& id : train_ids)
        if (!val_set.count(id)) fit_ids.push_back(id);

    auto fit = prepare_examples(bundle, fit_ids, store, config, head.max_region());
    auto val = prepare_examples(bundle, out.val_ids, store, config, head.max_region());
    out.too_short = fit.too_short;
    out.too_short.insert(out.too_short.end(), val.too_short.begin(), val.too_short.end());
    if (!out.too_short.empty())
        fmt::print(log, "skipping {} object(s) shorter than {} tokens: {}\n", out.too_short.size(), head.max_region(),
                   list_ids(out.too_short));
    if (fit.examples.empty()) throw DataError("no usable training objects");
    // Without a held-out slice, model selection falls back to the training set.
    std::span<const LabeledExample> val_span = val.examples.empty() ? std::span<const LabeledExample>(fit.examples)
                                                                    : std::span<const LabeledExample>(val.examples);
    if (val.examples.empty()) out.val_ids.clear();

    fmt::print(log, "training on {} objects, validating on {} (N={}, D={})\n", fit.examples.size(),
               val_span.size(), head.num_tags, head.dim);
    const auto params = config.train_params(seed);
    out.result = train(init_model(head), fit.examples, val_span, params, [&](const EpochRecord& r) {
        fmt::print(log, "epoch {:4d}  train_loss {:.6f}  val_loss {:.6f}  val_f1@{} {:.4f}\n", r.epoch, r.train_loss,
                   r.val_loss, params.k, r.val_f1);
    });
    return out;
}

json history_json(const TrainResult& r) {
    json h = json::array();
    for (const auto& e : r.history)
        h.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_f1", e.val_f1}});
    return h;
}

struct LoadedModel {
    HeadModel model;
    json meta;
};

LoadedModel load_model_with_meta(const std::filesystem::path& path) {
    LoadedModel out{load_model(path), json::object()};
    const auto meta_path = model_meta_path(path);
    if (std::filesystem::exists(meta_path)) {
        out.meta = read_json(meta_path);
        if (out.meta.value("format", "") != kModelMetaFormat) throw DataError("not a model sidecar: " + meta_path.string());
    }
    return out;
}

void check_model_against(const HeadModel& model, const DatasetBundle& bundle, std::uint32_t dim) {
    if (model.config.num_tags != bundle.vocab.size())
        throw DimensionError(fmt::format("model has N={} tags but the bundle vocabulary has {}", model.config.num_tags,
                                         bundle.vocab.size()));
    if (model.config.dim != dim)
        throw DimensionError(fmt::format("model expects D={} but the embedding store has D={}", model.config.dim, dim));
}

std::string percent(double v) { return fmt::format("{:.2f}", 100.0 * v); }

// Training-set tag frequencies mapped onto the bundle vocabulary.
RecommendationSet popularity_for(const DatasetBundle& bundle, std::span<const std::string> train_ids, std::size_t k) {
    std::map<std::string, std::size_t> counts;
    for (const auto& t : bundle.vocab.tags()) counts[t] = 0;
    std::map<std::string, const Object*> by_id;
    for (const auto& o : bundle.objects) by_id[o.id] = &o;
    for (const auto& id : train_ids)
        for (const auto& t : by_id.at(id)->tags) ++counts[t];
    const auto train_vocab = TagVocabulary::from_counts(counts);
    auto set = baseline_popularity(train_vocab, k);
    for (auto& item : set.items) item.index = static_cast<std::uint32_t>(*bundle.vocab.index_of(item.tag));
    return set;
}

struct RunReports {
    // keyed by (k, mode)
    std::map<std::pair<std::size_t, DenominatorMode>, MetricsReport> thresholded, forced_topk, popularity;
};

RunReports evaluate_all(const HeadModel& model, std::span<const LabeledExample> test, const DatasetBundle& bundle,
                        std::span<const std::string> train_ids, const RunConfig& config) {
    RunReports out;
    const auto scores = score_all(model, inputs_of(test));
    const auto truths = truths_of(test);
    for (auto k : config.ks()) {
        const auto pop_template = popularity_for(bundle, train_ids, k);
        std::vector<RecommendationSet> pop(test.size(), pop_template);
        for (std::size_t i = 0; i < test.size(); ++i) pop[i].object_id = test[i].x.object_id;
        for (auto mode : {DenominatorMode::strict_k, DenominatorMode::effective}) {
            out.thresholded[{k, mode}] = evaluate_scores(scores, test, bundle.vocab, config.tau, k, mode);
            out.forced_topk[{k, mode}] = evaluate_scores(scores, test, bundle.vocab, 0.0, k, mode);
            out.popularity[{k, mode}] = score_recommendations(pop, truths, k, mode);
        }
    }
    return out;
}

}  // namespace

std::filesystem::path model_meta_path(const std::filesystem::path& model) {
    auto p = model;
    p += ".json";
    return p;
}

std::map<std::string, EmbeddingMatrix> load_embeddings(const std::filesystem::path& store,
                                                        std::span<const std::string> ids, std::uint32_t* dim) {
    std::set<std::string> wanted(ids.begin(), ids.end());
    EmbeddingStoreReader reader(store);
    std::map<std::string, EmbeddingMatrix> out;
    while (auto m = reader.next())
        if (wanted.count(m->object_id)) out.emplace(m->object_id, std::move(*m));
    std::vector<std::string> missing;
    for (const auto& id : ids)
        if (!out.count(id)) missing.push_back(id);
    if (!missing.empty())
        throw DataError(fmt::format("embedding store {} is missing {} object(s): {}", store.string(), missing.size(),
                                    list_ids(missing)));
    if (dim) *dim = reader.dim();
    return out;
}

PreparedSet prepare_examples(const DatasetBundle& bundle, std::span<const std::string> ids,
                             const std::map<std::string, EmbeddingMatrix>& store, const RunConfig& config,
                             std::size_t min_len) {
    std::map<std::string, const Object*> by_id;
    for (const auto& o : bundle.objects) by_id[o.id] = &o;

    std::map<std::string, std::size_t> lengths;
    for (const auto& id : ids) {
        auto it = store.find(id);
        if (it == store.end()) throw DataError("no embedding for object " + id);
        lengths[id] = it->second.valid_len;
    }
    const auto plan = plan_buckets(lengths, config.boundaries, config.max_seq_len);

    PreparedSet out;
    for (const auto& id : ids) {
        auto obj = by_id.find(id);
        if (obj == by_id.end()) throw DataError("object " + id + " is not in the dataset bundle");
        const auto& m = store.at(id);
        if (std::min(m.valid_len, config.max_seq_len) < min_len) {
            out.too_short.push_back(id);
            continue;
        }
        out.examples.push_back({pad_to(m, plan.assignment.at(id)), encode_labels(*obj->second, bundle.vocab)});
    }
    return out;
}

std::vector<std::string> validation_ids(std::span<const std::string> train_ids, double fraction, std::uint64_t seed) {
    const auto count = static_cast<std::size_t>(fraction * static_cast<double>(train_ids.size()));
    if (count == 0 || count >= train_ids.size()) return {};
    std::vector<std::string> out;
    for (auto i : sample_without_replacement(train_ids.size(), count, mix64(seed ^ 0x76616cULL)))
        out.push_back(train_ids[i]);
    return out;
}

DatasetBundle run_ingest(const RunConfig& config, std::ostream& log) {
    config.validate();
    require_path(config.corpus, "--corpus");
    require_path(config.out, "--out");
    auto corpus = load_corpus(config.corpus, config.min_tag_freq);
    const auto& r = corpus.report;
    fmt::print(log, "objects: {} read, {} retained, {} dropped (no frequent tag)\n", r.raw_objects, r.retained_objects,
               r.dropped_objects);
    fmt::print(log, "tags: {} distinct, N={} with frequency >= {}\n", r.raw_tags, r.retained_tags, config.min_tag_freq);

    DatasetBundle bundle;
    bundle.config = to_json(config);
    bundle.report = corpus.report;
    bundle.vocab = std::move(corpus.vocab);
    bundle.objects = std::move(corpus.objects);
    bundle.split = split_dataset(bundle.objects, config.test_size, config.seed);
    save_bundle(bundle, config.out);
    fmt::print(log, "split: {} train, {} test (seed {})\nwrote {}\n", bundle.split.train.size(),
               bundle.split.test.size(), config.seed, config.out);
    return bundle;
}

std::uint64_t run_embed_mock(const RunConfig& config, std::ostream& log) {
    config.validate();
    require_path(config.bundle, "--data");
    require_path(config.out, "--out");
    const auto bundle = load_bundle(config.bundle);
    EmbeddingStoreWriter writer(config.out, static_cast<std::uint32_t>(config.mock_dim));
    for (const auto& o : bundle.objects) {
        auto tokens = mock_token_ids(o.text());
        if (tokens.size() > config.max_seq_len) tokens.resize(config.max_seq_len);
        writer.write(mock_embed(tokens, config.mock_dim, config.seed, o.id));
    }
    const auto n = writer.close();
    fmt::print(log, "wrote {} mock embedding records (D={}) to {}\n", n, config.mock_dim, config.out);
    return n;
}

TrainResult run_train(const RunConfig& config, std::ostream& log) {
    config.validate();
    require_path(config.bundle, "--data");
    require_path(config.embeddings, "--emb");
    require_path(config.out, "--out");
    const auto bundle = load_bundle(config.bundle);
    std::uint32_t dim = 0;
    const auto store = load_embeddings(config.embeddings, bundle.split.train, &dim);

    auto trained = train_on_split(config, bundle, store, dim, bundle.split.train, config.seed, log);
    const auto& result = trained.result;
    save_model(result.model, config.out);
    write_json(model_meta_path(config.out),
               {{"format", kModelMetaFormat},
                {"version", kArtifactVersion},
                {"model_format_version", kModelVersion},
                {"config", to_json(config)},
                {"best_epoch", result.best_epoch},
                {"stopped_early", result.stopped_early},
                {"history", history_json(result)},
                {"val_ids", trained.val_ids},
                {"skipped_ids", trained.too_short}});
    const auto& best = result.history[result.best_epoch];
    fmt::print(log, "best epoch {} by validation {} (val_loss {:.6f}, val F1@{} {:.4f}){}\nwrote {}\n",
               result.best_epoch, to_string(config.select_by), best.val_loss, config.k, best.val_f1,
               result.stopped_early ? ", stopped early" : "", config.out);
    return result;
}

CalibrationResult run_calibrate(const RunConfig& config, std::ostream& log) {
    config.validate();
    require_path(config.model, "--model");
    require_path(config.bundle, "--data");
    require_path(config.embeddings, "--emb");
    const auto [model, meta] = load_model_with_meta(config.model);
    const auto bundle = load_bundle(config.bundle);

    std::vector<std::string> ids;
    if (meta.contains("val_ids")) ids = meta.at("val_ids").get<std::vector<std::string>>();
    if (ids.empty()) ids = bundle.split.train;
    std::uint32_t dim = 0;
    const auto store = load_embeddings(config.embeddings, ids, &dim);
    check_model_against(model, bundle, dim);
    const auto val = prepare_examples(bundle, ids, store, config, model.config.max_region());

    const auto grid = config.tau_grid();
    const auto result = calibrate_threshold(model, val.examples, config.k, grid);
    fmt::print(log, "grid: {} values from {} to {}\n", grid.size(), grid.front(), grid.back());
    fmt::print(log, "best tau = {} (F1@{} = {:.4f}, effective denominator, {} validation objects)\n", result.best_tau,
               config.k, result.best_f1, val.examples.size());
    if (!config.out.empty()) {
        json curve = json::array();
        for (const auto& p : result.curve) curve.push_back({{"tau", p.tau}, {"f1", p.f1}});
        write_json(config.out, {{"format", kCalibrationFormat},
                                {"version", kArtifactVersion},
                                {"config", to_json(config)},
                                {"k", config.k},
                                {"best_tau", result.best_tau},
                                {"best_f1", result.best_f1},
                                {"curve", curve}});
        fmt::print(log, "wrote {}\n", config.out);
    }
    return result;
}

json run_evaluate(const RunConfig& config, std::ostream& log) {
    config.validate();
    require_path(config.bundle, "--data");
    require_path(config.embeddings, "--emb");
    const auto bundle = load_bundle(config.bundle);
    const auto ks = config.ks();

    std::vector<RunReports> runs;
    std::size_t test_objects = 0;
    if (config.runs == 1) {
        require_path(config.model, "--model");
        const auto [model, meta] = load_model_with_meta(config.model);
        std::uint32_t dim = 0;
        const auto store = load_embeddings(config.embeddings, bundle.split.test, &dim);
        check_model_against(model, bundle, dim);
        const auto test = prepare_examples(bundle, bundle.split.test, store, config, model.config.max_region());
        if (!test.too_short.empty())
            fmt::print(log, "skipping {} test object(s) that are too short: {}\n", test.too_short.size(),
                       list_ids(test.too_short));
        test_objects = test.examples.size();
        runs.push_back(evaluate_all(model, test.examples, bundle, bundle.split.train, config));
    } else {
        // Repeated runs: fresh split and fresh head for each seed.
        std::uint32_t dim = 0;
        const auto ids = all_ids(bundle);
        const auto store = load_embeddings(config.embeddings, ids, &dim);
        for (std::size_t r = 0; r < config.runs; ++r) {
            const std::uint64_t seed = config.seed + r;
            fmt::print(log, "run {}/{} (seed {})\n", r + 1, config.runs, seed);
            const auto split = split_dataset(bundle.objects, bundle.split.test.size(), seed);
            const auto trained = train_on_split(config, bundle, store, dim, split.train, seed, log);
            const auto& model = trained.result.model;
            const auto test = prepare_examples(bundle, split.test, store, config, model.config.max_region());
            test_objects = test.examples.size();
            runs.push_back(evaluate_all(model, test.examples, bundle, split.train, config));
        }
    }

    const auto combine = [&](auto member, std::size_t k, DenominatorMode mode) {
        std::vector<MetricsReport> rs;
        for (const auto& run : runs) rs.push_back((run.*member).at({k, mode}));
        return multi_run_report(rs);
    };

    json reports = json::array(), forced = json::array(), popular = json::array();
    for (auto k : ks) {
        fmt::print(log, "\nK={}  tau={}  test objects={}  runs={}\n", k, config.tau, test_objects, config.runs);
        fmt::print(log, "{:<12}{:>14}{:>15}{:>12}\n", "denominator", fmt::format("F1-score@{}", k),
                   fmt::format("Precision@{}", k), fmt::format("Recall@{}", k));
        for (auto mode : {DenominatorMode::strict_k, DenominatorMode::effective}) {
            const auto rep = combine(&RunReports::thresholded, k, mode);
            fmt::print(log, "{:<12}{:>14}{:>15}{:>12}\n", to_string(mode), percent(rep.f1), percent(rep.precision),
                       percent(rep.recall));
            reports.push_back(to_json(rep));
            forced.push_back(to_json(combine(&RunReports::forced_topk, k, mode), false));
            popular.push_back(to_json(combine(&RunReports::popularity, k, mode), false));
        }
    }

    if (ks.size() > 1) {
        for (auto mode : {DenominatorMode::strict_k, DenominatorMode::effective}) {
            fmt::print(log, "\nPrecision by K ({} denominator)\n{:<28}", to_string(mode), "model");
            for (auto k : ks) fmt::print(log, "{:>15}", fmt::format("Precision@{}", k));
            fmt::print(log, "\n");
            const std::pair<std::string, decltype(&RunReports::thresholded)> rows[] = {
                {fmt::format("head (tau={})", config.tau), &RunReports::thresholded},
                {"head (top-K, no threshold)", &RunReports::forced_topk},
                {"popularity baseline", &RunReports::popularity}};
            for (const auto& [name, member] : rows) {
                fmt::print(log, "{:<28}", name);
                for (auto k : ks) fmt::print(log, "{:>15}", percent(combine(member, k, mode).precision));
                fmt::print(log, "\n");
            }
        }
    }

    json out{{"format", kReportFormat},
             {"version", kArtifactVersion},
             {"config", to_json(config)},
             {"tau", config.tau},
             {"test_objects", test_objects},
             {"reports", reports},
             {"comparisons", {{"forced_topk", forced}, {"popularity", popular}}}};
    if (!config.out.empty()) {
        write_json(config.out, out);
        fmt::print(log, "\nwrote {}\n", config.out);
    }
    return out;
}

std::size_t run_recommend(const RunConfig& config, std::ostream& log) {
    config.validate();
    require_path(config.model, "--model");
    require_path(config.bundle, "--data");
    require_path(config.embeddings, "--emb");
    const auto [model, meta] = load_model_with_meta(config.model);
    const auto bundle = load_bundle(config.bundle);

    std::vector<std::string> ids = config.ids.empty() ? bundle.split.test : config.ids;
    std::set<std::string> known;
    for (const auto& o : bundle.objects) known.insert(o.id);
    std::vector<std::string> unknown;
    for (const auto& id : ids)
        if (!known.count(id)) unknown.push_back(id);
    if (!unknown.empty()) throw DataError("unknown object id(s): " + list_ids(unknown));

    std::uint32_t dim = 0;
    const auto store = load_embeddings(config.embeddings, ids, &dim);
    check_model_against(model, bundle, dim);
    const auto prepared = prepare_examples(bundle, ids, store, config, model.config.max_region());
    if (!prepared.too_short.empty())
        throw DataError("object(s) too short to score: " + list_ids(prepared.too_short));
    const auto scores = score_all(model, inputs_of(prepared.examples));

    std::ofstream file;
    if (!config.out.empty()) {
        file.open(config.out, std::ios::binary | std::ios::trunc);
        if (!file) throw DataError("cannot open for writing: " + config.out);
    }
    std::ostream& out = config.out.empty() ? log : file;
    for (std::size_t i = 0; i < prepared.examples.size(); ++i) {
        const auto rec = apply_threshold_topk(scores[i], bundle.vocab, config.tau, config.k, ids[i]);
        json tags = json::array(), sc = json::array();
        for (const auto& item : rec.items) {
            tags.push_back(item.tag);
            sc.push_back(item.score);
        }
        out << json{{"id", rec.object_id}, {"tags", tags}, {"scores", sc}}.dump() << '\n';
    }
    if (!config.out.empty()) {
        file.close();
        if (!file) throw DataError("I/O failure writing " + config.out);
        auto meta_out = std::filesystem::path(config.out);
        meta_out += ".meta.json";
        write_json(meta_out, {{"format", "tagrec-recommendations"},
                              {"version", kArtifactVersion},
                              {"config", to_json(config)},
                              {"count", prepared.examples.size()}});
        fmt::print(log, "wrote {} recommendation lines to {}\n", prepared.examples.size(), config.out);
    }
    return prepared.examples.size();
}

}  // namespace tagrec
