#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tagrec/commands.hpp"
#include "tagrec/embedding_store.hpp"
#include "tagrec/errors.hpp"
#include "tagrec/metrics.hpp"
#include "tagrec/model_io.hpp"
#include "tagrec/recommend.hpp"
#include "tagrec/text.hpp"

namespace py = pybind11;
using namespace tagrec;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const EmbeddingMatrix& m) {
    py::array_t<float> out({m.rows, m.cols});
    std::copy(m.values.begin(), m.values.end(), out.mutable_data());
    return out;
}

EmbeddingMatrix from_numpy(const std::string& id, const FloatArray& a, std::optional<std::size_t> valid_len) {
    if (a.ndim() != 2) throw ArgumentError("embedding matrix must be two-dimensional");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    EmbeddingMatrix m(id, rows, static_cast<std::size_t>(a.shape(1)), valid_len.value_or(rows));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    return m;
}

py::object to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::dict config_dict(const HeadConfig& c) {
    py::dict d;
    d["dim"] = c.dim;
    d["region_sizes"] = c.region_sizes;
    d["filters"] = c.filters;
    d["hidden"] = c.hidden;
    d["num_tags"] = c.num_tags;
    d["seed"] = c.seed;
    return d;
}

// Runs one pipeline step and returns its log text alongside the result.
template <typename F>
py::tuple run_step(const py::dict& config, F&& step) {
    const auto c = merge_config(RunConfig{}, from_python(config));
    std::ostringstream log;
    auto result = [&] {
        py::gil_scoped_release release;
        return step(c, log);
    }();
    return py::make_tuple(py::cast(std::move(result)), log.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tag recommendation over frozen token embeddings";

    static py::exception<DataError> data_error(m, "DataError", PyExc_RuntimeError);
    static py::exception<NumericError> numeric_error(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ArgumentError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const NumericError& e) {
            py::set_error(numeric_error, e.what());
        }
    });

    m.def("preprocess_text", &preprocess_text, py::arg("text"));
    m.def("mock_token_ids", &mock_token_ids, py::arg("text"));

    m.def(
        "load_corpus",
        [](const std::filesystem::path& path, std::size_t min_tag_freq) {
            const auto c = load_corpus(path, min_tag_freq);
            py::list objects;
            for (const auto& o : c.objects) {
                py::dict d;
                d["id"] = o.id;
                d["title"] = o.title;
                d["description"] = o.description;
                d["tags"] = std::vector<std::string>(o.tags.begin(), o.tags.end());
                d["text"] = o.text();
                objects.append(d);
            }
            py::dict report;
            report["raw_objects"] = c.report.raw_objects;
            report["retained_objects"] = c.report.retained_objects;
            report["dropped_objects"] = c.report.dropped_objects;
            report["raw_tags"] = c.report.raw_tags;
            report["retained_tags"] = c.report.retained_tags;
            py::dict out;
            out["objects"] = objects;
            out["tags"] = c.vocab.tags();
            out["frequencies"] = c.vocab.frequencies();
            out["report"] = report;
            return out;
        },
        py::arg("path"), py::arg("min_tag_freq") = kDefaultMinTagFreq);

    m.def(
        "mock_embed",
        [](const std::vector<std::uint32_t>& tokens, std::size_t dim, std::uint64_t seed) {
            return to_numpy(mock_embed(tokens, dim, seed, ""));
        },
        py::arg("tokens"), py::arg("dim"), py::arg("seed") = 0);

    m.def(
        "read_embedding_store",
        [](const std::filesystem::path& path) {
            py::list out;
            for (const auto& e : read_embedding_store(path)) out.append(py::make_tuple(e.object_id, e.valid_len, to_numpy(e)));
            return out;
        },
        py::arg("path"), "List of (id, valid_len, rows x D float32 array).");

    m.def(
        "write_embedding_store",
        [](const std::filesystem::path& path, std::uint32_t dim, const py::iterable& records) {
            EmbeddingStoreWriter writer(path, dim);
            for (const auto& item : records) {
                const auto rec = item.cast<py::tuple>();
                const auto id = rec[0].cast<std::string>();
                std::optional<std::size_t> valid;
                if (rec.size() > 2) valid = rec[1].cast<std::size_t>();
                writer.write(from_numpy(id, rec[rec.size() - 1].cast<FloatArray>(), valid));
            }
            return writer.close();
        },
        py::arg("path"), py::arg("dim"), py::arg("records"),
        "Records are (id, array) or (id, valid_len, array). Returns the record count.");

    py::class_<HeadModel>(m, "HeadModel")
        .def(py::init([](std::uint32_t dim, std::uint32_t num_tags, std::vector<std::uint32_t> region_sizes,
                         std::uint32_t filters, std::uint32_t hidden, std::uint64_t seed) {
                 HeadConfig c;
                 c.dim = dim;
                 c.num_tags = num_tags;
                 c.region_sizes = std::move(region_sizes);
                 c.filters = filters;
                 c.hidden = hidden;
                 c.seed = seed;
                 return init_model(c);
             }),
             py::arg("dim"), py::arg("num_tags"), py::arg("region_sizes") = std::vector<std::uint32_t>{2, 3, 4},
             py::arg("filters") = 50, py::arg("hidden") = 256, py::arg("seed") = 0)
        .def_static("load", &load_model, py::arg("path"))
        .def("save", [](const HeadModel& self, const std::filesystem::path& p) { save_model(self, p); }, py::arg("path"))
        .def_property_readonly("config", [](const HeadModel& self) { return config_dict(self.config); })
        .def_property_readonly("parameter_count", [](const HeadModel& self) { return self.params.size(); })
        .def(
            "forward",
            [](const HeadModel& self, const FloatArray& x, std::optional<std::size_t> valid_len) {
                return forward(self, from_numpy("", x, valid_len));
            },
            py::arg("x"), py::arg("valid_len") = py::none(), "Scores for one rows x D embedding matrix.")
        .def(
            "loss",
            [](const HeadModel& self, const FloatArray& x, const std::vector<std::uint8_t>& labels) {
                return loss_bce(forward(self, from_numpy("", x, std::nullopt)), labels);
            },
            py::arg("x"), py::arg("labels"))
        .def(
            "gradient_check",
            [](const HeadModel& self, const FloatArray& x, const std::vector<std::uint8_t>& labels, double step,
               double tolerance) {
                const auto r = check_gradients(self, from_numpy("", x, std::nullopt), labels, step, tolerance);
                py::dict d;
                d["checked"] = r.checked;
                d["failures"] = r.failures;
                d["max_relative_error"] = r.max_relative_error;
                return d;
            },
            py::arg("x"), py::arg("labels"), py::arg("step") = 1e-3, py::arg("tolerance") = 1e-4)
        .def("__eq__", [](const HeadModel& a, const HeadModel& b) { return a == b; });

    m.def(
        "select_threshold_topk",
        [](const std::vector<double>& scores, double tau, std::size_t k) {
            return select_threshold_topk(scores, tau, k);
        },
        py::arg("scores"), py::arg("tau"), py::arg("k"),
          "Indices of scores >= tau, best first, at most k.");
    m.def("default_tau_grid", &default_tau_grid);
    m.def(
        "calibrate_threshold",
        [](const std::vector<ScoreVector>& scores, const std::vector<std::vector<std::uint32_t>>& truths,
           std::size_t k, const std::vector<double>& grid) {
            const auto r = calibrate_threshold(scores, truths, k, grid);
            py::list curve;
            for (const auto& p : r.curve) curve.append(py::make_tuple(p.tau, p.f1));
            py::dict d;
            d["best_tau"] = r.best_tau;
            d["best_f1"] = r.best_f1;
            d["curve"] = curve;
            return d;
        },
        py::arg("scores"), py::arg("truths"), py::arg("k"), py::arg("grid") = default_tau_grid());

    m.def("recall_at_k", &recall_at_k, py::arg("hits"), py::arg("truth_size"), py::arg("k"));
    m.def(
        "precision_at_k",
        [](std::size_t hits, std::size_t recommended, std::size_t k, const std::string& mode) {
            return precision_at_k(hits, recommended, k, parse_denominator(mode));
        },
        py::arg("hits"), py::arg("recommended_size"), py::arg("k"), py::arg("mode") = "effective");
    m.def("f1_at_k", &f1_at_k_single, py::arg("precision"), py::arg("recall"));
    m.def(
        "evaluate",
        [](const std::vector<std::vector<std::uint32_t>>& recommended,
           const std::vector<std::vector<std::uint32_t>>& truths, std::size_t k, const std::string& mode) {
            std::vector<RecommendationSet> sets;
            for (const auto& r : recommended) {
                RecommendationSet s;
                s.k = k;
                for (auto i : r) s.items.push_back({i, {}, 1.0});
                sets.push_back(std::move(s));
            }
            return to_python(to_json(score_recommendations(sets, truths, k, parse_denominator(mode))));
        },
        py::arg("recommended"), py::arg("truths"), py::arg("k"), py::arg("mode") = "effective",
        "Macro-averaged Recall/Precision/F1@k for tag-index lists.");

    m.def("default_config", [] { return to_python(to_json(RunConfig{})); });
    m.def(
        "run_ingest",
        [](const py::dict& c) {
            return run_step(c, [](const RunConfig& rc, std::ostream& log) { return run_ingest(rc, log).objects.size(); });
        },
        py::arg("config"));
    m.def(
        "run_embed_mock", [](const py::dict& c) { return run_step(c, run_embed_mock); }, py::arg("config"));
    m.def(
        "run_train",
        [](const py::dict& c) {
            return run_step(c, [](const RunConfig& rc, std::ostream& log) { return run_train(rc, log).best_epoch; });
        },
        py::arg("config"));
    m.def(
        "run_calibrate",
        [](const py::dict& c) {
            return run_step(c, [](const RunConfig& rc, std::ostream& log) { return run_calibrate(rc, log).best_tau; });
        },
        py::arg("config"));
    m.def(
        "run_evaluate",
        [](const py::dict& c) {
            return run_step(c, [](const RunConfig& rc, std::ostream& log) { return run_evaluate(rc, log).dump(); });
        },
        py::arg("config"));
    m.def(
        "run_recommend", [](const py::dict& c) { return run_step(c, run_recommend); }, py::arg("config"));
}
