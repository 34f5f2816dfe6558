#pragma once

// End-to-end pipeline steps behind the `tagrec` subcommands. Each step reads
// and writes the artifacts named in its RunConfig and logs a human-readable
// summary to `log`.

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagrec/bundle.hpp"
#include "tagrec/config.hpp"
#include "tagrec/example.hpp"
#include "tagrec/recommend.hpp"
#include "tagrec/train.hpp"

namespace tagrec {

inline constexpr const char* kModelMetaFormat = "tagrec-model-meta";
inline constexpr const char* kReportFormat = "tagrec-report";
inline constexpr const char* kCalibrationFormat = "tagrec-calibration";
inline constexpr int kArtifactVersion = 1;

// Sidecar written next to a model file.
std::filesystem::path model_meta_path(const std::filesystem::path& model);

// Reads the requested ids from a TGBE store. Throws DataError listing the
// ids the store does not contain.
std::map<std::string, EmbeddingMatrix> load_embeddings(const std::filesystem::path& store,
                                                        std::span<const std::string> ids, std::uint32_t* dim = nullptr);

struct PreparedSet {
    std::vector<LabeledExample> examples;
    std::vector<std::string> too_short;  // fewer tokens than the largest region
};

// Pads each object to its bucket and attaches its label vector. Objects
// shorter than `min_len` tokens are left out and listed in too_short.
PreparedSet prepare_examples(const DatasetBundle& bundle, std::span<const std::string> ids,
                             const std::map<std::string, EmbeddingMatrix>& store, const RunConfig& config,
                             std::size_t min_len);

// Held-out slice of the training ids used for model selection.
std::vector<std::string> validation_ids(std::span<const std::string> train_ids, double fraction, std::uint64_t seed);

DatasetBundle run_ingest(const RunConfig& config, std::ostream& log);
std::uint64_t run_embed_mock(const RunConfig& config, std::ostream& log);
TrainResult run_train(const RunConfig& config, std::ostream& log);
CalibrationResult run_calibrate(const RunConfig& config, std::ostream& log);
nlohmann::json run_evaluate(const RunConfig& config, std::ostream& log);
std::size_t run_recommend(const RunConfig& config, std::ostream& log);

}  // namespace tagrec
