#pragma once

// Dataset bundle: vocabulary, retained objects with their encoded labels,
// and the train/test split, written as one JSON document.

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "tagrec/corpus.hpp"

namespace tagrec {

inline constexpr const char* kBundleFormat = "tagrec-bundle";
inline constexpr int kBundleVersion = 1;

struct DatasetBundle {
    nlohmann::json config;  // producing run configuration, verbatim
    IngestionReport report;
    TagVocabulary vocab;
    std::vector<Object> objects;
    DatasetSplit split;

    const Object& object(const std::string& id) const;
};

nlohmann::json to_json(const DatasetBundle& bundle);
DatasetBundle bundle_from_json(const nlohmann::json& j);

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& path);
DatasetBundle load_bundle(const std::filesystem::path& path);

}  // namespace tagrec
