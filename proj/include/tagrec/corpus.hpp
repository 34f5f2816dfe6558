#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tagrec {

inline constexpr std::size_t kDefaultMinTagFreq = 50;

struct Object {
    std::string id;
    std::string title;
    std::string description;
    std::set<std::string> tags;

    // Text handed to the encoder: preprocessed title, a space, then the
    // preprocessed description.
    std::string text() const;
};

// Tag <-> dense index map. Tags are ordered by descending frequency with
// lexicographic tie-break, so identical corpora always give identical
// vocabularies.
class TagVocabulary {
public:
    TagVocabulary() = default;

    // Builds from (tag, frequency) pairs; order of the input is irrelevant.
    static TagVocabulary from_counts(const std::map<std::string, std::size_t>& counts);

    std::size_t size() const noexcept { return tags_.size(); }
    bool empty() const noexcept { return tags_.empty(); }

    const std::vector<std::string>& tags() const noexcept { return tags_; }
    const std::string& tag(std::size_t index) const { return tags_.at(index); }
    std::size_t frequency(std::size_t index) const { return frequency_.at(index); }
    const std::vector<std::size_t>& frequencies() const noexcept { return frequency_; }

    std::optional<std::size_t> index_of(std::string_view tag) const;

private:
    std::vector<std::string> tags_;
    std::vector<std::size_t> frequency_;
    std::unordered_map<std::string, std::size_t> index_;
};

using LabelVector = std::vector<std::uint8_t>;

struct IngestionReport {
    std::size_t raw_objects = 0;
    std::size_t retained_objects = 0;
    std::size_t dropped_objects = 0;  // lost every tag to the frequency filter
    std::size_t raw_tags = 0;         // distinct normalized tags before filtering
    std::size_t retained_tags = 0;    // vocabulary size N
};

struct LoadedCorpus {
    std::vector<Object> objects;
    TagVocabulary vocab;
    IngestionReport report;
};

// Parses one JSON Lines record. Throws DataError naming `line_no`.
Object parse_object_line(std::string_view line, std::size_t line_no);

// Reads a JSON Lines corpus, normalizes tags, keeps tags seen on at least
// `min_tag_freq` objects, and drops objects left without tags.
LoadedCorpus load_corpus(const std::filesystem::path& path, std::size_t min_tag_freq = kDefaultMinTagFreq);

// Same, over already-parsed objects (ids must be unique).
LoadedCorpus build_corpus(std::vector<Object> raw, std::size_t min_tag_freq = kDefaultMinTagFreq);

LabelVector encode_labels(const Object& object, const TagVocabulary& vocab);

// Inverse of encode_labels: the vocabulary tags whose bit is set.
std::set<std::string> decode_labels(const LabelVector& bits, const TagVocabulary& vocab);

// Indices of set bits, ascending.
std::vector<std::uint32_t> label_indices(const LabelVector& bits);

struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

// `count` distinct positions from [0, n), uniformly without replacement,
// returned ascending. Deterministic for a given seed.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, std::uint64_t seed);

// Samples `test_size` objects uniformly without replacement. Both lists keep
// corpus order.
DatasetSplit split_dataset(const std::vector<Object>& objects, std::size_t test_size, std::uint64_t seed);

}  // namespace tagrec
