#include "tagrec/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "tagrec/errors.hpp"
#include "tagrec/rng.hpp"
#include "tagrec/text.hpp"

namespace tagrec {

using nlohmann::json;

std::string Object::text() const {
    return preprocess_text(title) + " " + preprocess_text(description);
}

TagVocabulary TagVocabulary::from_counts(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> entries(counts.begin(), counts.end());
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    TagVocabulary v;
    for (auto& [tag, freq] : entries) {
        if (v.index_.count(tag)) throw ArgumentError("duplicate tag in vocabulary: " + tag);
        v.index_.emplace(tag, v.tags_.size());
        v.tags_.push_back(tag);
        v.frequency_.push_back(freq);
    }
    return v;
}

std::optional<std::size_t> TagVocabulary::index_of(std::string_view tag) const {
    auto it = index_.find(std::string(tag));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Object parse_object_line(std::string_view line, std::size_t line_no) {
    const auto fail = [&](const std::string& why) {
        return DataError("malformed corpus line " + std::to_string(line_no) + ": " + why);
    };
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw fail(e.what());
    }
    if (!j.is_object()) throw fail("expected a JSON object");
    const auto str_field = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) throw fail(std::string("missing string field \"") + key + "\"");
        return it->get<std::string>();
    };
    Object o;
    o.id = str_field("id");
    if (o.id.empty()) throw fail("empty id");
    o.title = str_field("title");
    o.description = str_field("description");
    auto tags = j.find("tags");
    if (tags == j.end() || !tags->is_array()) throw fail("missing array field \"tags\"");
    for (const auto& t : *tags) {
        if (!t.is_string()) throw fail("non-string tag");
        auto norm = normalize_tag(t.get<std::string>());
        if (!norm.empty()) o.tags.insert(std::move(norm));
    }
    return o;
}

LoadedCorpus load_corpus(const std::filesystem::path& path, std::size_t min_tag_freq) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read corpus file: " + path.string());
    std::vector<Object> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        raw.push_back(parse_object_line(line, line_no));
    }
    if (in.bad()) throw DataError("I/O error while reading " + path.string());
    return build_corpus(std::move(raw), min_tag_freq);
}

LoadedCorpus build_corpus(std::vector<Object> raw, std::size_t min_tag_freq) {
    if (min_tag_freq == 0) throw ArgumentError("min_tag_freq must be positive");
    LoadedCorpus out;
    out.report.raw_objects = raw.size();

    std::unordered_set<std::string> ids;
    std::map<std::string, std::size_t> counts;
    for (const auto& o : raw) {
        if (!ids.insert(o.id).second) throw DataError("duplicate object id: " + o.id);
        for (const auto& t : o.tags) ++counts[t];
    }
    out.report.raw_tags = counts.size();

    std::erase_if(counts, [&](const auto& kv) { return kv.second < min_tag_freq; });
    out.vocab = TagVocabulary::from_counts(counts);
    out.report.retained_tags = out.vocab.size();

    for (auto& o : raw) {
        std::erase_if(o.tags, [&](const std::string& t) { return !counts.count(t); });
        if (o.tags.empty()) {
            ++out.report.dropped_objects;
            continue;
        }
        out.objects.push_back(std::move(o));
    }
    out.report.retained_objects = out.objects.size();
    return out;
}

LabelVector encode_labels(const Object& object, const TagVocabulary& vocab) {
    LabelVector bits(vocab.size(), 0);
    for (const auto& t : object.tags)
        if (auto idx = vocab.index_of(t)) bits[*idx] = 1;
    return bits;
}

std::set<std::string> decode_labels(const LabelVector& bits, const TagVocabulary& vocab) {
    if (bits.size() != vocab.size()) throw DimensionError("label vector length does not match vocabulary size");
    std::set<std::string> tags;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) tags.insert(vocab.tag(i));
    return tags;
}

std::vector<std::uint32_t> label_indices(const LabelVector& bits) {
    std::vector<std::uint32_t> idx;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) idx.push_back(static_cast<std::uint32_t>(i));
    return idx;
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, std::uint64_t seed) {
    if (count > n) throw ArgumentError("cannot sample more items than available");
    // Partial Fisher-Yates over positions.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(order[i], order[j]);
    }
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

DatasetSplit split_dataset(const std::vector<Object>& objects, std::size_t test_size, std::uint64_t seed) {
    const std::size_t n = objects.size();
    if (test_size == 0) throw ArgumentError("test_size must be positive");
    if (test_size >= n)
        throw ArgumentError("test_size (" + std::to_string(test_size) + ") must be smaller than the corpus size (" +
                            std::to_string(n) + ")");
    std::vector<bool> in_test(n, false);
    for (auto i : sample_without_replacement(n, test_size, seed)) in_test[i] = true;

    DatasetSplit split;
    split.seed = seed;
    split.test.reserve(test_size);
    split.train.reserve(n - test_size);
    for (std::size_t i = 0; i < n; ++i) (in_test[i] ? split.test : split.train).push_back(objects[i].id);
    return split;
}

}  // namespace tagrec
